#pragma once

#include "rmpc/policy.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace rmpc {

struct CheckpointError : std::runtime_error {
  enum class Kind { io, magic, version, truncated, shape, digest };
  Kind kind;
  CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Self-describing header stored in front of the flat parameter array.
struct CheckpointMeta {
  int format_version = 1;
  PolicyArchitecture arch;
  int state_dim = 0;
  int ref_dim = 1;
  int output_dim = 0;
  InputNormalization norm;
  std::string config_digest;
  std::int64_t iteration = 0;
};

/// Layout: magic "RMPCCKPT", u32 version, u32 header length, JSON header,
/// then the parameters as little-endian IEEE-754 doubles. Round-trips are
/// bit-exact.
void save_checkpoint(const Vec& params, const CheckpointMeta& meta, const std::string& path);

std::pair<Vec, CheckpointMeta> load_checkpoint(const std::string& path);

/// Rebuild the policy a checkpoint was trained for.
Policy policy_from_meta(const CheckpointMeta& meta);

/// Throws CheckpointError(shape) unless the checkpoint matches the
/// requested architecture and dimensions.
void require_compatible(const CheckpointMeta& meta, const PolicyArchitecture& arch, int state_dim,
                        int output_dim);

/// Throws CheckpointError(digest) when the stored training-config digest
/// differs from `expected`.
void require_digest(const CheckpointMeta& meta, const std::string& expected);

/// FNV-1a 64-bit, hex-encoded; used to fingerprint config snapshots.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace rmpc
