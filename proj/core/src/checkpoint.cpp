#include "rmpc/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace rmpc {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'R', 'M', 'P', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_checkpoint(const Vec& params, const CheckpointMeta& meta, const std::string& path) {
  json header = {
      {"format_version", meta.format_version},
      {"arch",
       {{"hidden", meta.arch.hidden},
        {"depth", meta.arch.depth},
        {"cell", to_string(meta.arch.cell)},
        {"output_scale", vec_to_json(meta.arch.output_scale)}}},
      {"state_dim", meta.state_dim},
      {"ref_dim", meta.ref_dim},
      {"output_dim", meta.output_dim},
      {"normalization",
       {{"center", vec_to_json(meta.norm.center)}, {"halfwidth", vec_to_json(meta.norm.halfwidth)}}},
      {"config_digest", meta.config_digest},
      {"iteration", meta.iteration},
      {"param_count", params.size()},
  };
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kVersion;
  const std::uint32_t head_len = static_cast<std::uint32_t>(head.size());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&head_len), sizeof head_len);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(sizeof(double) * params.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "short write to '" + path + "'");
}

std::pair<Vec, CheckpointMeta> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open '" + path + "'");

  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CheckpointError(CheckpointError::Kind::magic, "'" + path + "' is not a checkpoint file");

  std::uint32_t version = 0, head_len = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version) ||
      !in.read(reinterpret_cast<char*>(&head_len), sizeof head_len))
    throw CheckpointError(CheckpointError::Kind::truncated, "'" + path + "' ends inside the header");
  if (version != kVersion)
    throw CheckpointError(CheckpointError::Kind::version,
                          "checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kVersion));

  std::string head(head_len, '\0');
  if (!in.read(head.data(), head_len))
    throw CheckpointError(CheckpointError::Kind::truncated, "'" + path + "' ends inside the header");

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::truncated,
                          std::string("unparseable checkpoint header: ") + e.what());
  }

  CheckpointMeta meta;
  Eigen::Index count = 0;
  try {
    meta.format_version = header.at("format_version").get<int>();
    const json& arch = header.at("arch");
    meta.arch.hidden = arch.at("hidden").get<int>();
    meta.arch.depth = arch.at("depth").get<int>();
    meta.arch.cell = cell_kind_from_string(arch.at("cell").get<std::string>());
    meta.arch.output_scale = vec_from_json(arch.at("output_scale"));
    meta.state_dim = header.at("state_dim").get<int>();
    meta.ref_dim = header.at("ref_dim").get<int>();
    meta.output_dim = header.at("output_dim").get<int>();
    meta.norm.center = vec_from_json(header.at("normalization").at("center"));
    meta.norm.halfwidth = vec_from_json(header.at("normalization").at("halfwidth"));
    meta.config_digest = header.at("config_digest").get<std::string>();
    meta.iteration = header.at("iteration").get<std::int64_t>();
    count = header.at("param_count").get<Eigen::Index>();
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::truncated,
                          std::string("incomplete checkpoint header: ") + e.what());
  }

  Vec params(count);
  if (!in.read(reinterpret_cast<char*>(params.data()),
               static_cast<std::streamsize>(sizeof(double) * count)))
    throw CheckpointError(CheckpointError::Kind::truncated,
                          "'" + path + "' holds fewer parameters than its header declares");
  in.peek();
  if (!in.eof())
    throw CheckpointError(CheckpointError::Kind::truncated,
                          "'" + path + "' has trailing bytes after the parameter array");

  Policy check = policy_from_meta(meta);
  if (check.param_count() != count)
    throw CheckpointError(CheckpointError::Kind::shape,
                          "parameter count does not match the declared architecture");
  return {std::move(params), std::move(meta)};
}

Policy policy_from_meta(const CheckpointMeta& meta) {
  return Policy(meta.arch, meta.state_dim, meta.ref_dim, meta.output_dim, meta.norm);
}

void require_compatible(const CheckpointMeta& meta, const PolicyArchitecture& arch, int state_dim,
                        int output_dim) {
  const bool ok = meta.arch.hidden == arch.hidden && meta.arch.depth == arch.depth &&
                  meta.arch.cell == arch.cell &&
                  meta.arch.output_scale.size() == arch.output_scale.size() &&
                  meta.arch.output_scale.isApprox(arch.output_scale) &&
                  meta.state_dim == state_dim && meta.output_dim == output_dim;
  if (!ok)
    throw CheckpointError(CheckpointError::Kind::shape,
                          "checkpoint architecture does not match the requested one");
}

void require_digest(const CheckpointMeta& meta, const std::string& expected) {
  if (meta.config_digest != expected)
    throw CheckpointError(CheckpointError::Kind::digest,
                          "checkpoint was trained under a different config (digest " +
                              meta.config_digest + ", expected " + expected + ")");
}

}  // namespace rmpc
