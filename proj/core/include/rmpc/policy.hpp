#pragma once

#include "rmpc/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rmpc {

enum class CellKind { gated, simple };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& s);

/// Shape of the recurrent policy: `depth` stacked cells of width
/// `hidden`, output squashed by tanh and scaled per entry so controls are
/// bounded by construction.
struct PolicyArchitecture {
  int hidden = 16;
  int depth = 1;
  CellKind cell = CellKind::gated;
  Vec output_scale;

  bool valid() const {
    return hidden >= 1 && depth >= 1 && output_scale.size() >= 1 &&
           (output_scale.array() > 0).all();
  }
};

/// Per-feature affine map applied to the cycle input [x0; r]. Computed
/// from the sampling ranges by the trainer and frozen into checkpoints.
struct InputNormalization {
  Vec center;
  Vec halfwidth; // > 0 entries

  static InputNormalization identity(int dim) {
    return {Vec::Zero(dim), Vec::Ones(dim)};
  }
  Vec apply(const Vec& raw) const { return (raw - center).cwiseQuotient(halfwidth); }
};

/// One named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0; // 0 for bias vectors
  Eigen::Index size() const { return rows * (cols > 0 ? cols : 1); }
};

/// Everything recorded during forward that backward needs. Layer-major
/// per cycle; gate vectors are empty for the simple cell.
struct CycleTrace {
  Vec input;                // normalized [x0; r_c]
  std::vector<Vec> z, r, g; // gated cell activations per layer
  std::vector<Vec> h;       // cell outputs per layer
};

struct PolicyTrace {
  Vec x0;
  std::vector<CycleTrace> cycles;
  Vec y_raw; // tanh output of the final cycle, before scaling
  Vec u;
};

/// The recurrent policy. Immutable description; parameters travel as a
/// flat vector so the optimizer and checkpoints never see the block
/// structure. All evaluation is pure: the hidden state starts at zero for
/// every fresh forward pass and nothing survives between calls.
class Policy {
 public:
  Policy(PolicyArchitecture arch, int state_dim, int ref_dim, int output_dim,
         InputNormalization norm);

  const PolicyArchitecture& arch() const { return arch_; }
  int state_dim() const { return state_dim_; }
  int ref_dim() const { return ref_dim_; }
  int output_dim() const { return output_dim_; }
  int input_dim() const { return state_dim_ + ref_dim_; }
  const InputNormalization& normalization() const { return norm_; }
  const std::vector<ParamBlock>& layout() const { return blocks_; }
  Eigen::Index param_count() const { return param_count_; }

  /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
  /// `scale` shrinks the draw (0 gives the all-zero policy).
  Vec init_params(std::uint64_t seed, double scale = 1.0) const;

  /// One recurrent cycle: consumes (x0, r) and the previous hidden stack,
  /// returns the new stack's control output. h has `depth` entries of
  /// width `hidden`; zero-filled vectors represent h_0 = 0.
  Vec cycle(const Vec& params, const Vec& x0, double r, std::vector<Vec>& h) const;

  std::vector<Vec> zero_hidden() const;

  /// c = window.size() cycles from h_0 = 0, consuming window[t-1] at
  /// cycle t. Returns the final cycle's control; fills `trace` when
  /// given.
  Vec forward(const Vec& params, const Vec& x0, const Eigen::Ref<const Vec>& window,
              PolicyTrace* trace = nullptr) const;

  /// Reverse pass through a recorded forward. grad_params is accumulated
  /// (+=) so rollout gradients can sum over steps; grad_x0 is
  /// overwritten. upstream is dL/du.
  void backward(const Vec& params, const PolicyTrace& trace, const Vec& upstream,
                Vec& grad_params, Vec& grad_x0) const;

  /// Control that the output head assigns to a hidden stack (the anytime
  /// read-out used after any cycle).
  Vec output_from_hidden(const Vec& params, const Vec& h_top) const;

 private:
  friend class BatchPolicy;

  PolicyArchitecture arch_;
  int state_dim_, ref_dim_, output_dim_;
  InputNormalization norm_;
  std::vector<ParamBlock> blocks_;
  Eigen::Index param_count_ = 0;
  // block index helpers
  int per_layer_blocks() const;
  const ParamBlock& layer_block(int layer, int which) const;
  const ParamBlock& head_w() const;
  const ParamBlock& head_b() const;
};

}  // namespace rmpc
