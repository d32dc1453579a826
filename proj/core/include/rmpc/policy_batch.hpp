#pragma once

#include "rmpc/policy.hpp"

#include <vector>

namespace rmpc {

/// Batched evaluation of one Policy over B samples in lockstep: hidden
/// states become q x B matrices and every product turns into a gemm.
/// Produces the same numbers as per-sample Policy::forward/backward up to
/// floating-point reassociation; the trainer uses this path, everything
/// else uses the per-sample one.
class BatchPolicy {
 public:
  struct CycleTrace {
    Mat input;              // (n + ref) x B, normalized
    std::vector<Mat> z, r, g;
    std::vector<Mat> h;     // q x B per layer
  };

  struct Trace {
    std::vector<CycleTrace> cycles;
    Mat y_raw; // m x B
    Mat u;     // m x B
  };

  explicit BatchPolicy(const Policy& policy) : p_(policy) {}

  /// x0: n x B raw states; window: c x B references, cycle t consumes row
  /// t-1. Fills trace and returns controls m x B.
  Mat forward(const Vec& params, const Mat& x0, const Mat& window, Trace& trace) const;

  /// upstream: m x B = dL/du per sample. grad_params accumulates the SUM
  /// over the batch; grad_x0 (n x B) is overwritten.
  void backward(const Vec& params, const Trace& trace, const Mat& upstream, Vec& grad_params,
                Mat& grad_x0) const;

  const Policy& policy() const { return p_; }

 private:
  const Policy& p_;
};

}  // namespace rmpc
