#pragma once

#include "rmpc/common.hpp"

namespace rmpc {

/// Per-step cost l(x, r, u) >= 0 with partial derivatives. r is the
/// scalar reference the tracked output should follow at that step.
class Utility {
 public:
  virtual ~Utility() = default;
  virtual double value(const Vec& x, double r, const Vec& u) const = 0;
  virtual void partials(const Vec& x, double r, const Vec& u, Vec& dl_dx, Vec& dl_du) const = 0;
};

/// l = w (x[k] - r)^2 + x' diag(q) x + u' diag(rho) u. Covers the vehicle
/// cost (k=0, w=1, q=[0,0,0,1], rho=[10]) and the linear-quadratic test
/// instances; lqr_exact consumes the same coefficients.
class QuadraticTrackingUtility final : public Utility {
 public:
  QuadraticTrackingUtility(int track_index, double track_weight, Vec state_weights, Vec control_weights);

  double value(const Vec& x, double r, const Vec& u) const override;
  void partials(const Vec& x, double r, const Vec& u, Vec& dl_dx, Vec& dl_du) const override;

  int track_index() const { return track_index_; }
  double track_weight() const { return track_weight_; }
  const Vec& state_weights() const { return state_weights_; }
  const Vec& control_weights() const { return control_weights_; }

 private:
  int track_index_;
  double track_weight_;
  Vec state_weights_;
  Vec control_weights_;
};

/// The vehicle path-tracking cost: (y - r)^2 + 10 delta^2 + w_r^2.
QuadraticTrackingUtility vehicle_utility();

}  // namespace rmpc
