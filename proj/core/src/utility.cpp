#include "rmpc/utility.hpp"

#include <cassert>
#include <utility>

namespace rmpc {

QuadraticTrackingUtility::QuadraticTrackingUtility(int track_index, double track_weight,
                                                   Vec state_weights, Vec control_weights)
    : track_index_(track_index),
      track_weight_(track_weight),
      state_weights_(std::move(state_weights)),
      control_weights_(std::move(control_weights)) {
  assert(track_index_ >= 0 && track_index_ < state_weights_.size());
  assert(track_weight_ >= 0.0);
  assert((state_weights_.array() >= 0.0).all());
  assert((control_weights_.array() >= 0.0).all());
}

double QuadraticTrackingUtility::value(const Vec& x, double r, const Vec& u) const {
  const double e = x[track_index_] - r;
  return track_weight_ * e * e + x.dot(state_weights_.cwiseProduct(x)) +
         u.dot(control_weights_.cwiseProduct(u));
}

void QuadraticTrackingUtility::partials(const Vec& x, double r, const Vec& u, Vec& dl_dx,
                                        Vec& dl_du) const {
  dl_dx = 2.0 * state_weights_.cwiseProduct(x);
  dl_dx[track_index_] += 2.0 * track_weight_ * (x[track_index_] - r);
  dl_du = 2.0 * control_weights_.cwiseProduct(u);
}

QuadraticTrackingUtility vehicle_utility() {
  Vec q(4);
  q << 0, 0, 0, 1;
  Vec rho(1);
  rho << 10.0;
  return QuadraticTrackingUtility(0, 1.0, q, rho);
}

}  // namespace rmpc
