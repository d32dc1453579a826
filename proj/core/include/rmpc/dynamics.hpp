#pragma once

#include "rmpc/common.hpp"

#include <cstdint>
#include <memory>
#include <utility>

namespace rmpc {

/// Per-entry control box. Bounds must be finite with lo < hi.
struct ControlBounds {
  Vec lo;
  Vec hi;

  static ControlBounds symmetric(int m, double limit) {
    return {Vec::Constant(m, -limit), Vec::Constant(m, limit)};
  }
  Vec clamp(const Vec& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const Vec& u, double slack = 0.0) const {
    return (u.array() >= lo.array() - slack).all() && (u.array() <= hi.array() + slack).all();
  }
};

/// Lateral bicycle model parameters. k1/k2 are the signed cornering
/// stiffnesses as conventionally tabulated (negative); the force model
/// uses their magnitudes.
struct VehicleParams {
  double k1 = -88000.0;   // front cornering stiffness [N/rad]
  double k2 = -94000.0;   // rear cornering stiffness [N/rad]
  double m_mass = 1500.0; // [kg]
  double a = 1.14;        // CG to front axle [m]
  double b = 1.40;        // CG to rear axle [m]
  double i_z = 2420.0;    // yaw inertia [kg m^2]
  double mu = 1.0;        // tire-road friction
  double f_hz = 20.0;     // sampling frequency [Hz]
  double v_x = 16.0;      // constant longitudinal speed [m/s]
  double g = 9.81;        // [m/s^2]

  bool valid() const {
    return m_mass > 0 && i_z > 0 && a > 0 && b > 0 && f_hz > 0 && mu > 0 && v_x > 0 && g > 0;
  }
};

/// Static axle loads: F_zf = b/(a+b) m g, F_zr = a/(a+b) m g.
std::pair<double, double> tire_loads(const VehicleParams& p);

/// Front/rear slip angles at the axles:
///   alpha_f = atan((v_y + a w_r) / v_x) - delta
///   alpha_r = atan((v_y - b w_r) / v_x)
std::pair<double, double> slip_angles(const Vec& x, double delta, const VehicleParams& p);

/// Fiala lateral tire force. C is the stiffness magnitude (> 0). Cubic up
/// to tan(alpha_max) = 3 mu F_z / C, saturated at -sign(alpha) mu F_z
/// beyond; continuous and odd in alpha, |F_y| <= mu F_z.
double fiala_force(double alpha, double c_stiff, double mu, double f_z);

/// Discrete-time system x' = f(x, u). Implementations are immutable and
/// step/Jacobian evaluation is pure.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Vec step(const Vec& x, const Vec& u) const = 0;

  /// A = df/dx (n x n), B = df/du (n x m) at (x, u). Default is central
  /// finite differences on step(); linear models override with the exact
  /// matrices.
  virtual void jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const;
};

/// Forward-Euler bicycle model, state [y, phi, v_y, w_r], input [delta].
class VehicleModel final : public DynamicsModel {
 public:
  explicit VehicleModel(VehicleParams params);

  int state_dim() const override { return 4; }
  int input_dim() const override { return 1; }
  Vec step(const Vec& x, const Vec& u) const override;

  /// Hand-derived Jacobians, valid away from the Fiala saturation knee.
  /// Not the default jacobians() path; kept for cross-checking the finite
  /// differences.
  void analytic_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const;

  const VehicleParams& params() const { return params_; }
  double front_stiffness() const { return c_f_; }
  double rear_stiffness() const { return c_r_; }

 private:
  VehicleParams params_;
  double c_f_, c_r_;   // stiffness magnitudes
  double f_zf_, f_zr_; // axle loads
};

/// x' = A x + B u with exact Jacobians.
class LinearModel final : public DynamicsModel {
 public:
  LinearModel(Mat a, Mat b);

  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int input_dim() const override { return static_cast<int>(b_.cols()); }
  Vec step(const Vec& x, const Vec& u) const override { return a_ * x + b_ * u; }
  void jacobians(const Vec&, const Vec&, Mat& a, Mat& b) const override {
    a = a_;
    b = b_;
  }

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }

 private:
  Mat a_, b_;
};

/// Random linear system with spectral radius 0.9, deterministic in seed.
std::shared_ptr<LinearModel> lq_test_system(int n, int m, std::uint64_t seed);

}  // namespace rmpc
