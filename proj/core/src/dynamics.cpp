#include "rmpc/dynamics.hpp"

#include <cassert>
#include <cmath>

namespace rmpc {

std::pair<double, double> tire_loads(const VehicleParams& p) {
  assert(p.valid());
  const double w = p.m_mass * p.g / (p.a + p.b);
  return {p.b * w, p.a * w};
}

std::pair<double, double> slip_angles(const Vec& x, double delta, const VehicleParams& p) {
  assert(x.size() == 4);
  const double v_y = x[2];
  const double w_r = x[3];
  const double alpha_f = std::atan((v_y + p.a * w_r) / p.v_x) - delta;
  const double alpha_r = std::atan((v_y - p.b * w_r) / p.v_x);
  return {alpha_f, alpha_r};
}

double fiala_force(double alpha, double c_stiff, double mu, double f_z) {
  assert(c_stiff > 0 && mu > 0 && f_z > 0);
  const double d = mu * f_z;
  const double tan_max = 3.0 * d / c_stiff;
  const double t = std::tan(alpha);
  if (std::abs(t) > tan_max) return alpha > 0 ? -d : d;
  const double at = std::abs(t);
  const double bracket = c_stiff * c_stiff * t * t / (27.0 * d * d) - c_stiff * at / (3.0 * d) + 1.0;
  return -c_stiff * t * bracket;
}

void DynamicsModel::jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const {
  const int n = state_dim();
  const int m = input_dim();
  a.resize(n, n);
  b.resize(n, m);
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    a.col(j) = (step(xp, u) - step(xm, u)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  Vec up = u, um = u;
  for (int j = 0; j < m; ++j) {
    const double h = std::max(1e-6, 1e-6 * std::abs(u[j]));
    up[j] = u[j] + h;
    um[j] = u[j] - h;
    b.col(j) = (step(x, up) - step(x, um)) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
}

VehicleModel::VehicleModel(VehicleParams params) : params_(params) {
  assert(params_.valid());
  c_f_ = std::abs(params_.k1);
  c_r_ = std::abs(params_.k2);
  std::tie(f_zf_, f_zr_) = tire_loads(params_);
}

Vec VehicleModel::step(const Vec& x, const Vec& u) const {
  assert(x.size() == 4 && u.size() == 1);
  const VehicleParams& p = params_;
  const double phi = x[1], v_y = x[2], w_r = x[3];
  const double delta = u[0];

  const auto [alpha_f, alpha_r] = slip_angles(x, delta, p);
  const double f_yf = fiala_force(alpha_f, c_f_, p.mu, f_zf_);
  const double f_yr = fiala_force(alpha_r, c_r_, p.mu, f_zr_);

  Vec rate(4);
  rate[0] = p.v_x * std::sin(phi) + v_y * std::cos(phi);
  rate[1] = w_r;
  rate[2] = (f_yf * std::cos(delta) + f_yr) / p.m_mass - p.v_x * w_r;
  rate[3] = (p.a * f_yf * std::cos(delta) - p.b * f_yr) / p.i_z;

  Vec next = x + rate / p.f_hz;
  assert(all_finite(next));
  return next;
}

namespace {

// d F_y / d alpha for the Fiala model. Inside the cubic branch this is
// -C (1 - C|tan a|/(3 mu F_z))^2 * sec^2(a); zero when saturated.
double fiala_dalpha(double alpha, double c_stiff, double mu, double f_z) {
  const double d = mu * f_z;
  const double tan_max = 3.0 * d / c_stiff;
  const double t = std::tan(alpha);
  if (std::abs(t) > tan_max) return 0.0;
  const double s = 1.0 - c_stiff * std::abs(t) / (3.0 * d);
  return -c_stiff * s * s * (1.0 + t * t);
}

}  // namespace

void VehicleModel::analytic_jacobians(const Vec& x, const Vec& u, Mat& a, Mat& b) const {
  const VehicleParams& p = params_;
  const double phi = x[1], v_y = x[2], w_r = x[3];
  const double delta = u[0];
  const double dt = 1.0 / p.f_hz;

  const auto [alpha_f, alpha_r] = slip_angles(x, delta, p);
  const double f_yf = fiala_force(alpha_f, c_f_, p.mu, f_zf_);
  const double df = fiala_dalpha(alpha_f, c_f_, p.mu, f_zf_);
  const double dr = fiala_dalpha(alpha_r, c_r_, p.mu, f_zr_);

  // atan arguments: wf = (v_y + a w_r)/v_x, wr = (v_y - b w_r)/v_x.
  const double qf = p.v_x / (p.v_x * p.v_x + std::pow(v_y + p.a * w_r, 2));
  const double qr = p.v_x / (p.v_x * p.v_x + std::pow(v_y - p.b * w_r, 2));
  const double daf_dvy = qf, daf_dwr = p.a * qf, daf_ddelta = -1.0;
  const double dar_dvy = qr, dar_dwr = -p.b * qr;

  const double cd = std::cos(delta), sd = std::sin(delta);

  Mat j = Mat::Zero(4, 4); // d(rate)/dx
  j(0, 1) = p.v_x * std::cos(phi) - v_y * std::sin(phi);
  j(0, 2) = std::cos(phi);
  j(1, 3) = 1.0;
  j(2, 2) = (df * daf_dvy * cd + dr * dar_dvy) / p.m_mass;
  j(2, 3) = (df * daf_dwr * cd + dr * dar_dwr) / p.m_mass - p.v_x;
  j(3, 2) = (p.a * df * daf_dvy * cd - p.b * dr * dar_dvy) / p.i_z;
  j(3, 3) = (p.a * df * daf_dwr * cd - p.b * dr * dar_dwr) / p.i_z;

  Vec jb = Vec::Zero(4); // d(rate)/ddelta
  jb[2] = (df * daf_ddelta * cd - f_yf * sd) / p.m_mass;
  jb[3] = p.a * (df * daf_ddelta * cd - f_yf * sd) / p.i_z;

  a = Mat::Identity(4, 4) + dt * j;
  b = dt * jb;
}

LinearModel::LinearModel(Mat a, Mat b) : a_(std::move(a)), b_(std::move(b)) {
  assert(a_.rows() == a_.cols());
  assert(b_.rows() == a_.rows());
}

std::shared_ptr<LinearModel> lq_test_system(int n, int m, std::uint64_t seed) {
  assert(n >= 1 && m >= 1);
  Rng rng(seed);
  Mat a(n, n), b(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 1e-12) a *= 0.9 / rho;
  return std::make_shared<LinearModel>(std::move(a), std::move(b));
}

}  // namespace rmpc
