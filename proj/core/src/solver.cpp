#include "rmpc/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>

namespace rmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SimData {
  std::vector<Mat> a_jac, b_jac;
  Mat dl_dx, dl_du; // n x N, m x N
};

// Cost of a control sequence; returns inf on non-finite states. Fills
// Jacobian/partial storage when `data` is given.
double simulate_cost(const Vec& z, const Vec& x0, const Eigen::Ref<const Vec>& window,
                     const DynamicsModel& model, const Utility& utility, SimData* data) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  const int n_steps = static_cast<int>(window.size());
  if (data) {
    data->a_jac.resize(n_steps);
    data->b_jac.resize(n_steps);
    data->dl_dx.resize(n, n_steps);
    data->dl_du.resize(m, n_steps);
  }
  Vec x = x0;
  Vec dl_dx(n), dl_du(m);
  double cost = 0.0;
  for (int i = 1; i <= n_steps; ++i) {
    const Vec u = z.segment((i - 1) * m, m);
    Vec x_next = model.step(x, u);
    if (!x_next.allFinite() || x_next.cwiseAbs().maxCoeff() > kDivergenceLimit) return kInf;
    cost += utility.value(x_next, window[i - 1], u);
    if (data) {
      model.jacobians(x, u, data->a_jac[i - 1], data->b_jac[i - 1]);
      utility.partials(x_next, window[i - 1], u, dl_dx, dl_du);
      data->dl_dx.col(i - 1) = dl_dx;
      data->dl_du.col(i - 1) = dl_du;
    }
    x = std::move(x_next);
  }
  return std::isfinite(cost) ? cost : kInf;
}

// dV/du_j by backward sweep over the stored Jacobians.
Vec control_gradient(const SimData& data, int m) {
  const int n_steps = static_cast<int>(data.a_jac.size());
  Vec grad(m * n_steps);
  Vec a = data.dl_dx.col(n_steps - 1);
  for (int i = n_steps; i >= 1; --i) {
    grad.segment((i - 1) * m, m) = data.dl_du.col(i - 1) + data.b_jac[i - 1].transpose() * a;
    if (i > 1) a = data.a_jac[i - 1].transpose() * a + data.dl_dx.col(i - 2);
  }
  return grad;
}

struct StartResult {
  Vec z;
  double cost = kInf;
  int iterations = 0;
  bool converged = false;
};

// Projected quasi-Newton: L-BFGS direction, projection onto the box in
// the backtracking line search, steepest-descent fallback when the
// quasi-Newton step stalls.
StartResult minimize_from(Vec z, const Vec& lo, const Vec& hi, const Vec& x0,
                          const Eigen::Ref<const Vec>& window, const DynamicsModel& model,
                          const Utility& utility, const ShootingConfig& cfg) {
  auto project = [&](const Vec& v) { return v.cwiseMax(lo).cwiseMin(hi); };

  StartResult res;
  z = project(z);
  SimData data;
  double f = simulate_cost(z, x0, window, model, utility, &data);
  if (!std::isfinite(f)) return res;
  Vec g = control_gradient(data, model.input_dim());

  std::deque<std::pair<Vec, Vec>> history; // (s, y)
  const double c1 = 1e-4;

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if ((project(z - g) - z).cwiseAbs().maxCoeff() <= cfg.tolerance) {
      res.converged = true;
      break;
    }

    // two-loop recursion
    Vec d = -g;
    std::vector<double> alpha(history.size());
    for (int k = static_cast<int>(history.size()) - 1; k >= 0; --k) {
      const auto& [s, y] = history[k];
      alpha[k] = s.dot(d) / y.dot(s);
      d -= alpha[k] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      d *= y.dot(s) / y.dot(y);
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& [s, y] = history[k];
      d += (alpha[k] - y.dot(d) / y.dot(s)) * s;
    }

    auto line_search = [&](const Vec& dir, Vec& z_out, double& f_out) {
      double step = 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        Vec cand = project(z + step * dir);
        const double pred = g.dot(cand - z);
        if (pred >= 0.0) {
          step *= 0.5;
          continue;
        }
        const double fc = simulate_cost(cand, x0, window, model, utility, nullptr);
        if (fc <= f + c1 * pred) {
          z_out = std::move(cand);
          f_out = fc;
          return true;
        }
        step *= 0.5;
      }
      return false;
    };

    Vec z_new;
    double f_new;
    bool ok = line_search(d, z_new, f_new);
    if (!ok) {
      history.clear();
      ok = line_search(-g, z_new, f_new);
      if (!ok) break; // no descent left at this scale
    }

    SimData new_data;
    simulate_cost(z_new, x0, window, model, utility, &new_data);
    Vec g_new = control_gradient(new_data, model.input_dim());

    Vec s = z_new - z;
    Vec y = g_new - g;
    if (y.dot(s) > 1e-12 * s.norm() * y.norm()) {
      history.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(history.size()) > cfg.lbfgs_memory) history.pop_front();
    }

    z = std::move(z_new);
    f = f_new;
    g = std::move(g_new);
  }

  res.z = z;
  res.cost = f;
  res.iterations = it;
  return res;
}

}  // namespace

MpcSolution solve_shooting(const Vec& x0, const Eigen::Ref<const Vec>& window,
                           const DynamicsModel& model, const Utility& utility,
                           const ControlBounds& bounds, const ShootingConfig& cfg) {
  const int m = model.input_dim();
  const int n_steps = static_cast<int>(window.size());
  assert(n_steps >= 1);
  assert(bounds.lo.size() == m && bounds.hi.size() == m);
  assert(cfg.multistarts >= 1 && cfg.tolerance > 0 && cfg.max_iterations >= 1);

  Vec lo(m * n_steps), hi(m * n_steps);
  for (int i = 0; i < n_steps; ++i) {
    lo.segment(i * m, m) = bounds.lo;
    hi.segment(i * m, m) = bounds.hi;
  }

  Rng rng(cfg.seed);
  StartResult best;
  bool any = false;
  for (int s = 0; s < cfg.multistarts; ++s) {
    Vec z0 = Vec::Zero(m * n_steps);
    if (s > 0) z0 = rng.uniform_vec(lo, hi);
    StartResult r = minimize_from(std::move(z0), lo, hi, x0, window, model, utility, cfg);
    if (!std::isfinite(r.cost)) continue;
    if (!any || r.cost < best.cost) {
      best = std::move(r);
      any = true;
    }
  }
  if (!any) throw EvalError("shooting solver: every start diverged");

  MpcSolution sol;
  sol.controls.resize(m, n_steps);
  for (int i = 0; i < n_steps; ++i) sol.controls.col(i) = best.z.segment(i * m, m);
  sol.cost = best.cost;
  sol.iterations = best.iterations;
  sol.converged = best.converged;
  return sol;
}

MpcSolution lqr_exact(const Vec& x0, const Eigen::Ref<const Vec>& window, const LinearModel& model,
                      const QuadraticTrackingUtility& utility) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  const int n_steps = static_cast<int>(window.size());
  assert(n_steps >= 1);
  assert((utility.control_weights().array() > 0).all());

  const Mat& a = model.a();
  const Mat& b = model.b();
  const Mat q = utility.state_weights().asDiagonal();
  const Mat r_mat = utility.control_weights().asDiagonal();
  Vec c_sel = Vec::Zero(n);
  c_sel[utility.track_index()] = 1.0;
  const double qt = utility.track_weight();

  // Cost-to-go V_j(x) = x'P x + 2 q'x + c, V_N = 0.
  Mat p = Mat::Zero(n, n);
  Vec qv = Vec::Zero(n);
  double cv = 0.0;
  std::vector<Mat> k_gain(n_steps);
  std::vector<Vec> k_aff(n_steps);

  for (int j = n_steps - 1; j >= 0; --j) {
    const double r_ref = window[j]; // reference for x_{j+1}
    Mat w = qt * (c_sel * c_sel.transpose()) + q + p;
    Vec wv = qv - qt * r_ref * c_sel;
    const double omega = qt * r_ref * r_ref + cv;

    Mat s = b.transpose() * w * b + r_mat;
    auto s_fact = s.ldlt();
    k_gain[j] = s_fact.solve(b.transpose() * w * a);
    k_aff[j] = s_fact.solve(b.transpose() * wv);

    Mat a_cl = a - b * k_gain[j];
    Vec b_cl = -b * k_aff[j];
    p = a_cl.transpose() * w * a_cl + k_gain[j].transpose() * r_mat * k_gain[j];
    p = 0.5 * (p + p.transpose()); // keep symmetric
    qv = a_cl.transpose() * (w * b_cl + wv) + k_gain[j].transpose() * r_mat * k_aff[j];
    cv = b_cl.dot(w * b_cl) + 2.0 * wv.dot(b_cl) + k_aff[j].dot(r_mat * k_aff[j]) + omega;
  }

  MpcSolution sol;
  sol.controls.resize(m, n_steps);
  Vec x = x0;
  for (int j = 0; j < n_steps; ++j) {
    Vec u = -k_gain[j] * x - k_aff[j];
    sol.controls.col(j) = u;
    x = a * x + b * u;
  }
  sol.cost = x0.dot(p * x0) + 2.0 * qv.dot(x0) + cv;
  sol.converged = true;
  return sol;
}

PolicyErrorStats policy_error(const Vec& params, const Policy& policy,
                              const FirstControlOracle& oracle,
                              const std::vector<BatchSample>& eval_set, int horizon) {
  assert(!eval_set.empty());
  assert(horizon >= 1);
  if (policy.output_dim() != 1)
    throw EvalError("policy_error: defined for scalar controls");

  PolicyErrorStats stats;
  stats.u_star_min = kInf;
  stats.u_star_max = -kInf;
  stats.abs_gaps.reserve(eval_set.size());
  for (const BatchSample& s : eval_set) {
    assert(s.window.size() >= horizon);
    const auto window = s.window.head(horizon);
    const double u_star = oracle(s.x0, window)[0];
    const double u_pi = policy.forward(params, s.x0, window)[0];
    stats.abs_gaps.push_back(std::abs(u_star - u_pi));
    stats.u_star_min = std::min(stats.u_star_min, u_star);
    stats.u_star_max = std::max(stats.u_star_max, u_star);
  }
  stats.denom = stats.u_star_max - stats.u_star_min;
  if (!(stats.denom > 1e-9))
    throw EvalError("policy_error: optimal-control range is degenerate");

  double sum = 0.0;
  for (double g : stats.abs_gaps) sum += g;
  const double n = static_cast<double>(stats.abs_gaps.size());
  stats.mean = sum / n / stats.denom;
  double var = 0.0;
  for (double g : stats.abs_gaps) var += std::pow(g / stats.denom - stats.mean, 2);
  var /= std::max(1.0, n - 1.0);
  stats.ci95 = 1.96 * std::sqrt(var / n);
  return stats;
}

}  // namespace rmpc
