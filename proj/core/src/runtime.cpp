#include "rmpc/runtime.hpp"

#include "rmpc/csv.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace rmpc {

std::pair<Vec, int> FixedCycleController::act(const Vec& x, const Eigen::Ref<const Vec>& window) {
  assert(window.size() >= cycles_);
  return {policy_.forward(params_, x, window.head(cycles_)), cycles_};
}

std::pair<Vec, int> BudgetedController::act(const Vec& x, const Eigen::Ref<const Vec>& window) {
  assert(window.size() >= n_max_);
  assert(budget_s_ > 0.0);
  last_cycle_times_.clear();

  std::vector<Vec> h = policy_.zero_hidden();
  double prev = clock_->now_seconds();
  double elapsed = 0.0;

  // Cycle 1 always runs so there is always an output.
  Vec u_best = policy_.cycle(params_, x, window[0], h);
  {
    const double now = clock_->now_seconds();
    elapsed = now - prev;
    prev = now;
    last_cycle_times_.push_back(elapsed);
  }
  int k = 1;
  double max_tc = elapsed;

  for (int c = 2; c <= n_max_; ++c) {
    if (rule_ == BudgetRule::predictive) {
      if (elapsed + max_tc > budget_s_) break;
    } else {
      if (elapsed > budget_s_) break; // already past T; the prefix ends at k
    }
    Vec u = policy_.cycle(params_, x, window[c - 1], h);
    const double now = clock_->now_seconds();
    const double t_c = now - prev;
    prev = now;
    elapsed += t_c;
    max_tc = std::max(max_tc, t_c);
    last_cycle_times_.push_back(t_c);

    if (rule_ == BudgetRule::predictive) {
      k = c;
      u_best = std::move(u);
    } else if (elapsed <= budget_s_) {
      k = c;
      u_best = std::move(u);
    } else {
      break; // this cycle overran; keep the previous output
    }
  }

  last_k_ = k;
  return {u_best, k};
}

std::pair<Vec, int> ShootingController::act(const Vec& x, const Eigen::Ref<const Vec>& window) {
  assert(window.size() >= horizon_);
  MpcSolution sol = solve_shooting(x, window.head(horizon_), model_, utility_, bounds_, cfg_);
  return {sol.first_control(), horizon_};
}

std::pair<Vec, int> LqrController::act(const Vec& x, const Eigen::Ref<const Vec>& window) {
  assert(window.size() >= horizon_);
  MpcSolution sol = lqr_exact(x, window.head(horizon_), model_, utility_);
  return {sol.first_control(), horizon_};
}

double ClosedLoopResult::recompute_cost(const Utility& utility) const {
  double total = 0.0;
  for (int i = 1; i <= controls.cols(); ++i)
    total += utility.value(states.col(i), references[i - 1], controls.col(i - 1));
  return total;
}

ClosedLoopResult closed_loop(Controller& controller, const DynamicsModel& plant,
                             const Vec& reference, const Vec& x0, int n_max, int steps,
                             const Utility& utility, Clock* clock) {
  assert(steps >= 1 && n_max >= 1);
  assert(reference.size() >= steps);
  if (!clock) clock = &monotonic_clock();
  const int n = plant.state_dim();
  const int m = plant.input_dim();

  ClosedLoopResult out;
  out.states.resize(n, steps + 1);
  out.controls.resize(m, steps);
  out.references.resize(steps);
  out.utilities.resize(steps);
  out.k_per_step.resize(steps);
  out.wall_s.resize(steps);
  out.states.col(0) = x0;

  Vec window(n_max);
  Vec x = x0;
  for (int i = 1; i <= steps; ++i) {
    // window r_i .. r_{i+n_max-1}, holding the final value past the end
    for (int j = 0; j < n_max; ++j) {
      const Eigen::Index idx = std::min<Eigen::Index>(i - 1 + j, reference.size() - 1);
      window[j] = reference[idx];
    }
    const double t0 = clock->now_seconds();
    auto [u, k] = controller.act(x, window);
    out.wall_s[i - 1] = clock->now_seconds() - t0;

    Vec x_next = plant.step(x, u);
    if (!x_next.allFinite() || x_next.cwiseAbs().maxCoeff() > kDivergenceLimit)
      throw DivergenceError(i, x_next);

    out.controls.col(i - 1) = u;
    out.references[i - 1] = window[0];
    out.utilities[i - 1] = utility.value(x_next, window[0], u);
    out.k_per_step[i - 1] = k;
    out.total_cost += out.utilities[i - 1];
    out.states.col(i) = x_next;
    x = std::move(x_next);
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  assert(!v.empty());
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

std::vector<TimingRow> timing_benchmark(const Vec& params, const Policy& policy,
                                        const DynamicsModel& model, const Utility& utility,
                                        const ControlBounds& bounds, const ShootingConfig& cfg,
                                        const SamplingDomain& domain, int n_max, int trials,
                                        std::uint64_t seed) {
  assert(trials >= 1);
  Clock& clock = monotonic_clock();
  std::vector<TimingRow> rows;
  rows.reserve(n_max);
  for (int horizon = 1; horizon <= n_max; ++horizon) {
    Rng rng(seed); // same tasks for every horizon
    std::vector<double> policy_ms, solver_ms;
    for (int t = 0; t < trials + 2; ++t) {
      const BatchSample task = sample_task(domain, n_max, rng);
      const auto window = task.window.head(horizon);

      const double t0 = clock.now_seconds();
      volatile double sink = policy.forward(params, task.x0, window)[0];
      (void)sink;
      const double t1 = clock.now_seconds();
      MpcSolution sol = solve_shooting(task.x0, window, model, utility, bounds, cfg);
      const double t2 = clock.now_seconds();
      (void)sol;

      if (t >= 2) { // warmup discarded
        policy_ms.push_back((t1 - t0) * 1e3);
        solver_ms.push_back((t2 - t1) * 1e3);
      }
    }
    rows.push_back({horizon, median_of(policy_ms), median_of(solver_ms)});
  }
  return rows;
}

VehicleParams perturb_params(const VehicleParams& p, double factor) {
  VehicleParams q = p;
  q.k1 *= 1.0 + factor;
  q.k2 *= 1.0 - factor;
  q.m_mass *= 1.0 + factor;
  q.i_z *= 1.0 - factor;
  return q;
}

void write_episode_csv(const ClosedLoopResult& result, double dt, const std::string& path) {
  const int n = static_cast<int>(result.states.rows());
  const int m = static_cast<int>(result.controls.rows());
  std::vector<std::string> cols = {"step", "time_s"};
  for (int i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("r");
  if (m == 1) {
    cols.push_back("u");
  } else {
    for (int j = 0; j < m; ++j) cols.push_back("u" + std::to_string(j));
  }
  cols.insert(cols.end(), {"k", "l", "L_cum"});

  CsvWriter csv(cols);
  double cum = 0.0;
  for (int i = 1; i <= result.controls.cols(); ++i) {
    cum += result.utilities[i - 1];
    std::vector<double> row = {static_cast<double>(i), i * dt};
    for (int j = 0; j < n; ++j) row.push_back(result.states(j, i));
    row.push_back(result.references[i - 1]);
    for (int j = 0; j < m; ++j) row.push_back(result.controls(j, i - 1));
    row.push_back(static_cast<double>(result.k_per_step[i - 1]));
    row.push_back(result.utilities[i - 1]);
    row.push_back(cum);
    csv.add_row(row);
  }
  csv.write(path);
}

}  // namespace rmpc
