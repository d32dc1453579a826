#pragma once

#include "rmpc/clock.hpp"
#include "rmpc/dynamics.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/solver.hpp"
#include "rmpc/trainer.hpp"
#include "rmpc/utility.hpp"

#include <memory>
#include <string>
#include <vector>

namespace rmpc {

/// How the budgeted controller decides when to stop cycling.
///   prefix:     run cycles while the measured prefix sum fits in T and
///               return the last output whose prefix fit; reproduces
///               k = max{p : sum t_c <= T} exactly for any timing
///               sequence (one cycle of overrun is spent discovering the
///               boundary).
///   predictive: stop before a cycle whose predicted cost (max observed
///               t_c so far) would overflow T; never overruns when cycle
///               times are monotone-stable, but can undershoot the prefix
///               rule when they fluctuate.
enum class BudgetRule { prefix, predictive };

/// One control query: maps (state, reference window) to a control and the
/// number of cycles / prediction steps that produced it.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::pair<Vec, int> act(const Vec& x, const Eigen::Ref<const Vec>& window) = 0;
  virtual std::string name() const = 0;
};

/// pi^c with a fixed cycle count.
class FixedCycleController final : public Controller {
 public:
  FixedCycleController(const Policy& policy, Vec params, int cycles)
      : policy_(policy), params_(std::move(params)), cycles_(cycles) {}
  std::pair<Vec, int> act(const Vec& x, const Eigen::Ref<const Vec>& window) override;
  std::string name() const override { return "policy_c" + std::to_string(cycles_); }

 private:
  const Policy& policy_;
  Vec params_;
  int cycles_;
};

/// Anytime controller: spends up to `budget_s` of clock time per query
/// running recurrent cycles and emits the deepest output the budget
/// affords (at least one cycle, at most n_max).
class BudgetedController final : public Controller {
 public:
  BudgetedController(const Policy& policy, Vec params, int n_max, double budget_s, Clock* clock,
                     BudgetRule rule = BudgetRule::prefix)
      : policy_(policy),
        params_(std::move(params)),
        n_max_(n_max),
        budget_s_(budget_s),
        clock_(clock),
        rule_(rule) {}

  std::pair<Vec, int> act(const Vec& x, const Eigen::Ref<const Vec>& window) override;
  std::string name() const override { return "policy_budgeted"; }

  int last_k() const { return last_k_; }
  const std::vector<double>& last_cycle_times() const { return last_cycle_times_; }

 private:
  const Policy& policy_;
  Vec params_;
  int n_max_;
  double budget_s_;
  Clock* clock_;
  BudgetRule rule_;
  int last_k_ = 0;
  std::vector<double> last_cycle_times_;
};

/// Receding-horizon baseline: one shooting solve per query, first control
/// applied.
class ShootingController final : public Controller {
 public:
  ShootingController(const DynamicsModel& model, const Utility& utility, ControlBounds bounds,
                     ShootingConfig cfg, int horizon)
      : model_(model), utility_(utility), bounds_(std::move(bounds)), cfg_(cfg), horizon_(horizon) {}
  std::pair<Vec, int> act(const Vec& x, const Eigen::Ref<const Vec>& window) override;
  std::string name() const override { return "solver"; }

 private:
  const DynamicsModel& model_;
  const Utility& utility_;
  ControlBounds bounds_;
  ShootingConfig cfg_;
  int horizon_;
};

/// Receding-horizon exact LQR (linear models only).
class LqrController final : public Controller {
 public:
  LqrController(const LinearModel& model, const QuadraticTrackingUtility& utility, int horizon)
      : model_(model), utility_(utility), horizon_(horizon) {}
  std::pair<Vec, int> act(const Vec& x, const Eigen::Ref<const Vec>& window) override;
  std::string name() const override { return "lqr"; }

 private:
  const LinearModel& model_;
  const QuadraticTrackingUtility& utility_;
  int horizon_;
};

struct ClosedLoopResult {
  Mat states;      // n x (steps + 1), column 0 = x0
  Mat controls;    // m x steps
  Vec references;  // r_1 .. r_steps
  Vec utilities;   // l(x_i, r_i, u_{i-1})
  std::vector<int> k_per_step;
  Vec wall_s;      // controller time per step
  double total_cost = 0.0; // L

  double recompute_cost(const Utility& utility) const;
};

/// Runs `steps` closed-loop steps: slice the lookahead window (the final
/// reference value is held to pad past the end), query the controller,
/// advance the plant, accumulate l. Throws DivergenceError with the step
/// index if the plant leaves the sane region.
ClosedLoopResult closed_loop(Controller& controller, const DynamicsModel& plant,
                             const Vec& reference, const Vec& x0, int n_max, int steps,
                             const Utility& utility, Clock* clock = nullptr);

struct TimingRow {
  int horizon = 0;
  double policy_ms = 0.0;
  double solver_ms = 0.0;
};

/// Median wall-clock per query for the policy at c = N cycles vs one
/// shooting solve at horizon N, over `trials` random tasks (two warmup
/// evaluations are discarded per timer).
std::vector<TimingRow> timing_benchmark(const Vec& params, const Policy& policy,
                                        const DynamicsModel& model, const Utility& utility,
                                        const ControlBounds& bounds, const ShootingConfig& cfg,
                                        const SamplingDomain& domain, int n_max, int trials,
                                        std::uint64_t seed);

/// Training-vs-plant mismatch: scales (k1, k2, m, I_z) by (1+e, 1-e,
/// 1+e, 1-e) to stand in for an unmodeled plant.
VehicleParams perturb_params(const VehicleParams& p, double factor);

/// Episode log with the fixed column contract
/// (step,time_s,x...,r,u,k,l,L_cum).
void write_episode_csv(const ClosedLoopResult& result, double dt, const std::string& path);

}  // namespace rmpc
