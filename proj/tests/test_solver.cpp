#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmpc/solver.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace rmpc;

namespace {

LinearModel scalar_model(double a, double b) {
  Mat ma(1, 1), mb(1, 1);
  ma << a;
  mb << b;
  return LinearModel(ma, mb);
}

}  // namespace

TEST_CASE("one-step scalar problem has the calculus solution") {
  // min (0.9 + 0.1 u)^2 + u^2  ->  u* = -0.09/1.01
  const LinearModel model = scalar_model(0.9, 0.1);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Ones(1));
  Vec x0(1);
  x0 << 1.0;
  Vec window(1);
  window << 0.0;
  const double expect = -0.9 * 0.1 / (0.1 * 0.1 + 1.0);

  const MpcSolution riccati = lqr_exact(x0, window, model, utility);
  CHECK(riccati.first_control()[0] == doctest::Approx(expect).epsilon(1e-12));

  ShootingConfig cfg;
  cfg.tolerance = 1e-10;
  const MpcSolution shot = solve_shooting(x0, window, model, utility,
                                          ControlBounds::symmetric(1, 10.0), cfg);
  CHECK(shot.first_control()[0] == doctest::Approx(expect).epsilon(1e-8));
  CHECK(shot.converged);
}

TEST_CASE("zero state and zero reference sit at the optimum") {
  const LinearModel model = scalar_model(0.9, 0.1);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Ones(1));
  const Vec x0 = Vec::Zero(1);
  const Vec window = Vec::Zero(4);

  const MpcSolution riccati = lqr_exact(x0, window, model, utility);
  CHECK(riccati.cost == doctest::Approx(0.0));
  CHECK(riccati.controls.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  ShootingConfig cfg;
  const MpcSolution shot =
      solve_shooting(x0, window, model, utility, ControlBounds::symmetric(1, 10.0), cfg);
  CHECK(shot.cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Riccati cost is self-consistent with replaying its controls") {
  Rng rng(6);
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull}) {
    auto model = lq_test_system(3, 1, seed);
    QuadraticTrackingUtility utility(0, 1.0, Vec::Constant(3, 0.05), Vec::Constant(1, 0.4));
    Vec x0(3);
    x0 << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
    Vec window(6);
    for (int i = 0; i < 6; ++i) window[i] = rng.uniform(-1, 1);

    const MpcSolution sol = lqr_exact(x0, window, *model, utility);
    const double replay = testing::replay_cost(x0, window, sol.controls, *model, utility);
    CHECK(std::abs(sol.cost - replay) < 1e-10);
  }
}

TEST_CASE("shooting agrees with the Riccati oracle on LQ instances") {
  Rng rng(14);
  ShootingConfig cfg;
  cfg.tolerance = 1e-10;
  cfg.max_iterations = 800;
  for (int inst = 0; inst < 12; ++inst) {
    auto model = lq_test_system(1 + static_cast<int>(rng.next_below(3)), 1, 500 + inst);
    const int n = model->state_dim();
    QuadraticTrackingUtility utility(0, 1.0, Vec::Constant(n, 0.05), Vec::Constant(1, 0.3));
    Vec x0(n);
    for (int i = 0; i < n; ++i) x0[i] = rng.uniform(-1, 1);
    const int horizon = 2 + static_cast<int>(rng.next_below(8));
    Vec window(horizon);
    for (int i = 0; i < horizon; ++i) window[i] = rng.uniform(-1, 1);

    const MpcSolution exact = lqr_exact(x0, window, *model, utility);
    REQUIRE(exact.controls.cwiseAbs().maxCoeff() < 9.0); // bounds must stay inactive
    const MpcSolution shot = solve_shooting(x0, window, *model, utility,
                                            ControlBounds::symmetric(1, 10.0), cfg);
    CHECK(std::abs(shot.first_control()[0] - exact.first_control()[0]) < 1e-6);
    CHECK(shot.cost <= exact.cost + 1e-8);
  }
}

TEST_CASE("shooting respects bounds and never loses to the zero sequence") {
  const VehicleModel model((VehicleParams()));
  const QuadraticTrackingUtility utility = vehicle_utility();
  const ControlBounds bounds = ControlBounds::symmetric(1, 0.2);
  ShootingConfig cfg;
  cfg.max_iterations = 250;

  Rng rng(33);
  for (int inst = 0; inst < 4; ++inst) {
    Vec x0(4);
    x0 << rng.uniform(-3, 3), rng.uniform(-0.2, 0.2), rng.uniform(-1, 1), rng.uniform(-0.3, 0.3);
    Vec window(8);
    for (int i = 0; i < 8; ++i) window[i] = rng.uniform(-2, 2);

    const MpcSolution sol = solve_shooting(x0, window, model, utility, bounds, cfg);
    CHECK(bounds.contains(sol.first_control()));
    for (int i = 0; i < sol.controls.cols(); ++i)
      CHECK(std::abs(sol.controls(0, i)) <= 0.2 + 1e-15);

    const double zero_cost =
        testing::replay_cost(x0, window, Mat::Zero(1, 8), model, utility);
    CHECK(sol.cost <= zero_cost + 1e-12);
    CHECK(sol.cost == doctest::Approx(testing::replay_cost(x0, window, sol.controls, model,
                                                           utility)).epsilon(1e-12));
  }
}

TEST_CASE("more starts never hurt") {
  const VehicleModel model((VehicleParams()));
  const QuadraticTrackingUtility utility = vehicle_utility();
  const ControlBounds bounds = ControlBounds::symmetric(1, 0.2);
  Vec x0(4);
  x0 << 2.0, -0.1, 0.5, 0.2;
  Vec window(6);
  window << 1, 1, 1, 0.5, 0.5, 0.5;

  ShootingConfig one;
  one.multistarts = 1;
  ShootingConfig eight;
  eight.multistarts = 8;
  const double c1 = solve_shooting(x0, window, model, utility, bounds, one).cost;
  const double c8 = solve_shooting(x0, window, model, utility, bounds, eight).cost;
  CHECK(c8 <= c1 + 1e-12);
}

TEST_CASE("policy error") {
  auto model = lq_test_system(2, 1, 88);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Constant(2, 0.05), Vec::Constant(1, 0.3));
  PolicyArchitecture arch;
  arch.hidden = 6;
  arch.depth = 1;
  arch.cell = CellKind::gated;
  arch.output_scale = Vec::Constant(1, 4.0);
  const Policy policy(arch, 2, 1, 1, InputNormalization::identity(3));

  Rng rng(2);
  std::vector<BatchSample> eval_set;
  for (int s = 0; s < 40; ++s) {
    Vec x0(2);
    x0 << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Vec window(4);
    for (int i = 0; i < 4; ++i) window[i] = rng.uniform(-1, 1);
    eval_set.push_back({x0, window});
  }

  const FirstControlOracle lqr_oracle = [&](const Vec& x0, const Eigen::Ref<const Vec>& w) {
    return lqr_exact(x0, w, *model, utility).first_control();
  };

  SUBCASE("a policy evaluated against itself has zero error") {
    const Vec params = policy.init_params(10);
    const FirstControlOracle self = [&](const Vec& x0, const Eigen::Ref<const Vec>& w) {
      return policy.forward(params, x0, w);
    };
    const PolicyErrorStats stats = policy_error(params, policy, self, eval_set, 3);
    CHECK(stats.mean == 0.0);
  }

  SUBCASE("an untrained policy is far from the oracle") {
    const Vec params = policy.init_params(10, 0.0); // outputs identically zero
    const PolicyErrorStats stats = policy_error(params, policy, lqr_oracle, eval_set, 3);
    CHECK(stats.mean > 0.10);
    CHECK(stats.abs_gaps.size() == eval_set.size());
    CHECK(stats.denom > 0.0);
  }

  SUBCASE("degenerate oracle range raises") {
    const Vec params = policy.init_params(10);
    const FirstControlOracle constant = [](const Vec&, const Eigen::Ref<const Vec>&) {
      return Vec::Constant(1, 0.5);
    };
    CHECK_THROWS_AS(policy_error(params, policy, constant, eval_set, 3), EvalError);
  }
}
