#include "rmpc/trainer.hpp"

#include "rmpc/checkpoint.hpp"
#include "rmpc/csv.hpp"
#include "rmpc/log.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>

namespace rmpc {

BatchSample sample_task(const SamplingDomain& domain, int n_max, Rng& rng) {
  assert(domain.valid());
  assert(n_max >= 1);
  BatchSample s;
  s.x0 = rng.uniform_vec(domain.x0_lo, domain.x0_hi);
  const ReferenceSpec& ref = domain.ref;
  const double amp = rng.uniform(ref.amplitude_lo, ref.amplitude_hi);
  const double omega = rng.uniform(ref.omega_lo, ref.omega_hi);
  const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double offset = rng.uniform(ref.offset_lo, ref.offset_hi);
  s.window.resize(n_max);
  for (int i = 1; i <= n_max; ++i)
    s.window[i - 1] = amp * std::sin(omega * ref.arc_step * i + phase) + offset;
  return s;
}

InputNormalization make_normalization(const SamplingDomain& domain) {
  const int n = static_cast<int>(domain.x0_lo.size());
  InputNormalization norm;
  norm.center.resize(n + 1);
  norm.halfwidth.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    norm.center[i] = 0.5 * (domain.x0_lo[i] + domain.x0_hi[i]);
    norm.halfwidth[i] = 0.5 * (domain.x0_hi[i] - domain.x0_lo[i]);
  }
  const ReferenceSpec& ref = domain.ref;
  const double r_lo = ref.offset_lo - ref.amplitude_hi;
  const double r_hi = ref.offset_hi + ref.amplitude_hi;
  norm.center[n] = 0.5 * (r_lo + r_hi);
  norm.halfwidth[n] = 0.5 * (r_hi - r_lo);
  for (Eigen::Index i = 0; i < norm.halfwidth.size(); ++i)
    if (norm.halfwidth[i] <= 0.0) norm.halfwidth[i] = 1.0; // degenerate range
  return norm;
}

void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path) {
  CsvWriter csv({"iteration", "J", "grad_norm", "wall_ms"});
  for (const IterationRecord& rec : history)
    csv.add_row({static_cast<double>(rec.iteration), rec.j, rec.grad_norm, rec.wall_ms});
  csv.write(path);
}

namespace {

std::string checkpoint_path(const std::string& run_dir, int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06d.rmpc", iteration);
  return run_dir + "/checkpoints/" + buf;
}

}  // namespace

TrainResult train(const TrainerConfig& config, const SamplingDomain& domain,
                  const DynamicsModel& model, const Utility& utility,
                  const PolicyArchitecture& arch, const std::string& run_dir,
                  const std::string& config_digest, Clock* clock) {
  assert(config.valid());
  assert(domain.valid());
  assert(static_cast<int>(domain.x0_lo.size()) == model.state_dim());
  assert(arch.output_scale.size() == model.input_dim());
  if (!clock) clock = &monotonic_clock();

  Policy policy(arch, model.state_dim(), 1, model.input_dim(), make_normalization(domain));

  Rng rng(config.seed);
  const std::uint64_t init_seed = rng.next_u64();
  Vec params = policy.init_params(init_seed);

  CheckpointMeta meta;
  meta.arch = arch;
  meta.state_dim = model.state_dim();
  meta.ref_dim = 1;
  meta.output_dim = model.input_dim();
  meta.norm = policy.normalization();
  meta.config_digest = config_digest;

  const bool persist = !run_dir.empty();
  if (persist) {
    std::filesystem::create_directories(run_dir + "/checkpoints");
  }
  auto save = [&](const Vec& p, int iteration, const std::string& path) {
    meta.iteration = iteration;
    save_checkpoint(p, meta, path);
  };

  TrainResult result{params, policy, {}, false, 0};
  result.history.reserve(config.max_iterations);

  // Adam state
  Vec m1 = Vec::Zero(policy.param_count());
  Vec m2 = Vec::Zero(policy.param_count());

  std::deque<double> window;
  double window_sum = 0.0;
  bool have_prev_smoothed = false;
  double prev_smoothed = 0.0;

  std::vector<BatchSample> batch(config.batch_size);
  for (int k = 1; k <= config.max_iterations; ++k) {
    const double t0 = clock->now_seconds();
    for (int s = 0; s < config.batch_size; ++s)
      batch[s] = sample_task(domain, config.n_max, rng);

    BatchResult br;
    try {
      br = batch_objective_and_gradient(batch, params, policy, model, utility,
                                        config.batched_rollouts);
    } catch (const DivergenceError&) {
      if (persist) {
        save(params, k - 1, run_dir + "/checkpoints/ckpt_last_good.rmpc");
        write_history_csv(result.history, run_dir + "/history.csv");
      }
      throw;
    }

    if (config.optimizer == OptimizerKind::gd) {
      params -= config.learning_rate * br.grad;
    } else {
      m1 = config.adam_beta1 * m1 + (1.0 - config.adam_beta1) * br.grad;
      m2 = config.adam_beta2 * m2 +
           (1.0 - config.adam_beta2) * br.grad.cwiseProduct(br.grad);
      const double c1 = 1.0 - std::pow(config.adam_beta1, k);
      const double c2 = 1.0 - std::pow(config.adam_beta2, k);
      params.array() -= config.learning_rate * (m1.array() / c1) /
                        ((m2.array() / c2).sqrt() + config.adam_eps);
    }

    const double wall_ms = (clock->now_seconds() - t0) * 1e3;
    result.history.push_back({k, br.j, br.grad.norm(), wall_ms});
    result.iterations = k;

    if (persist && config.checkpoint_every > 0 && k % config.checkpoint_every == 0)
      save(params, k, checkpoint_path(run_dir, k));

    if (log_level() >= 2 || (log_level() >= 1 && k % 1000 == 0)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "iter %d  J %.6g  |g| %.3g", k, br.j, br.grad.norm());
      log_info(buf);
    }

    // Smoothed |J_{K+1} - J_K| <= eps stop (window 1 = the raw criterion).
    window.push_back(br.j);
    window_sum += br.j;
    if (static_cast<int>(window.size()) > config.smooth_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (static_cast<int>(window.size()) == config.smooth_window) {
      const double smoothed = window_sum / config.smooth_window;
      if (have_prev_smoothed && std::abs(smoothed - prev_smoothed) <= config.convergence_eps) {
        result.converged = true;
        result.params = params;
        break;
      }
      prev_smoothed = smoothed;
      have_prev_smoothed = true;
    }

    result.params = params;
  }

  if (persist) {
    save(result.params, result.iterations, run_dir + "/checkpoints/ckpt_final.rmpc");
    write_history_csv(result.history, run_dir + "/history.csv");
  }
  return result;
}

}  // namespace rmpc
