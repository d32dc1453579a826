#pragma once

#include "rmpc/clock.hpp"
#include "rmpc/dynamics.hpp"
#include "rmpc/objective.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/utility.hpp"

#include <string>
#include <vector>

namespace rmpc {

/// Reference generator: r_i = A sin(omega s_i + phase) + offset with
/// s_i = i * arc_step, (A, omega, phase, offset) drawn per task. Smooth
/// by construction: |r_{i+1} - r_i| <= A omega arc_step.
struct ReferenceSpec {
  double amplitude_lo = 0.0;
  double amplitude_hi = 3.0;
  double omega_lo = 2.0 * 3.14159265358979323846 / 300.0; // [rad per arc unit]
  double omega_hi = 2.0 * 3.14159265358979323846 / 60.0;  // wavelengths >= 60
  double offset_lo = -1.0;
  double offset_hi = 1.0;
  double arc_step = 0.8; // v_x / f_hz for the vehicle

  bool valid() const {
    return amplitude_lo >= 0 && amplitude_hi >= amplitude_lo && omega_lo >= 0 &&
           omega_hi >= omega_lo && offset_hi >= offset_lo && arc_step > 0;
  }
};

struct SamplingDomain {
  Vec x0_lo;
  Vec x0_hi;
  ReferenceSpec ref;

  bool valid() const {
    return x0_lo.size() == x0_hi.size() && x0_lo.size() > 0 &&
           (x0_lo.array() <= x0_hi.array()).all() && x0_lo.allFinite() && x0_hi.allFinite() &&
           ref.valid();
  }
};

/// Draw (x0, r_{1:n_max}): x0 uniform per entry, reference from the
/// sinusoid family.
BatchSample sample_task(const SamplingDomain& domain, int n_max, Rng& rng);

/// Per-feature normalization for [x0; r] from the sampling ranges.
InputNormalization make_normalization(const SamplingDomain& domain);

enum class OptimizerKind { gd, adam };

struct TrainerConfig {
  double learning_rate = 2e-4;
  int batch_size = 256;
  int max_iterations = 10000;
  double convergence_eps = 1e-4; // on the smoothed |J_{K+1} - J_K|
  int smooth_window = 100;       // 1 recovers the raw criterion
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int n_max = 10;
  int checkpoint_every = 0; // 0: only the final checkpoint
  bool batched_rollouts = true;

  bool valid() const {
    return learning_rate >= 0 && batch_size >= 1 && max_iterations >= 1 &&
           convergence_eps >= 0 && smooth_window >= 1 && n_max >= 1;
  }
};

struct IterationRecord {
  int iteration = 0;
  double j = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  Vec params;
  Policy policy; // carries arch + normalization used for training
  std::vector<IterationRecord> history;
  bool converged = false;
  int iterations = 0;
};

/// Iterates: sample a fresh batch, evaluate J and dJ/dtheta, take a GD
/// (theta -= lr * dJ/dtheta) or Adam step; stops when the smoothed |dJ|
/// drops below convergence_eps or max_iterations is reached. Fully
/// deterministic given the config seed. When run_dir is non-empty, writes
/// history.csv and checkpoints there (cadence per config, plus the final
/// state; on divergence the last good parameters are saved before the
/// error propagates).
TrainResult train(const TrainerConfig& config, const SamplingDomain& domain,
                  const DynamicsModel& model, const Utility& utility,
                  const PolicyArchitecture& arch, const std::string& run_dir = "",
                  const std::string& config_digest = "", Clock* clock = nullptr);

/// History CSV with the fixed column contract.
void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path);

}  // namespace rmpc
