#pragma once

#include "rmpc/dynamics.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/solver.hpp"
#include "rmpc/trainer.hpp"
#include "rmpc/utility.hpp"

#include <memory>
#include <string>
#include <vector>

namespace rmpc {

struct ModelConfig {
  std::string kind = "vehicle"; // "vehicle" | "lq"
  VehicleParams vehicle;
  int lq_n = 1;
  int lq_m = 1;
  std::uint64_t lq_seed = 7;
  bool lq_explicit = false;
  Mat lq_a;
  Mat lq_b;
};

struct UtilityConfig {
  int track_index = 0;
  double track_weight = 1.0;
  Vec state_weights;   // sized to the model
  Vec control_weights; // sized to the model
};

struct ExperimentConfig {
  int eval_samples = 256;
  int episodes = 50;
  int episode_steps = 200;
  int timing_trials = 25;
  std::vector<int> fixed_cycles; // empty: {ceil(n_max/3), n_max}
  std::vector<int> horizons;     // empty: 1..n_max
  double budget_s = 0.002;
  std::string budget_clock = "real"; // "real" | "fake"
  double fake_cycle_s = 0.001;
  std::string budget_rule = "prefix"; // "prefix" | "predictive"
  double plant_perturbation = 0.0;
  std::uint64_t eval_seed = 9001;
};

/// Whole-run configuration, parsed strictly: unknown keys are fatal and
/// name the offending key.
struct RunConfig {
  ModelConfig model;
  UtilityConfig utility;
  PolicyArchitecture arch;
  Vec control_limit; // symmetric box; also the policy output scale
  TrainerConfig trainer;
  SamplingDomain sampling;
  ShootingConfig solver;
  ExperimentConfig experiment;
  std::string output_dir = "runs/out";

  ControlBounds bounds() const { return {-control_limit, control_limit}; }

  /// Fingerprint of the training-relevant sections (model, utility, arch,
  /// control limit, trainer, sampling); experiment settings may change
  /// without invalidating a checkpoint.
  std::string training_digest() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::shared_ptr<DynamicsModel> make_model(const ModelConfig& config);
QuadraticTrackingUtility make_utility(const UtilityConfig& config);

/// Canonical JSON snapshot of the parsed config (what the run directory
/// stores).
std::string config_snapshot(const RunConfig& config);

}  // namespace rmpc
