#include "rmpc/config.hpp"

#include "rmpc/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace rmpc {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

double num(const json& obj, const char* key, double fallback) {
  return obj.contains(key) ? obj.at(key).get<double>() : fallback;
}

int integer(const json& obj, const char* key, int fallback) {
  return obj.contains(key) ? obj.at(key).get<int>() : fallback;
}

std::uint64_t u64(const json& obj, const char* key, std::uint64_t fallback) {
  return obj.contains(key) ? obj.at(key).get<std::uint64_t>() : fallback;
}

std::string str(const json& obj, const char* key, const std::string& fallback) {
  return obj.contains(key) ? obj.at(key).get<std::string>() : fallback;
}

Vec vec(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + " must be an array of numbers");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

Mat mat(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty() || !arr[0].is_array())
    throw ConfigError(where + " must be an array of rows");
  Mat m(arr.size(), arr[0].size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].size() != arr[0].size()) throw ConfigError(where + " rows differ in length");
    for (std::size_t j = 0; j < arr[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = arr[i][j].get<double>();
  }
  return m;
}

void parse_model(const json& obj, ModelConfig& out) {
  check_keys(obj, {"kind", "vehicle", "lq"}, "model");
  out.kind = str(obj, "kind", out.kind);
  if (out.kind != "vehicle" && out.kind != "lq")
    throw ConfigError("model.kind must be 'vehicle' or 'lq'");
  if (obj.contains("vehicle")) {
    const json& v = obj.at("vehicle");
    check_keys(v, {"k1", "k2", "m", "a", "b", "Iz", "mu", "f", "vx", "g"}, "model.vehicle");
    VehicleParams& p = out.vehicle;
    p.k1 = num(v, "k1", p.k1);
    p.k2 = num(v, "k2", p.k2);
    p.m_mass = num(v, "m", p.m_mass);
    p.a = num(v, "a", p.a);
    p.b = num(v, "b", p.b);
    p.i_z = num(v, "Iz", p.i_z);
    p.mu = num(v, "mu", p.mu);
    p.f_hz = num(v, "f", p.f_hz);
    p.v_x = num(v, "vx", p.v_x);
    p.g = num(v, "g", p.g);
    if (!p.valid()) throw ConfigError("model.vehicle parameters must be positive");
  }
  if (obj.contains("lq")) {
    const json& v = obj.at("lq");
    check_keys(v, {"n", "m", "seed", "A", "B"}, "model.lq");
    out.lq_n = integer(v, "n", out.lq_n);
    out.lq_m = integer(v, "m", out.lq_m);
    out.lq_seed = u64(v, "seed", out.lq_seed);
    if (v.contains("A") != v.contains("B"))
      throw ConfigError("model.lq needs both A and B or neither");
    if (v.contains("A")) {
      out.lq_explicit = true;
      out.lq_a = mat(v.at("A"), "model.lq.A");
      out.lq_b = mat(v.at("B"), "model.lq.B");
      if (out.lq_a.rows() != out.lq_a.cols() || out.lq_b.rows() != out.lq_a.rows())
        throw ConfigError("model.lq.A must be square and match B's row count");
      out.lq_n = static_cast<int>(out.lq_a.rows());
      out.lq_m = static_cast<int>(out.lq_b.cols());
    }
    if (out.lq_n < 1 || out.lq_m < 1) throw ConfigError("model.lq dims must be >= 1");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"model", "utility", "arch", "control_limit", "trainer", "sampling", "solver",
              "experiment", "output_dir"},
             "config root");

  RunConfig cfg;
  if (root.contains("model")) parse_model(root.at("model"), cfg.model);

  auto model = make_model(cfg.model);
  const int n = model->state_dim();
  const int m = model->input_dim();

  // utility: defaults are the vehicle cost shape, scaled to the model dims
  cfg.utility.state_weights = Vec::Zero(n);
  cfg.utility.control_weights = Vec::Zero(m);
  if (cfg.model.kind == "vehicle") {
    cfg.utility.state_weights[3] = 1.0;
    cfg.utility.control_weights[0] = 10.0;
  } else {
    cfg.utility.control_weights.setConstant(0.1);
  }
  if (root.contains("utility")) {
    const json& v = root.at("utility");
    check_keys(v, {"track_index", "track_weight", "state_weights", "control_weights"}, "utility");
    cfg.utility.track_index = integer(v, "track_index", cfg.utility.track_index);
    cfg.utility.track_weight = num(v, "track_weight", cfg.utility.track_weight);
    if (v.contains("state_weights"))
      cfg.utility.state_weights = vec(v.at("state_weights"), "utility.state_weights");
    if (v.contains("control_weights"))
      cfg.utility.control_weights = vec(v.at("control_weights"), "utility.control_weights");
  }
  if (cfg.utility.state_weights.size() != n)
    throw ConfigError("utility.state_weights must have one entry per state");
  if (cfg.utility.control_weights.size() != m)
    throw ConfigError("utility.control_weights must have one entry per control");
  if (cfg.utility.track_index < 0 || cfg.utility.track_index >= n)
    throw ConfigError("utility.track_index out of range");

  cfg.control_limit = Vec::Constant(m, cfg.model.kind == "vehicle" ? 0.2 : 4.0);
  if (root.contains("control_limit"))
    cfg.control_limit = vec(root.at("control_limit"), "control_limit");
  if (cfg.control_limit.size() != m || !(cfg.control_limit.array() > 0).all())
    throw ConfigError("control_limit needs one positive entry per control");

  cfg.arch.output_scale = cfg.control_limit;
  if (root.contains("arch")) {
    const json& v = root.at("arch");
    check_keys(v, {"hidden", "depth", "cell"}, "arch");
    cfg.arch.hidden = integer(v, "hidden", cfg.arch.hidden);
    cfg.arch.depth = integer(v, "depth", cfg.arch.depth);
    if (v.contains("cell")) cfg.arch.cell = cell_kind_from_string(v.at("cell").get<std::string>());
  }
  if (!cfg.arch.valid()) throw ConfigError("arch.hidden and arch.depth must be >= 1");

  if (root.contains("trainer")) {
    const json& v = root.at("trainer");
    check_keys(v,
               {"learning_rate", "batch_size", "max_iterations", "convergence_eps",
                "smooth_window", "optimizer", "adam_beta1", "adam_beta2", "adam_eps", "seed",
                "n_max", "checkpoint_every", "batched_rollouts"},
               "trainer");
    TrainerConfig& t = cfg.trainer;
    t.learning_rate = num(v, "learning_rate", t.learning_rate);
    t.batch_size = integer(v, "batch_size", t.batch_size);
    t.max_iterations = integer(v, "max_iterations", t.max_iterations);
    t.convergence_eps = num(v, "convergence_eps", t.convergence_eps);
    t.smooth_window = integer(v, "smooth_window", t.smooth_window);
    const std::string opt = str(v, "optimizer", "adam");
    if (opt == "adam")
      t.optimizer = OptimizerKind::adam;
    else if (opt == "gd")
      t.optimizer = OptimizerKind::gd;
    else
      throw ConfigError("trainer.optimizer must be 'gd' or 'adam'");
    t.adam_beta1 = num(v, "adam_beta1", t.adam_beta1);
    t.adam_beta2 = num(v, "adam_beta2", t.adam_beta2);
    t.adam_eps = num(v, "adam_eps", t.adam_eps);
    t.seed = u64(v, "seed", t.seed);
    t.n_max = integer(v, "n_max", t.n_max);
    t.checkpoint_every = integer(v, "checkpoint_every", t.checkpoint_every);
    if (v.contains("batched_rollouts")) t.batched_rollouts = v.at("batched_rollouts").get<bool>();
  }
  if (!cfg.trainer.valid()) throw ConfigError("trainer settings violate their bounds");

  // sampling defaults depend on the model
  if (cfg.model.kind == "vehicle") {
    cfg.sampling.x0_lo = Vec(4);
    cfg.sampling.x0_hi = Vec(4);
    cfg.sampling.x0_lo << -4, -0.3, -2, -0.5;
    cfg.sampling.x0_hi << 4, 0.3, 2, 0.5;
    cfg.sampling.ref.arc_step = cfg.model.vehicle.v_x / cfg.model.vehicle.f_hz;
  } else {
    cfg.sampling.x0_lo = Vec::Constant(n, -1.0);
    cfg.sampling.x0_hi = Vec::Constant(n, 1.0);
    cfg.sampling.ref = {0.0, 0.5, 0.05, 0.5, -0.8, 0.8, 1.0};
  }
  if (root.contains("sampling")) {
    const json& v = root.at("sampling");
    check_keys(v, {"x0_min", "x0_max", "ref"}, "sampling");
    if (v.contains("x0_min")) cfg.sampling.x0_lo = vec(v.at("x0_min"), "sampling.x0_min");
    if (v.contains("x0_max")) cfg.sampling.x0_hi = vec(v.at("x0_max"), "sampling.x0_max");
    if (v.contains("ref")) {
      const json& r = v.at("ref");
      check_keys(r, {"amplitude", "omega", "offset", "arc_step"}, "sampling.ref");
      ReferenceSpec& spec = cfg.sampling.ref;
      if (r.contains("amplitude")) {
        Vec a = vec(r.at("amplitude"), "sampling.ref.amplitude");
        if (a.size() != 2) throw ConfigError("sampling.ref.amplitude must be [lo, hi]");
        spec.amplitude_lo = a[0];
        spec.amplitude_hi = a[1];
      }
      if (r.contains("omega")) {
        Vec a = vec(r.at("omega"), "sampling.ref.omega");
        if (a.size() != 2) throw ConfigError("sampling.ref.omega must be [lo, hi]");
        spec.omega_lo = a[0];
        spec.omega_hi = a[1];
      }
      if (r.contains("offset")) {
        Vec a = vec(r.at("offset"), "sampling.ref.offset");
        if (a.size() != 2) throw ConfigError("sampling.ref.offset must be [lo, hi]");
        spec.offset_lo = a[0];
        spec.offset_hi = a[1];
      }
      spec.arc_step = num(r, "arc_step", spec.arc_step);
    }
  }
  if (static_cast<int>(cfg.sampling.x0_lo.size()) != n ||
      static_cast<int>(cfg.sampling.x0_hi.size()) != n)
    throw ConfigError("sampling.x0_min/x0_max must have one entry per state");
  if (!cfg.sampling.valid()) throw ConfigError("sampling ranges are invalid");

  if (root.contains("solver")) {
    const json& v = root.at("solver");
    check_keys(v, {"max_iterations", "tolerance", "multistarts", "lbfgs_memory", "seed"},
               "solver");
    cfg.solver.max_iterations = integer(v, "max_iterations", cfg.solver.max_iterations);
    cfg.solver.tolerance = num(v, "tolerance", cfg.solver.tolerance);
    cfg.solver.multistarts = integer(v, "multistarts", cfg.solver.multistarts);
    cfg.solver.lbfgs_memory = integer(v, "lbfgs_memory", cfg.solver.lbfgs_memory);
    cfg.solver.seed = u64(v, "seed", cfg.solver.seed);
  }
  if (cfg.solver.max_iterations < 1 || !(cfg.solver.tolerance > 0) || cfg.solver.multistarts < 1)
    throw ConfigError("solver settings violate their bounds");

  if (root.contains("experiment")) {
    const json& v = root.at("experiment");
    check_keys(v,
               {"eval_samples", "episodes", "episode_steps", "timing_trials", "fixed_cycles",
                "horizons", "budget_s", "budget_clock", "fake_cycle_s", "budget_rule",
                "plant_perturbation", "eval_seed"},
               "experiment");
    ExperimentConfig& e = cfg.experiment;
    e.eval_samples = integer(v, "eval_samples", e.eval_samples);
    e.episodes = integer(v, "episodes", e.episodes);
    e.episode_steps = integer(v, "episode_steps", e.episode_steps);
    e.timing_trials = integer(v, "timing_trials", e.timing_trials);
    if (v.contains("fixed_cycles"))
      for (const auto& c : v.at("fixed_cycles")) e.fixed_cycles.push_back(c.get<int>());
    if (v.contains("horizons"))
      for (const auto& c : v.at("horizons")) e.horizons.push_back(c.get<int>());
    e.budget_s = num(v, "budget_s", e.budget_s);
    e.budget_clock = str(v, "budget_clock", e.budget_clock);
    e.fake_cycle_s = num(v, "fake_cycle_s", e.fake_cycle_s);
    e.budget_rule = str(v, "budget_rule", e.budget_rule);
    e.plant_perturbation = num(v, "plant_perturbation", e.plant_perturbation);
    e.eval_seed = u64(v, "eval_seed", e.eval_seed);
    if (e.budget_clock != "real" && e.budget_clock != "fake")
      throw ConfigError("experiment.budget_clock must be 'real' or 'fake'");
    if (e.budget_rule != "prefix" && e.budget_rule != "predictive")
      throw ConfigError("experiment.budget_rule must be 'prefix' or 'predictive'");
  }
  for (int c : cfg.experiment.fixed_cycles)
    if (c < 1 || c > cfg.trainer.n_max)
      throw ConfigError("experiment.fixed_cycles entries must lie in [1, n_max]");
  for (int h : cfg.experiment.horizons)
    if (h < 1 || h > cfg.trainer.n_max)
      throw ConfigError("experiment.horizons entries must lie in [1, n_max]");

  cfg.output_dir = str(root, "output_dir", cfg.output_dir);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::shared_ptr<DynamicsModel> make_model(const ModelConfig& config) {
  if (config.kind == "vehicle") return std::make_shared<VehicleModel>(config.vehicle);
  if (config.lq_explicit) return std::make_shared<LinearModel>(config.lq_a, config.lq_b);
  return lq_test_system(config.lq_n, config.lq_m, config.lq_seed);
}

QuadraticTrackingUtility make_utility(const UtilityConfig& config) {
  return QuadraticTrackingUtility(config.track_index, config.track_weight, config.state_weights,
                                  config.control_weights);
}

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json training_sections(const RunConfig& c) {
  json j;
  j["model"] = {{"kind", c.model.kind}};
  if (c.model.kind == "vehicle") {
    const VehicleParams& p = c.model.vehicle;
    j["model"]["vehicle"] = {{"k1", p.k1}, {"k2", p.k2},   {"m", p.m_mass}, {"a", p.a},
                             {"b", p.b},   {"Iz", p.i_z},  {"mu", p.mu},    {"f", p.f_hz},
                             {"vx", p.v_x}, {"g", p.g}};
  } else if (c.model.lq_explicit) {
    j["model"]["lq"] = {{"A", mat_json(c.model.lq_a)}, {"B", mat_json(c.model.lq_b)}};
  } else {
    j["model"]["lq"] = {{"n", c.model.lq_n}, {"m", c.model.lq_m}, {"seed", c.model.lq_seed}};
  }
  j["utility"] = {{"track_index", c.utility.track_index},
                  {"track_weight", c.utility.track_weight},
                  {"state_weights", vec_json(c.utility.state_weights)},
                  {"control_weights", vec_json(c.utility.control_weights)}};
  j["arch"] = {{"hidden", c.arch.hidden}, {"depth", c.arch.depth}, {"cell", to_string(c.arch.cell)}};
  j["control_limit"] = vec_json(c.control_limit);
  j["trainer"] = {{"learning_rate", c.trainer.learning_rate},
                  {"batch_size", c.trainer.batch_size},
                  {"max_iterations", c.trainer.max_iterations},
                  {"convergence_eps", c.trainer.convergence_eps},
                  {"smooth_window", c.trainer.smooth_window},
                  {"optimizer", c.trainer.optimizer == OptimizerKind::adam ? "adam" : "gd"},
                  {"adam_beta1", c.trainer.adam_beta1},
                  {"adam_beta2", c.trainer.adam_beta2},
                  {"adam_eps", c.trainer.adam_eps},
                  {"seed", c.trainer.seed},
                  {"n_max", c.trainer.n_max},
                  {"checkpoint_every", c.trainer.checkpoint_every},
                  {"batched_rollouts", c.trainer.batched_rollouts}};
  j["sampling"] = {{"x0_min", vec_json(c.sampling.x0_lo)},
                   {"x0_max", vec_json(c.sampling.x0_hi)},
                   {"ref",
                    {{"amplitude", {c.sampling.ref.amplitude_lo, c.sampling.ref.amplitude_hi}},
                     {"omega", {c.sampling.ref.omega_lo, c.sampling.ref.omega_hi}},
                     {"offset", {c.sampling.ref.offset_lo, c.sampling.ref.offset_hi}},
                     {"arc_step", c.sampling.ref.arc_step}}}};
  return j;
}

}  // namespace

std::string RunConfig::training_digest() const {
  return fnv1a_hex(training_sections(*this).dump());
}

std::string config_snapshot(const RunConfig& c) {
  json j = training_sections(c);
  j["solver"] = {{"max_iterations", c.solver.max_iterations},
                 {"tolerance", c.solver.tolerance},
                 {"multistarts", c.solver.multistarts},
                 {"lbfgs_memory", c.solver.lbfgs_memory},
                 {"seed", c.solver.seed}};
  json fixed = json::array();
  for (int v : c.experiment.fixed_cycles) fixed.push_back(v);
  json hor = json::array();
  for (int v : c.experiment.horizons) hor.push_back(v);
  j["experiment"] = {{"eval_samples", c.experiment.eval_samples},
                     {"episodes", c.experiment.episodes},
                     {"episode_steps", c.experiment.episode_steps},
                     {"timing_trials", c.experiment.timing_trials},
                     {"fixed_cycles", fixed},
                     {"horizons", hor},
                     {"budget_s", c.experiment.budget_s},
                     {"budget_clock", c.experiment.budget_clock},
                     {"fake_cycle_s", c.experiment.fake_cycle_s},
                     {"budget_rule", c.experiment.budget_rule},
                     {"plant_perturbation", c.experiment.plant_perturbation},
                     {"eval_seed", c.experiment.eval_seed}};
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace rmpc
