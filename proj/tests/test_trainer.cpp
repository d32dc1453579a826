#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmpc/checkpoint.hpp"
#include "rmpc/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace rmpc;

namespace {

SamplingDomain scalar_domain() {
  SamplingDomain d;
  d.x0_lo = Vec::Constant(1, -1.0);
  d.x0_hi = Vec::Constant(1, 1.0);
  d.ref = {0.0, 0.5, 0.05, 0.5, -0.8, 0.8, 1.0};
  return d;
}

PolicyArchitecture small_arch(int q = 6, double scale = 4.0) {
  PolicyArchitecture arch;
  arch.hidden = q;
  arch.depth = 1;
  arch.cell = CellKind::gated;
  arch.output_scale = Vec::Constant(1, scale);
  return arch;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("rmpc_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("sample_task") {
  const SamplingDomain domain = scalar_domain();

  SUBCASE("fixed seed gives identical draws") {
    Rng a(77), b(77);
    const BatchSample sa = sample_task(domain, 5, a);
    const BatchSample sb = sample_task(domain, 5, b);
    CHECK((sa.x0 - sb.x0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sa.window - sb.window).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero amplitude gives a constant reference at the offset") {
    SamplingDomain flat = domain;
    flat.ref.amplitude_lo = flat.ref.amplitude_hi = 0.0;
    Rng rng(3);
    const BatchSample s = sample_task(flat, 6, rng);
    for (int i = 1; i < 6; ++i) CHECK(s.window[i] == doctest::Approx(s.window[0]).epsilon(1e-15));
    CHECK(s.window[0] >= flat.ref.offset_lo);
    CHECK(s.window[0] <= flat.ref.offset_hi);
  }

  SUBCASE("draws stay inside ranges and steps obey the Lipschitz bound") {
    Rng rng(123);
    const double bound =
        domain.ref.amplitude_hi * domain.ref.omega_hi * domain.ref.arc_step + 1e-12;
    for (int i = 0; i < 10000; ++i) {
      const BatchSample s = sample_task(domain, 4, rng);
      CHECK(s.x0[0] >= -1.0);
      CHECK(s.x0[0] <= 1.0);
      for (int j = 0; j + 1 < 4; ++j) CHECK(std::abs(s.window[j + 1] - s.window[j]) <= bound);
    }
  }
}

TEST_CASE("normalization from the domain") {
  SamplingDomain d;
  d.x0_lo = Vec(2);
  d.x0_hi = Vec(2);
  d.x0_lo << -4.0, 0.0;
  d.x0_hi << 4.0, 1.0;
  d.ref = {0.0, 3.0, 0.02, 0.1, -1.0, 1.0, 0.8};
  const InputNormalization norm = make_normalization(d);
  CHECK(norm.center[0] == 0.0);
  CHECK(norm.halfwidth[0] == 4.0);
  CHECK(norm.center[1] == 0.5);
  CHECK(norm.halfwidth[1] == 0.5);
  CHECK(norm.center[2] == 0.0);  // reference range [-4, 4]
  CHECK(norm.halfwidth[2] == 4.0);

  SUBCASE("degenerate ranges fall back to unit halfwidth") {
    d.x0_lo[1] = d.x0_hi[1] = 0.3;
    d.ref.amplitude_hi = 0.0;
    d.ref.offset_lo = d.ref.offset_hi = 0.0;
    const InputNormalization flat = make_normalization(d);
    CHECK(flat.halfwidth[1] == 1.0);
    CHECK(flat.halfwidth[2] == 1.0);
  }
}

TEST_CASE("a zero learning rate leaves parameters untouched") {
  auto model = lq_test_system(1, 1, 42);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Constant(1, 0.1));

  TrainerConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.optimizer = OptimizerKind::gd;
  cfg.batch_size = 4;
  cfg.max_iterations = 10;
  cfg.convergence_eps = 0.0;
  cfg.smooth_window = 100; // never converges within 10 iters
  cfg.n_max = 3;
  cfg.seed = 9;

  const SamplingDomain domain = scalar_domain();
  const TrainResult res = train(cfg, domain, *model, utility, small_arch());
  const Vec init = res.policy.init_params(Rng(cfg.seed).next_u64());
  CHECK((res.params - init).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.iterations == 10);

  SUBCASE("J history is literally constant on a degenerate domain") {
    SamplingDomain point = domain;
    point.x0_lo[0] = point.x0_hi[0] = 0.4;
    point.ref.amplitude_lo = point.ref.amplitude_hi = 0.0;
    point.ref.offset_lo = point.ref.offset_hi = 0.7;
    const TrainResult fixed = train(cfg, point, *model, utility, small_arch());
    for (const IterationRecord& rec : fixed.history)
      CHECK(rec.j == fixed.history[0].j);
  }
}

TEST_CASE("training is reproducible") {
  auto model = lq_test_system(1, 1, 7);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Constant(1, 0.1));

  TrainerConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.max_iterations = 30;
  cfg.convergence_eps = 0.0;
  cfg.n_max = 3;
  cfg.seed = 2024;

  const SamplingDomain domain = scalar_domain();
  FakeClock c1({0.0, 1e-3}), c2({0.0, 1e-3});
  const TrainResult a = train(cfg, domain, *model, utility, small_arch(), "", "", &c1);
  const TrainResult b = train(cfg, domain, *model, utility, small_arch(), "", "", &c2);
  CHECK((a.params - b.params).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].j == b.history[i].j);
    CHECK(a.history[i].grad_norm == b.history[i].grad_norm);
    CHECK(a.history[i].wall_ms == b.history[i].wall_ms);
  }
}

TEST_CASE("loss trends down on the scalar tracking task") {
  auto model = lq_test_system(1, 1, 7);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Constant(1, 0.1));

  TrainerConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.batch_size = 32;
  cfg.max_iterations = 600;
  cfg.convergence_eps = 0.0;
  cfg.n_max = 3;
  cfg.seed = 5;

  const TrainResult res = train(cfg, scalar_domain(), *model, utility, small_arch(8));
  auto smoothed = [&](std::size_t begin) {
    double s = 0.0;
    for (std::size_t i = begin; i < begin + 100; ++i) s += res.history[i].j;
    return s / 100.0;
  };
  CHECK(smoothed(res.history.size() - 100) < smoothed(0));
}

TEST_CASE("the raw convergence criterion stops a constant loss immediately") {
  auto model = lq_test_system(1, 1, 11);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Constant(1, 0.1));

  TrainerConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.optimizer = OptimizerKind::gd;
  cfg.batch_size = 2;
  cfg.max_iterations = 50;
  cfg.convergence_eps = 1e-9;
  cfg.smooth_window = 1; // |J_{K+1} - J_K| <= eps, Algorithm-1 style
  cfg.n_max = 2;

  SamplingDomain point = scalar_domain();
  point.x0_lo[0] = point.x0_hi[0] = 0.4;
  point.ref.amplitude_lo = point.ref.amplitude_hi = 0.0;
  point.ref.offset_lo = point.ref.offset_hi = 0.7;

  const TrainResult res = train(cfg, point, *model, utility, small_arch());
  CHECK(res.converged);
  CHECK(res.iterations == 2);
}

TEST_CASE("checkpoints") {
  PolicyArchitecture arch = small_arch(5);
  const Policy policy(arch, 2, 1, 1, InputNormalization::identity(3));
  const Vec params = policy.init_params(77);

  CheckpointMeta meta;
  meta.arch = arch;
  meta.state_dim = 2;
  meta.output_dim = 1;
  meta.norm = policy.normalization();
  meta.config_digest = "00d1gest00";
  meta.iteration = 123;

  TempDir dir("ckpt");
  const std::string path = (dir.path / "model.rmpc").string();
  save_checkpoint(params, meta, path);

  SUBCASE("round trip is bit exact") {
    const auto [loaded, lmeta] = load_checkpoint(path);
    CHECK((loaded - params).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lmeta.iteration == 123);
    CHECK(lmeta.config_digest == "00d1gest00");
    CHECK(lmeta.arch.hidden == 5);
    CHECK((lmeta.norm.halfwidth - meta.norm.halfwidth).cwiseAbs().maxCoeff() == 0.0);
    const std::string once = read_file(path);
    save_checkpoint(loaded, lmeta, path);
    CHECK(read_file(path) == once);
  }

  SUBCASE("architecture mismatch is a shape error") {
    const auto [loaded, lmeta] = load_checkpoint(path);
    PolicyArchitecture other = arch;
    other.hidden = 9;
    CHECK_THROWS_AS(require_compatible(lmeta, other, 2, 1), CheckpointError);
    try {
      require_compatible(lmeta, other, 2, 1);
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::shape);
    }
  }

  SUBCASE("digest mismatch is its own error") {
    const auto [loaded, lmeta] = load_checkpoint(path);
    CHECK_NOTHROW(require_digest(lmeta, "00d1gest00"));
    try {
      require_digest(lmeta, "otherdigest");
      FAIL("expected digest error");
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::digest);
    }
  }

  SUBCASE("truncation is detected, not misparsed") {
    std::string bytes = read_file(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 11));
    out.close();
    try {
      load_checkpoint(path);
      FAIL("expected truncation error");
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::truncated);
    }
  }

  SUBCASE("trailing garbage is detected") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("xx", 2);
    out.close();
    try {
      load_checkpoint(path);
      FAIL("expected truncation error");
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::truncated);
    }
  }

  SUBCASE("foreign files are rejected by magic") {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "definitely not a checkpoint";
    out.close();
    try {
      load_checkpoint(path);
      FAIL("expected magic error");
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::magic);
    }
  }

  SUBCASE("future versions are rejected") {
    std::string bytes = read_file(path);
    bytes[8] = 2; // bump the little-endian version word
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
      load_checkpoint(path);
      FAIL("expected version error");
    } catch (const CheckpointError& e) {
      CHECK(e.kind == CheckpointError::Kind::version);
    }
  }
}

TEST_CASE("train writes run artifacts") {
  auto model = lq_test_system(1, 1, 3);
  QuadraticTrackingUtility utility(0, 1.0, Vec::Zero(1), Vec::Constant(1, 0.1));

  TrainerConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 4;
  cfg.max_iterations = 12;
  cfg.convergence_eps = 0.0;
  cfg.n_max = 2;
  cfg.checkpoint_every = 5;

  TempDir dir("run");
  FakeClock clock({0.0, 1e-3});
  const TrainResult res = train(cfg, scalar_domain(), *model, utility, small_arch(), dir.path,
                                "digest123", &clock);
  CHECK(std::filesystem::exists(dir.path / "history.csv"));
  CHECK(std::filesystem::exists(dir.path / "checkpoints/ckpt_000005.rmpc"));
  CHECK(std::filesystem::exists(dir.path / "checkpoints/ckpt_000010.rmpc"));
  CHECK(std::filesystem::exists(dir.path / "checkpoints/ckpt_final.rmpc"));

  const auto [params, meta] = load_checkpoint((dir.path / "checkpoints/ckpt_final.rmpc").string());
  CHECK(meta.config_digest == "digest123");
  CHECK(meta.iteration == 12);
  CHECK((params - res.params).cwiseAbs().maxCoeff() == 0.0);

  const std::string csv = read_file((dir.path / "history.csv").string());
  CHECK(csv.rfind("iteration,J,grad_norm,wall_ms\n", 0) == 0);
}
