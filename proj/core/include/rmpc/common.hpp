#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Deterministic uniform generator. Doubles are derived from raw 64-bit
/// draws so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // xorshift* -- small, fast, and identical everywhere.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  Vec uniform_vec(const Vec& lo, const Vec& hi) {
    Vec v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

  /// Independent substream for a named purpose.
  Rng split(std::uint64_t tag) {
    std::uint64_t mix = state_ ^ (tag * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull);
    return Rng(mix);
  }

 private:
  std::uint64_t state_;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rollout left the sane region of state space (typically a bad learning
/// rate); carries where it happened.
struct DivergenceError : std::runtime_error {
  int step = -1;
  int sample = -1;
  Vec state;
  DivergenceError(int step_index, Vec bad_state, int sample_index = -1)
      : std::runtime_error("state diverged at rollout step " + std::to_string(step_index) +
                           (sample_index >= 0 ? " (sample " + std::to_string(sample_index) + ")" : "")),
        step(step_index),
        sample(sample_index),
        state(std::move(bad_state)) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rmpc
