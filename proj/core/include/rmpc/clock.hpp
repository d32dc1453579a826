#pragma once

#include <chrono>
#include <cstddef>
#include <vector>

namespace rmpc {

/// Time source. The budgeted controller and the trainer take one of these
/// so tests can inject deterministic time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_seconds() = 0;
};

class MonotonicClock final : public Clock {
 public:
  double now_seconds() override {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  }
};

/// Scripted clock: each now_seconds() call advances by the next delta in
/// the schedule (repeating the last delta when exhausted).
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::vector<double> deltas = {0.0}) : deltas_(std::move(deltas)) {
    if (deltas_.empty()) deltas_.push_back(0.0);
  }

  double now_seconds() override {
    double d = deltas_[next_ < deltas_.size() ? next_ : deltas_.size() - 1];
    ++next_;
    now_ += d;
    return now_;
  }

 private:
  std::vector<double> deltas_;
  std::size_t next_ = 0;
  double now_ = 0.0;
};

Clock& monotonic_clock();

}  // namespace rmpc
