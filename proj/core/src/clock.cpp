#include "rmpc/clock.hpp"

namespace rmpc {

Clock& monotonic_clock() {
  static MonotonicClock clock;
  return clock;
}

}  // namespace rmpc
