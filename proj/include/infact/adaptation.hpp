#pragma once

#include <cmath>

namespace infact {

/// Diminishing adaptation: adapt at iteration g with probability
/// min(1, exp(alpha0 + alpha1 * g)), never before the gate.
struct AdaptationSchedule {
  double alpha0 = -1.0;
  double alpha1 = -5e-4;
  long burn_in_gate = 0;
};

double adaptation_probability(long g, const AdaptationSchedule& schedule);

/// What one adaptation attempt did to the truncation level.
struct AdaptOutcome {
  bool fired = false;
  long removed = 0;
  long added = 0;
};

}  // namespace infact
