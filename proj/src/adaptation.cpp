#include "infact/adaptation.hpp"

#include <algorithm>

#include "infact/types.hpp"

namespace infact {

double adaptation_probability(long g, const AdaptationSchedule& schedule) {
  if (g < 0) throw ParameterError("iteration index must be non-negative");
  if (g < schedule.burn_in_gate) return 0.0;
  return std::min(1.0, std::exp(schedule.alpha0 + schedule.alpha1 * static_cast<double>(g)));
}

}  // namespace infact
