#include "rankflow/errors.hpp"

namespace rankflow {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::non_positive_sigma: return "NonPositiveSigma";
    case Errc::non_positive_entry: return "NonPositiveEntry";
    case Errc::unordered_initial: return "UnorderedInitial";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::too_few_particles: return "TooFewParticles";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::unsupported_dimension: return "UnsupportedDimension";
    case Errc::negative_y: return "NegativeY";
    case Errc::bad_epsilon_grid: return "BadEpsilonGrid";
    case Errc::non_positive_gamma1: return "NonPositiveGamma1";
    case Errc::growth_violation: return "GrowthViolation";
    case Errc::step_budget_exceeded: return "StepBudgetExceeded";
    case Errc::window_too_small: return "WindowTooSmall";
    case Errc::bad_config: return "BadConfig";
    case Errc::unknown_check: return "UnknownCheck";
  }
  return "Unknown";
}

}  // namespace rankflow
