#pragma once

#include <stdexcept>
#include <string>

namespace rankflow {

// Machine-readable failure reasons. Each maps onto one argument- or
// run-level contract violation; the CLI turns them into exit codes.
enum class Errc {
  non_positive_sigma,
  non_positive_entry,
  unordered_initial,
  length_mismatch,
  too_few_particles,
  index_out_of_range,
  unsupported_dimension,
  negative_y,
  bad_epsilon_grid,
  non_positive_gamma1,
  growth_violation,
  step_budget_exceeded,
  window_too_small,
  bad_config,
  unknown_check,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace rankflow
