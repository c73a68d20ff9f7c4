#pragma once

#include <span>
#include <string_view>

namespace rankflow {

// Verdict on triple collisions for a variance profile.
enum class Classification {
  NoTripleCollisions,                  // padded concavity holds
  TripleCollisionsPositiveProbability, // plain concavity already fails
  Indeterminate,                       // between the two criteria
};

std::string_view to_string(Classification c);

// The numeric ledger behind the spectral criterion, plus both concavity
// verdicts. All quantities are derived from the rank-level variances.
struct ConditionReport {
  bool condition1 = false;  // concavity of (s_1, ..., s_n)
  bool condition2 = false;  // concavity of the zero-padded profile
  double M0 = 0.0;          // trace of the centered diffusion matrix
  double M1 = 0.0;          // top eigenvalue on the hyperplane sum x = 0
  double M2 = 0.0;          // closed-form bound (n-1)/n * C + c/n
  double C = 0.0;           // largest variance
  double c = 0.0;           // second largest variance (with multiplicity)
  bool de_blassie = false;  // M0 > 2 * M1
  Classification classification = Classification::Indeterminate;
};

// a_{i+1} >= (a_i + a_{i+2}) / 2 for all interior i; vacuous for length < 3.
bool is_concave(std::span<const double> seq);

// Concavity of the variance sequence itself. Entries must be positive.
bool check_condition1(std::span<const double> variances);

// Concavity of the padded sequence: (0, s_1..s_n, 0) for a finite system,
// (0, s_1..s_n) with constant continuation s_n for the infinite one.
bool check_condition2(std::span<const double> variances, bool infinite);

// (n-1)/n * sum of variances. Needs n >= 2.
double trace_M0(std::span<const double> variances);

// Largest eigenvalue of the ranked diffusion matrix restricted to the
// zero-sum hyperplane. Needs n >= 2.
double max_eig_M1(std::span<const double> variances);

// Closed-form upper bound for M1; equality holds iff every variance is at
// least the second-largest one. Needs n >= 2.
double bound_M2(std::span<const double> variances);

// Trace-dominance test M0 > 2 * M1 (meaningful from n >= 3).
struct DeBlassieResult {
  bool holds = false;
  double M0 = 0.0;
  double M1 = 0.0;
};
DeBlassieResult de_blassie_holds(std::span<const double> variances);

// Full report for a variance profile (n >= 2). For the infinite flavour the
// ledger is computed on the listed head; the concavity checks account for
// the constant tail.
ConditionReport classify(std::span<const double> variances, bool infinite);

}  // namespace rankflow
