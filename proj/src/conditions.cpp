#include "rankflow/conditions.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "rankflow/errors.hpp"

namespace rankflow {

namespace {

void require_positive(std::span<const double> variances) {
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!(variances[i] > 0.0)) {
      raise(Errc::non_positive_entry,
            "variance[" + std::to_string(i) + "] must be > 0");
    }
  }
}

void require_at_least(std::span<const double> variances, std::size_t k) {
  if (variances.size() < k) {
    raise(Errc::too_few_particles,
          "need at least " + std::to_string(k) + " particles, got " +
              std::to_string(variances.size()));
  }
}

// Largest and second largest entries counted with multiplicity, so an exact
// tie at the top gives C == c.
std::pair<double, double> top_two(std::span<const double> variances) {
  double first = -1.0, second = -1.0;
  for (double v : variances) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return {first, second};
}

}  // namespace

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::NoTripleCollisions:
      return "NoTripleCollisions";
    case Classification::TripleCollisionsPositiveProbability:
      return "TripleCollisionsPositiveProbability";
    case Classification::Indeterminate:
      return "Indeterminate";
  }
  return "Indeterminate";
}

bool is_concave(std::span<const double> seq) {
  for (std::size_t i = 0; i + 2 < seq.size(); ++i) {
    if (seq[i + 1] < 0.5 * (seq[i] + seq[i + 2])) {
      return false;
    }
  }
  return true;
}

bool check_condition1(std::span<const double> variances) {
  require_at_least(variances, 1);
  require_positive(variances);
  return is_concave(variances);
}

bool check_condition2(std::span<const double> variances, bool infinite) {
  require_at_least(variances, 1);
  require_positive(variances);
  std::vector<double> padded;
  padded.reserve(variances.size() + 3);
  padded.push_back(0.0);
  padded.insert(padded.end(), variances.begin(), variances.end());
  if (infinite) {
    // Constant continuation: appending the last value twice exposes every
    // new interior constraint the infinite tail can add.
    padded.push_back(variances.back());
    padded.push_back(variances.back());
  } else {
    padded.push_back(0.0);
  }
  return is_concave(padded);
}

double trace_M0(std::span<const double> variances) {
  require_at_least(variances, 2);
  require_positive(variances);
  const double n = static_cast<double>(variances.size());
  double sum = 0.0;
  for (double v : variances) sum += v;
  return (n - 1.0) / n * sum;
}

double max_eig_M1(std::span<const double> variances) {
  require_at_least(variances, 2);
  require_positive(variances);
  const auto n = static_cast<Eigen::Index>(variances.size());
  const double nd = static_cast<double>(n);

  // Diffusion matrix of the centered ranked vector: conjugate diag(s) by the
  // centering projector P = I - J/n. The result P diag(s) P is symmetric
  // with the all-ones vector in its kernel; its top eigenvalue is the
  // restriction to the zero-sum hyperplane.
  double total = 0.0;
  for (double v : variances) total += v;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double si = variances[static_cast<std::size_t>(i)];
      const double sj = variances[static_cast<std::size_t>(j)];
      double entry = -(si + sj) / nd + total / (nd * nd);
      if (i == j) entry += si;
      a(i, j) = entry;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

double bound_M2(std::span<const double> variances) {
  require_at_least(variances, 2);
  require_positive(variances);
  const double n = static_cast<double>(variances.size());
  const auto [big, second] = top_two(variances);
  return (n - 1.0) / n * big + second / n;
}

DeBlassieResult de_blassie_holds(std::span<const double> variances) {
  require_at_least(variances, 3);
  DeBlassieResult r;
  r.M0 = trace_M0(variances);
  r.M1 = max_eig_M1(variances);
  r.holds = r.M0 > 2.0 * r.M1;
  return r;
}

ConditionReport classify(std::span<const double> variances, bool infinite) {
  require_at_least(variances, 2);
  require_positive(variances);

  ConditionReport report;
  if (infinite) {
    // Extend by one tail copy: with a constant continuation, concavity of
    // the whole sequence reduces to concavity through the first repetition.
    std::vector<double> extended(variances.begin(), variances.end());
    extended.push_back(variances.back());
    report.condition1 = is_concave(extended);
  } else {
    report.condition1 = is_concave(variances);
  }
  report.condition2 = check_condition2(variances, infinite);
  report.M0 = trace_M0(variances);
  report.M1 = max_eig_M1(variances);
  report.M2 = bound_M2(variances);
  const auto [big, second] = top_two(variances);
  report.C = big;
  report.c = second;
  report.de_blassie = report.M0 > 2.0 * report.M1;

  if (report.condition2) {
    report.classification = Classification::NoTripleCollisions;
  } else if (!report.condition1) {
    report.classification = Classification::TripleCollisionsPositiveProbability;
  } else {
    report.classification = Classification::Indeterminate;
  }
  return report;
}

}  // namespace rankflow
