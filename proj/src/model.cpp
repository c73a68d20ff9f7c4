#include "rankflow/model.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <string>

namespace rankflow {

RankPermutation identity_permutation(std::size_t n) {
  RankPermutation order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

RankPermutation invert_permutation(const RankPermutation& order) {
  RankPermutation inverse(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    assert(order[j] >= 0 && static_cast<std::size_t>(order[j]) < order.size());
    inverse[static_cast<std::size_t>(order[j])] = static_cast<std::int32_t>(j);
  }
  return inverse;
}

const SystemSpec& validate_spec(const SystemSpec& spec) {
  const std::size_t n = spec.drifts.size();
  if (n == 0) {
    raise(Errc::too_few_particles, "system needs at least one particle");
  }
  if (spec.sigmas.size() != n || spec.initial.size() != n) {
    raise(Errc::length_mismatch,
          "drifts, sigmas and initial must have equal length (got " +
              std::to_string(n) + ", " + std::to_string(spec.sigmas.size()) +
              ", " + std::to_string(spec.initial.size()) + ")");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(spec.sigmas[j] > 0.0)) {
      raise(Errc::non_positive_sigma,
            "sigma[" + std::to_string(j) + "] must be > 0");
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(spec.initial[i] < spec.initial[i + 1])) {
      raise(Errc::unordered_initial,
            "initial positions must be strictly increasing (violated at index " +
                std::to_string(i) + ")");
    }
  }
  return spec;
}

RankPermutation rank_resolve(std::span<const double> positions,
                             const RankPermutation& previous) {
  if (previous.size() != positions.size()) {
    raise(Errc::length_mismatch, "previous ranking has wrong length");
  }
  // Stable sort of the previous ordering by position: bit-equal positions
  // keep their old relative order, everything else is ranked from scratch.
  RankPermutation order = previous;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) {
                     return positions[static_cast<std::size_t>(a)] <
                            positions[static_cast<std::size_t>(b)];
                   });
  return order;
}

std::vector<double> spacings(std::span<const double> positions,
                             const RankPermutation& ranks) {
  if (ranks.size() != positions.size()) {
    raise(Errc::length_mismatch, "ranking has wrong length");
  }
  if (positions.empty()) {
    raise(Errc::too_few_particles, "spacings need at least one particle");
  }
  std::vector<double> gaps(positions.size() - 1);
  for (std::size_t j = 0; j + 1 < positions.size(); ++j) {
    gaps[j] = positions[static_cast<std::size_t>(ranks[j + 1])] -
              positions[static_cast<std::size_t>(ranks[j])];
  }
  return gaps;
}

}  // namespace rankflow
