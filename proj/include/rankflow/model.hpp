#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rankflow/errors.hpp"

namespace rankflow {

// order[j] = index of the particle occupying rank slot j (slot 0 = lowest).
// Always a permutation of 0..n-1.
using RankPermutation = std::vector<std::int32_t>;

RankPermutation identity_permutation(std::size_t n);

// inverse[i] = slot occupied by particle i.
RankPermutation invert_permutation(const RankPermutation& order);

// A finite system of rank-interacting particles: drift delta_j and
// volatility sigma_j are attached to rank slot j, not to a particle.
// `initial` holds the named (particle-indexed) starting positions.
struct SystemSpec {
  std::vector<double> drifts;
  std::vector<double> sigmas;
  std::vector<double> initial;

  std::size_t size() const { return drifts.size(); }
};

// Checks n >= 1, matching lengths, sigma_j > 0, strictly increasing initial
// positions. Returns its argument so call sites can validate inline.
const SystemSpec& validate_spec(const SystemSpec& spec);

// Ranks `positions` in nondecreasing order. Ties (bit-identical doubles)
// keep the relative order they had in `previous`, so rank assignments are
// stable along a trajectory: pass the previous step's permutation, or the
// identity at time zero.
RankPermutation rank_resolve(std::span<const double> positions,
                             const RankPermutation& previous);

// gaps[j] = positions[ranks[j+1]] - positions[ranks[j]], length n-1.
// Nonnegative whenever `ranks` actually sorts `positions`.
std::vector<double> spacings(std::span<const double> positions,
                             const RankPermutation& ranks);

}  // namespace rankflow
