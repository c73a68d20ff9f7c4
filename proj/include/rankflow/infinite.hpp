#pragma once

#include <functional>
#include <optional>

#include "rankflow/sim.hpp"

namespace rankflow {

// A countable system whose rank coefficients stabilize after slot M and
// whose initial positions grow at least linearly: X_i(0) >= gamma1*i +
// gamma2 with gamma1 > 0. Particle and slot indices are 1-based here, to
// match the usual bottom-up labelling.
struct InfiniteSpec {
  std::size_t M = 1;
  std::vector<double> head_drifts;  // slot j <= M; slots beyond M reuse the last
  std::vector<double> head_sigmas;
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  std::function<double(std::size_t)> initial_fn;  // i >= 1 -> X_i(0)

  double drift(std::size_t slot) const {
    return head_drifts[std::min(slot, M) - 1];
  }
  double sigma(std::size_t slot) const {
    return head_sigmas[std::min(slot, M) - 1];
  }
  double tail_drift() const { return head_drifts.back(); }
  double tail_sigma() const { return head_sigmas.back(); }
};

// Shape checks plus the growth and ordering of the first `horizon_index`
// initial positions. Returns its argument.
const InfiniteSpec& validate_infinite(const InfiniteSpec& spec,
                                      std::size_t horizon_index);

// Activation history: kappas[0] = 0 with sizes[0] = M, then one entry per
// step at which the active block grew. Sizes are strictly increasing.
struct ActiveSetRecord {
  std::vector<double> kappas;
  std::vector<std::size_t> sizes;
};

struct InfiniteRun {
  // All particles ever materialized, in index order; same layout and
  // invariants as a finite run of that width.
  Trajectory trajectory;
  ActiveSetRecord activations;
  std::size_t block_size = 0;    // final active block
  std::size_t materialized = 0;  // columns in `trajectory`
  // Union bound on the probability that some never-materialized particle
  // would have dipped to the block's running maximum.
  double truncation_union_bound = 0.0;
  std::optional<TripleHit> halt;
};

// Finite-block scheme: particles 1..n(k) evolve as a ranked system, all
// others ride their own frozen-coefficient Brownian motion, materialized
// lazily once a conservative lower envelope of their path could reach the
// block. A materialized particle's path is the exact closed form
// X_i(0) + delta_i t_k + sigma_i (sqrt(dt) * S_ik) with S the running noise
// sum, so late materialization is bit-identical to eager simulation.
InfiniteRun simulate_infinite(const InfiniteSpec& spec, double T, double dt,
                              Seed seed, double safety_margin,
                              std::optional<double> triple_epsilon = std::nullopt,
                              const SimLimits& limits = {});
InfiniteRun simulate_infinite(const InfiniteSpec& spec, double T, double dt,
                              Seed seed, const NoiseSource& noise,
                              double safety_margin,
                              std::optional<double> triple_epsilon = std::nullopt,
                              const SimLimits& limits = {});

}  // namespace rankflow
