#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rankflow/model.hpp"
#include "rankflow/rng.hpp"

namespace rankflow {

// Hard ceiling on grid size so a bad T/dt fails fast instead of spinning.
struct SimLimits {
  std::size_t max_steps = 20'000'000;
};

// Number of grid steps K = round(T/dt), validated against the budget. All
// schemes share this so a horizon always means the same grid everywhere.
std::size_t grid_steps(double T, double dt, const SimLimits& limits = {});

// One realized path on the uniform grid t_k = k * dt, k = 0..K.
// Row-major storage: named positions are (K+1) x n, realized noise is K x n.
// Invariants: ranks[k] sorts named[k] (ties resolved by the previous row),
// and spacings[k] are the gaps of the ranked vector, hence nonnegative.
struct Trajectory {
  std::size_t n = 0;
  std::vector<double> times;
  std::vector<double> named;
  std::vector<std::int32_t> ranks;
  std::vector<double> spacings;
  std::vector<double> noise;
  Seed seed;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  std::span<const double> positions_at(std::size_t k) const {
    return {named.data() + k * n, n};
  }
  std::span<const std::int32_t> ranks_at(std::size_t k) const {
    return {ranks.data() + k * n, n};
  }
  std::span<const double> spacings_at(std::size_t k) const {
    return {spacings.data() + k * (n - 1), n - 1};
  }
  std::span<const double> noise_at(std::size_t k) const {
    return {noise.data() + k * n, n};
  }
  double ranked_position(std::size_t k, std::size_t slot) const {
    return named[k * n + static_cast<std::size_t>(ranks[k * n + slot])];
  }
};

struct PairEvent {
  std::size_t step;  // first grid index at or after the crossing
  std::size_t gap;   // 0-based gap slot j (between rank slots j and j+1)
};

struct TripleHit {
  std::size_t step;
  std::size_t gap;    // j with hypot(Y_j, Y_{j+1}) <= epsilon
  double radius;      // the distance actually observed
};

struct CollisionRecord {
  std::vector<PairEvent> pair_events;
  std::optional<TripleHit> triple_first_hit;
  double epsilon = 0.0;
};

enum class LocalTimeMethod { TanakaResidual, Occupation };

struct LocalTimeEstimate {
  std::size_t gap = 0;
  double value = 0.0;
  LocalTimeMethod method = LocalTimeMethod::TanakaResidual;
  double epsilon = 0.0;  // occupation bandwidth; 0 for the residual method
};

// One explicit Euler step: particle i moves with the coefficients of the
// slot it occupies in `previous_ranks` (which must sort `positions`).
struct StepResult {
  std::vector<double> positions;
  RankPermutation ranks;  // ranking of the new positions
};
StepResult euler_step(std::span<const double> positions,
                      const RankPermutation& previous_ranks,
                      const SystemSpec& spec, double dt,
                      std::span<const double> xi);

// Full path with one normal draw per (particle, step). Noise is addressed
// by (seed, particle, step), so the same seed always yields the same path
// regardless of how many paths run concurrently. Tied or boundary initial
// positions are allowed here (ties resolve by index); use validate_spec
// upstream when strict ordering is required.
Trajectory simulate_path(const SystemSpec& spec, double T, double dt,
                         Seed seed, const SimLimits& limits = {});
Trajectory simulate_path(const SystemSpec& spec, double T, double dt,
                         Seed seed, const NoiseSource& noise,
                         const SimLimits& limits = {});

// Pair-collision scan over gap slots j in [gap_begin, gap_end): records a
// step whenever a previously positive ranked gap moves to <= 0 or the
// ordered pair of particles at those slots changes.
CollisionRecord detect_pair_collisions(const Trajectory& traj);
CollisionRecord detect_pair_collisions(const Trajectory& traj,
                                       std::size_t gap_begin,
                                       std::size_t gap_end);

// First step where some corner distance hypot(Y_j, Y_{j+1}) <= epsilon.
// Needs n >= 3 and epsilon > 0.
CollisionRecord detect_triple_proximity(const Trajectory& traj,
                                        double epsilon);

// Boundary local time of the single gap of a two-particle system, via the
// residual of the reflection identity (uses the stored noise).
LocalTimeEstimate local_time_tanaka(const Trajectory& traj,
                                    const SystemSpec& spec);

// Occupation-density estimate for gap slot `gap`: (nu^2 / 2 eps) * dt *
// #{k < K : Y_gap(t_k) <= eps}, with nu^2 the sum of the two adjacent slot
// variances. Any n >= 2; epsilon > 0.
LocalTimeEstimate local_time_occupation(const Trajectory& traj,
                                        const SystemSpec& spec,
                                        std::size_t gap, double epsilon);

// --- Event-driven scheme -------------------------------------------------
//
// Between stopping events only currently-colliding pairs interact: each
// active pair evolves as its own two-particle ranked system, everyone else
// keeps frozen slot coefficients. An event fires when a gap outside the
// active set reaches <= 0 on the fine grid; ranks and the active set are
// then recomputed and the scheme continues.

struct StoppingEvent {
  std::size_t step;
  double time;
  std::vector<std::size_t> active;  // gap slots active after the event
  RankPermutation ranks;            // slot assignment after the event
};

struct EventRun {
  Trajectory trajectory;
  std::vector<StoppingEvent> events;
  std::optional<TripleHit> halt;  // set when triple_epsilon was given and hit
};

EventRun event_driven_path(const SystemSpec& spec, double T, double dt_fine,
                           Seed seed,
                           std::optional<double> triple_epsilon = std::nullopt,
                           const SimLimits& limits = {});
EventRun event_driven_path(const SystemSpec& spec, double T, double dt_fine,
                           Seed seed, const NoiseSource& noise,
                           std::optional<double> triple_epsilon = std::nullopt,
                           const SimLimits& limits = {});

}  // namespace rankflow
