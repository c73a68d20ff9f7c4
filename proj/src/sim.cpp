#include "rankflow/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>
#include <utility>

namespace rankflow {

// Guarded against degenerate and runaway grids.
std::size_t grid_steps(double T, double dt, const SimLimits& limits) {
  if (!(T > 0.0) || !(dt > 0.0)) {
    raise(Errc::non_positive_entry, "T and dt must be > 0");
  }
  const double ratio = T / dt;
  if (ratio > 9.0e15) {
    raise(Errc::step_budget_exceeded, "T/dt exceeds any sane step budget");
  }
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0) {
    raise(Errc::non_positive_entry, "T/dt rounds to zero steps");
  }
  if (steps > limits.max_steps) {
    raise(Errc::step_budget_exceeded,
          "grid needs " + std::to_string(steps) + " steps, budget is " +
              std::to_string(limits.max_steps));
  }
  return steps;
}

namespace {

void check_spec_shape(const SystemSpec& spec) {
  const std::size_t n = spec.size();
  if (n == 0) raise(Errc::too_few_particles, "empty system");
  if (spec.sigmas.size() != n || spec.initial.size() != n) {
    raise(Errc::length_mismatch, "spec arrays must have equal length");
  }
  for (double s : spec.sigmas) {
    if (!(s > 0.0)) raise(Errc::non_positive_sigma, "sigma must be > 0");
  }
}

// In-place Euler update; slot_of maps particle -> rank slot. The arithmetic
// (drift * dt + sigma * (sqrt_dt * xi), added once) is shared by every
// scheme so identical inputs give bit-identical outputs everywhere.
inline void kernel_update(std::vector<double>& x,
                          const RankPermutation& slot_of,
                          const SystemSpec& spec, double dt, double sqrt_dt,
                          std::span<const double> xi) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto j = static_cast<std::size_t>(slot_of[i]);
    x[i] += spec.drifts[j] * dt + spec.sigmas[j] * (sqrt_dt * xi[i]);
  }
}

void append_spacings(std::vector<double>& out, std::span<const double> x,
                     const RankPermutation& ranks) {
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    out.push_back(x[static_cast<std::size_t>(ranks[j + 1])] -
                  x[static_cast<std::size_t>(ranks[j])]);
  }
}

std::optional<TripleHit> scan_row_for_triple(std::span<const double> gaps,
                                             double epsilon,
                                             std::size_t step) {
  for (std::size_t j = 0; j + 1 < gaps.size(); ++j) {
    const double r = std::hypot(gaps[j], gaps[j + 1]);
    if (r <= epsilon) return TripleHit{step, j, r};
  }
  return std::nullopt;
}

}  // namespace

StepResult euler_step(std::span<const double> positions,
                      const RankPermutation& previous_ranks,
                      const SystemSpec& spec, double dt,
                      std::span<const double> xi) {
  assert(positions.size() == spec.size() && xi.size() == spec.size());
  assert(dt > 0.0);
  StepResult result;
  result.positions.assign(positions.begin(), positions.end());
  const RankPermutation slot_of = invert_permutation(previous_ranks);
  kernel_update(result.positions, slot_of, spec, dt, std::sqrt(dt), xi);
  result.ranks = rank_resolve(result.positions, previous_ranks);
  return result;
}

Trajectory simulate_path(const SystemSpec& spec, double T, double dt,
                         Seed seed, const SimLimits& limits) {
  return simulate_path(spec, T, dt, seed, PhiloxNoise{seed}, limits);
}

Trajectory simulate_path(const SystemSpec& spec, double T, double dt,
                         Seed seed, const NoiseSource& noise,
                         const SimLimits& limits) {
  check_spec_shape(spec);
  const std::size_t n = spec.size();
  const std::size_t K = grid_steps(T, dt, limits);
  const double sqrt_dt = std::sqrt(dt);

  Trajectory traj;
  traj.n = n;
  traj.seed = seed;
  traj.times.reserve(K + 1);
  traj.named.reserve((K + 1) * n);
  traj.ranks.reserve((K + 1) * n);
  traj.spacings.reserve((K + 1) * (n - 1));
  traj.noise.reserve(K * n);

  std::vector<double> x = spec.initial;
  RankPermutation ranks = rank_resolve(x, identity_permutation(n));
  std::vector<double> xi(n);

  traj.times.push_back(0.0);
  traj.named.insert(traj.named.end(), x.begin(), x.end());
  traj.ranks.insert(traj.ranks.end(), ranks.begin(), ranks.end());
  append_spacings(traj.spacings, x, ranks);

  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      xi[i] = noise.normal(static_cast<std::uint32_t>(i), k);
    }
    const RankPermutation slot_of = invert_permutation(ranks);
    kernel_update(x, slot_of, spec, dt, sqrt_dt, xi);
    ranks = rank_resolve(x, ranks);

    traj.noise.insert(traj.noise.end(), xi.begin(), xi.end());
    traj.times.push_back(static_cast<double>(k + 1) * dt);
    traj.named.insert(traj.named.end(), x.begin(), x.end());
    traj.ranks.insert(traj.ranks.end(), ranks.begin(), ranks.end());
    append_spacings(traj.spacings, x, ranks);
  }
  return traj;
}

CollisionRecord detect_pair_collisions(const Trajectory& traj) {
  return detect_pair_collisions(traj, 0, traj.n == 0 ? 0 : traj.n - 1);
}

CollisionRecord detect_pair_collisions(const Trajectory& traj,
                                       std::size_t gap_begin,
                                       std::size_t gap_end) {
  if (traj.n == 0) raise(Errc::too_few_particles, "empty trajectory");
  if (gap_begin > gap_end || gap_end > traj.n - 1) {
    raise(Errc::index_out_of_range, "gap range out of bounds");
  }
  CollisionRecord record;
  const std::size_t K = traj.steps();
  for (std::size_t k = 1; k <= K; ++k) {
    const auto prev_ranks = traj.ranks_at(k - 1);
    const auto now_ranks = traj.ranks_at(k);
    const auto prev_gaps = traj.spacings_at(k - 1);
    const auto now_pos = traj.positions_at(k);
    for (std::size_t j = gap_begin; j < gap_end; ++j) {
      const auto a = prev_ranks[j];
      const auto b = prev_ranks[j + 1];
      // Gap of last step's pair measured after the move, before re-ranking.
      const double moved_gap = now_pos[static_cast<std::size_t>(b)] -
                               now_pos[static_cast<std::size_t>(a)];
      const bool crossed = prev_gaps[j] > 0.0 && moved_gap <= 0.0;
      const bool reshuffled = now_ranks[j] != a || now_ranks[j + 1] != b;
      if (crossed || reshuffled) {
        record.pair_events.push_back(PairEvent{k, j});
      }
    }
  }
  return record;
}

CollisionRecord detect_triple_proximity(const Trajectory& traj,
                                        double epsilon) {
  if (traj.n < 3) {
    raise(Errc::too_few_particles, "triple proximity needs n >= 3");
  }
  if (!(epsilon > 0.0)) {
    raise(Errc::bad_epsilon_grid, "epsilon must be > 0");
  }
  CollisionRecord record;
  record.epsilon = epsilon;
  const std::size_t K = traj.steps();
  for (std::size_t k = 0; k <= K; ++k) {
    if (auto hit = scan_row_for_triple(traj.spacings_at(k), epsilon, k)) {
      record.triple_first_hit = hit;
      break;
    }
  }
  return record;
}

LocalTimeEstimate local_time_tanaka(const Trajectory& traj,
                                    const SystemSpec& spec) {
  if (traj.n != 2 || spec.size() != 2) {
    raise(Errc::unsupported_dimension,
          "residual local time is defined for two-particle systems");
  }
  const double mu = spec.drifts[1] - spec.drifts[0];
  const double nu =
      std::sqrt(spec.sigmas[0] * spec.sigmas[0] + spec.sigmas[1] * spec.sigmas[1]);
  const std::size_t K = traj.steps();
  const double sqrt_dt = K > 0 ? std::sqrt(traj.times[1]) : 0.0;

  // Accumulated increments of the driving one-dimensional noise, rebuilt
  // from the stored draws and the rank occupancy at each step.
  double S = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto ranks = traj.ranks_at(k);
    const auto xi = traj.noise_at(k);
    const auto low = static_cast<std::size_t>(ranks[0]);
    const auto up = static_cast<std::size_t>(ranks[1]);
    S += (spec.sigmas[1] * xi[up] - spec.sigmas[0] * xi[low]) / nu;
  }
  const double y_start = traj.spacings_at(0)[0];
  const double y_end = traj.spacings_at(K)[0];

  LocalTimeEstimate est;
  est.gap = 0;
  est.method = LocalTimeMethod::TanakaResidual;
  // Whatever the gap gained beyond drift and noise was pushed in at zero.
  est.value = (y_end - y_start) - mu * traj.horizon() - nu * (sqrt_dt * S);
  return est;
}

LocalTimeEstimate local_time_occupation(const Trajectory& traj,
                                        const SystemSpec& spec,
                                        std::size_t gap, double epsilon) {
  if (spec.size() != traj.n) {
    raise(Errc::length_mismatch, "spec does not match trajectory width");
  }
  if (traj.n < 2 || gap + 1 >= traj.n) {
    raise(Errc::index_out_of_range, "gap index out of range");
  }
  if (!(epsilon > 0.0)) {
    raise(Errc::bad_epsilon_grid, "bandwidth must be > 0");
  }
  const std::size_t K = traj.steps();
  const double dt = K > 0 ? traj.times[1] : 0.0;
  const double nu2 = spec.sigmas[gap] * spec.sigmas[gap] +
                     spec.sigmas[gap + 1] * spec.sigmas[gap + 1];
  std::size_t hits = 0;
  for (std::size_t k = 0; k < K; ++k) {  // left endpoints of the grid cells
    const double y = traj.spacings_at(k)[gap];
    if (y <= epsilon) ++hits;
  }
  LocalTimeEstimate est;
  est.gap = gap;
  est.method = LocalTimeMethod::Occupation;
  est.epsilon = epsilon;
  est.value = nu2 / (2.0 * epsilon) * dt * static_cast<double>(hits);
  return est;
}

// --- Event-driven scheme --------------------------------------------------

namespace {

// Gap slots whose two ranked particles are currently tied or have just
// crossed, thinned so no two selected slots are adjacent (a three-way
// cluster cannot be split into two overlapping pairs; the leftmost pair
// wins, which keeps the scheme deterministic).
std::vector<std::size_t> select_active(
    const std::vector<double>& x_prev, const std::vector<double>& x_now,
    const RankPermutation& ranks_now) {
  std::vector<std::size_t> active;
  const std::size_t n = ranks_now.size();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (!active.empty() && active.back() + 1 == j) continue;
    const auto p = static_cast<std::size_t>(ranks_now[j]);
    const auto q = static_cast<std::size_t>(ranks_now[j + 1]);
    const bool touching = x_now[p] == x_now[q];
    const bool crossed = x_prev[p] > x_prev[q];  // inverted before the move
    if (touching || crossed) active.push_back(j);
  }
  return active;
}

}  // namespace

EventRun event_driven_path(const SystemSpec& spec, double T, double dt_fine,
                           Seed seed, std::optional<double> triple_epsilon,
                           const SimLimits& limits) {
  return event_driven_path(spec, T, dt_fine, seed, PhiloxNoise{seed},
                           triple_epsilon, limits);
}

EventRun event_driven_path(const SystemSpec& spec, double T, double dt_fine,
                           Seed seed, const NoiseSource& noise,
                           std::optional<double> triple_epsilon,
                           const SimLimits& limits) {
  check_spec_shape(spec);
  if (triple_epsilon && !(*triple_epsilon > 0.0)) {
    raise(Errc::bad_epsilon_grid, "epsilon must be > 0");
  }
  const std::size_t n = spec.size();
  const std::size_t K = grid_steps(T, dt_fine, limits);
  const double sqrt_dt = std::sqrt(dt_fine);

  EventRun run;
  Trajectory& traj = run.trajectory;
  traj.n = n;
  traj.seed = seed;

  std::vector<double> x = spec.initial;
  std::vector<double> x_prev = x;
  // `eff` is the ranking actually in force: recomputed from scratch at
  // events, only pair-internal swaps in between.
  RankPermutation eff = rank_resolve(x, identity_permutation(n));
  std::vector<std::size_t> active = select_active(x, x, eff);
  std::vector<double> xi(n);

  traj.times.push_back(0.0);
  traj.named.insert(traj.named.end(), x.begin(), x.end());
  traj.ranks.insert(traj.ranks.end(), eff.begin(), eff.end());
  append_spacings(traj.spacings, x, eff);

  if (triple_epsilon) {
    if (auto hit =
            scan_row_for_triple(traj.spacings_at(0), *triple_epsilon, 0)) {
      run.halt = hit;
      return run;
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      xi[i] = noise.normal(static_cast<std::uint32_t>(i), k);
    }
    x_prev = x;

    // Move everyone by the coefficients of the slot currently held. For an
    // active pair this is exactly its own two-particle ranked dynamics,
    // because `eff` keeps the pair internally sorted; for everyone else the
    // slot is frozen until the next event.
    for (std::size_t j = 0; j < n; ++j) {
      const auto p = static_cast<std::size_t>(eff[j]);
      x[p] += spec.drifts[j] * dt_fine + spec.sigmas[j] * (sqrt_dt * xi[p]);
    }

    // Re-sort inside the active pairs (ties keep the previous order).
    for (std::size_t j : active) {
      const auto p = static_cast<std::size_t>(eff[j]);
      const auto q = static_cast<std::size_t>(eff[j + 1]);
      if (x[q] < x[p]) std::swap(eff[j], eff[j + 1]);
    }

    // A stopping event fires when any gap outside the active set closes.
    bool event = false;
    {
      std::size_t next = 0;
      for (std::size_t j = 0; j + 1 < n; ++j) {
        if (next < active.size() && active[next] == j) {
          ++next;
          continue;
        }
        const double gap = x[static_cast<std::size_t>(eff[j + 1])] -
                           x[static_cast<std::size_t>(eff[j])];
        if (gap <= 0.0) {
          event = true;
          break;
        }
      }
    }

    if (event) {
      eff = rank_resolve(x, eff);
      active = select_active(x_prev, x, eff);
      run.events.push_back(
          StoppingEvent{k + 1, static_cast<double>(k + 1) * dt_fine, active,
                        eff});
    }

    traj.noise.insert(traj.noise.end(), xi.begin(), xi.end());
    traj.times.push_back(static_cast<double>(k + 1) * dt_fine);
    traj.named.insert(traj.named.end(), x.begin(), x.end());
    traj.ranks.insert(traj.ranks.end(), eff.begin(), eff.end());
    append_spacings(traj.spacings, x, eff);

    if (triple_epsilon) {
      if (auto hit = scan_row_for_triple(traj.spacings_at(k + 1),
                                         *triple_epsilon, k + 1)) {
        run.halt = hit;
        break;
      }
    }
  }
  return run;
}

}  // namespace rankflow
