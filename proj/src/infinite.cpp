#include "rankflow/infinite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace rankflow {

namespace {

// Tail particles are ignored until a conservative lower envelope of their
// path could touch the block: start - maxdrift*T - z*sigma*sqrt(T) - margin.
// With z = 7.2 the reflection bound puts each ignored particle's chance of
// actually mattering below 2*Phi(-7.2) ~ 6e-13.
constexpr double kTailZ = 7.2;
constexpr std::size_t kMaxMaterialized = 1'000'000;

double phi_tail(double z) {  // P(N(0,1) <= -z)
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

}  // namespace

const InfiniteSpec& validate_infinite(const InfiniteSpec& spec,
                                      std::size_t horizon_index) {
  if (spec.M == 0) raise(Errc::too_few_particles, "M must be >= 1");
  if (spec.head_drifts.size() != spec.M ||
      spec.head_sigmas.size() != spec.M) {
    raise(Errc::length_mismatch, "head coefficient arrays must have length M");
  }
  for (double s : spec.head_sigmas) {
    if (!(s > 0.0)) raise(Errc::non_positive_sigma, "sigma must be > 0");
  }
  if (!(spec.gamma1 > 0.0)) {
    raise(Errc::non_positive_gamma1, "gamma1 must be > 0");
  }
  if (!spec.initial_fn) raise(Errc::bad_config, "initial_fn must be set");
  if (horizon_index < spec.M) {
    raise(Errc::index_out_of_range, "horizon_index must be >= M");
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= horizon_index; ++i) {
    const double v = spec.initial_fn(i);
    const double floor = spec.gamma1 * static_cast<double>(i) + spec.gamma2;
    if (!(v >= floor)) {
      raise(Errc::growth_violation,
            "initial position " + std::to_string(i) +
                " is below the linear growth floor");
    }
    if (!(v > prev)) {
      raise(Errc::unordered_initial,
            "initial positions must be strictly increasing (index " +
                std::to_string(i) + ")");
    }
    prev = v;
  }
  return spec;
}

InfiniteRun simulate_infinite(const InfiniteSpec& spec, double T, double dt,
                              Seed seed, double safety_margin,
                              std::optional<double> triple_epsilon,
                              const SimLimits& limits) {
  return simulate_infinite(spec, T, dt, seed, PhiloxNoise{seed}, safety_margin,
                           triple_epsilon, limits);
}

InfiniteRun simulate_infinite(const InfiniteSpec& spec, double T, double dt,
                              Seed seed, const NoiseSource& noise,
                              double safety_margin,
                              std::optional<double> triple_epsilon,
                              const SimLimits& limits) {
  validate_infinite(spec, spec.M);
  if (safety_margin < 0.0) {
    raise(Errc::non_positive_entry, "safety_margin must be >= 0");
  }
  if (triple_epsilon && !(*triple_epsilon > 0.0)) {
    raise(Errc::bad_epsilon_grid, "epsilon must be > 0");
  }
  const std::size_t K = grid_steps(T, dt, limits);
  const double t_eff = static_cast<double>(K) * dt;
  const double sqrt_dt = std::sqrt(dt);
  const double sqrt_T = std::sqrt(t_eff);

  double max_abs_drift = 0.0;
  for (double d : spec.head_drifts) {
    max_abs_drift = std::max(max_abs_drift, std::abs(d));
  }
  const double window = max_abs_drift * t_eff +
                        kTailZ * spec.tail_sigma() * sqrt_T + safety_margin;

  // Per-particle state, 0-based index i <-> 1-based label i+1.
  std::vector<std::vector<double>> paths;   // positions, rows 0..k
  std::vector<std::vector<double>> noises;  // draws, rows 0..k-1
  std::vector<double> initials;
  std::vector<double> x;      // current positions of materialized particles
  std::vector<double> tail_sum;  // running noise sum (tail particles only)
  std::vector<double> block_max_hist;

  std::size_t n_act = 0;                       // block = particles [0, n_act)
  RankPermutation block_ranks;                 // over the block only
  std::vector<double> slot_drift, slot_sigma;  // per block slot

  const auto rebuild_slots = [&]() {
    slot_drift.resize(n_act);
    slot_sigma.resize(n_act);
    for (std::size_t j = 0; j < n_act; ++j) {
      slot_drift[j] = spec.drift(j + 1);
      slot_sigma[j] = spec.sigma(j + 1);
    }
  };

  // Evaluates, validates and registers the initial position of the next
  // particle; backfills its whole path so far from the closed form and
  // audits it against the recorded block maxima (a past dip means the lazy
  // window was too small to be trusted).
  const auto materialize_next = [&](std::size_t rows) {
    const std::size_t i = paths.size();  // 0-based index of the new particle
    if (i >= kMaxMaterialized) {
      raise(Errc::step_budget_exceeded, "materialized particle cap exceeded");
    }
    const double v0 = spec.initial_fn(i + 1);
    const double floor =
        spec.gamma1 * static_cast<double>(i + 1) + spec.gamma2;
    if (!(v0 >= floor)) {
      raise(Errc::growth_violation,
            "initial position " + std::to_string(i + 1) +
                " is below the linear growth floor");
    }
    if (!initials.empty() && !(v0 > initials.back())) {
      raise(Errc::unordered_initial,
            "initial positions must be strictly increasing (index " +
                std::to_string(i + 1) + ")");
    }
    initials.push_back(v0);

    std::vector<double> path;
    std::vector<double> draws;
    path.reserve(K + 1);
    draws.reserve(K);
    path.push_back(v0);
    double S = 0.0;
    const double delta = spec.tail_drift();
    const double sigma = spec.tail_sigma();
    for (std::size_t l = 1; l < rows; ++l) {
      const double xi =
          noise.normal(static_cast<std::uint32_t>(i), l - 1);
      draws.push_back(xi);
      S += xi;
      path.push_back(v0 + delta * (static_cast<double>(l) * dt) +
                     sigma * (sqrt_dt * S));
    }
    for (std::size_t l = 0; l + 1 < rows; ++l) {
      if (path[l] <= block_max_hist[l]) {
        raise(Errc::window_too_small,
              "particle " + std::to_string(i + 1) +
                  " had already reached the block at step " +
                  std::to_string(l) + " when it was materialized");
      }
    }
    x.push_back(path.back());
    tail_sum.push_back(S);
    paths.push_back(std::move(path));
    noises.push_back(std::move(draws));
  };

  // Materialize every particle whose envelope reaches the current block
  // maximum, then absorb intruders (tail particles at or below it) into the
  // block, repeating until stable. Returns true if the block grew.
  const auto settle_boundary = [&](std::size_t rows) {
    bool grew = false;
    for (;;) {
      double block_max = block_max_hist[rows - 1];
      while (initials.empty() ||
             initials.back() - window <= block_max) {
        materialize_next(rows);
      }
      std::size_t deepest = n_act;  // one past the last intruder
      for (std::size_t i = n_act; i < x.size(); ++i) {
        if (x[i] <= block_max) deepest = i + 1;
      }
      if (deepest == n_act) return grew;
      // Grow the block; newcomers enter the ranking in index order.
      for (std::size_t i = n_act; i < deepest; ++i) {
        block_ranks.push_back(static_cast<std::int32_t>(i));
      }
      n_act = deepest;
      block_ranks = rank_resolve(std::span<const double>{x.data(), n_act},
                                 block_ranks);
      rebuild_slots();
      const double new_top =
          x[static_cast<std::size_t>(block_ranks.back())];
      block_max_hist[rows - 1] = std::max(block_max, new_top);
      grew = true;
    }
  };

  const auto ranked_triple_hit =
      [&](std::size_t step) -> std::optional<TripleHit> {
    if (!triple_epsilon || x.size() < 3) return std::nullopt;
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j + 2 < sorted.size(); ++j) {
      const double r =
          std::hypot(sorted[j + 1] - sorted[j], sorted[j + 2] - sorted[j + 1]);
      if (r <= *triple_epsilon) return TripleHit{step, j, r};
    }
    return std::nullopt;
  };

  InfiniteRun run;

  // Seed the block with particles 1..M.
  for (std::size_t i = 0; i < spec.M; ++i) {
    const double v0 = spec.initial_fn(i + 1);  // validated above
    initials.push_back(v0);
    paths.push_back({v0});
    noises.emplace_back();
    x.push_back(v0);
    tail_sum.push_back(0.0);
  }
  n_act = spec.M;
  block_ranks = rank_resolve(std::span<const double>{x.data(), n_act},
                             identity_permutation(n_act));
  rebuild_slots();
  block_max_hist.push_back(x[static_cast<std::size_t>(block_ranks.back())]);

  settle_boundary(1);  // strict initial ordering means no growth here
  run.activations.kappas.push_back(0.0);
  run.activations.sizes.push_back(n_act);
  std::size_t rows = 1;
  run.halt = ranked_triple_hit(0);

  for (std::size_t k = 0; k < K && !run.halt; ++k) {
    // Block step: plain ranked Euler dynamics on the first n_act particles.
    const RankPermutation slot_of = invert_permutation(block_ranks);
    for (std::size_t i = 0; i < n_act; ++i) {
      const auto j = static_cast<std::size_t>(slot_of[i]);
      const double xi = noise.normal(static_cast<std::uint32_t>(i), k);
      noises[i].push_back(xi);
      x[i] += slot_drift[j] * dt + slot_sigma[j] * (sqrt_dt * xi);
    }
    block_ranks =
        rank_resolve(std::span<const double>{x.data(), n_act}, block_ranks);

    // Tail step: exact closed form, no rank interaction.
    const double delta = spec.tail_drift();
    const double sigma = spec.tail_sigma();
    const double t_next = static_cast<double>(k + 1) * dt;
    for (std::size_t i = n_act; i < x.size(); ++i) {
      const double xi = noise.normal(static_cast<std::uint32_t>(i), k);
      noises[i].push_back(xi);
      tail_sum[i] += xi;
      x[i] = initials[i] + delta * t_next + sigma * (sqrt_dt * tail_sum[i]);
    }

    for (std::size_t i = 0; i < x.size(); ++i) paths[i].push_back(x[i]);
    block_max_hist.push_back(x[static_cast<std::size_t>(block_ranks.back())]);
    rows = k + 2;

    if (settle_boundary(rows)) {
      run.activations.kappas.push_back(t_next);
      run.activations.sizes.push_back(n_act);
    }
    run.halt = ranked_triple_hit(k + 1);
  }

  // Assemble the joint trajectory of everything ever materialized.
  const std::size_t n = paths.size();
  Trajectory& traj = run.trajectory;
  traj.n = n;
  traj.seed = seed;
  traj.times.reserve(rows);
  traj.named.reserve(rows * n);
  traj.ranks.reserve(rows * n);
  traj.spacings.reserve(rows * (n - 1));
  traj.noise.reserve((rows - 1) * n);
  RankPermutation row_ranks = identity_permutation(n);
  std::vector<double> row(n);
  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t i = 0; i < n; ++i) row[i] = paths[i][l];
    traj.times.push_back(static_cast<double>(l) * dt);
    traj.named.insert(traj.named.end(), row.begin(), row.end());
    row_ranks = rank_resolve(row, row_ranks);
    traj.ranks.insert(traj.ranks.end(), row_ranks.begin(), row_ranks.end());
    for (std::size_t j = 0; j + 1 < n; ++j) {
      traj.spacings.push_back(
          row[static_cast<std::size_t>(row_ranks[j + 1])] -
          row[static_cast<std::size_t>(row_ranks[j])]);
    }
    if (l + 1 < rows) {
      for (std::size_t i = 0; i < n; ++i) {
        traj.noise.push_back(noises[i][l]);
      }
    }
  }

  run.block_size = n_act;
  run.materialized = n;

  // Union bound over the never-materialized indices, using only the
  // validated growth floor and the block's running maximum.
  const double b_overall =
      *std::max_element(block_max_hist.begin(), block_max_hist.end());
  double bound = 0.0;
  const double denom = spec.tail_sigma() * sqrt_T;
  for (std::size_t i = n + 1; i <= n + 10'000'000; ++i) {
    const double a = spec.gamma1 * static_cast<double>(i) + spec.gamma2 -
                     b_overall - max_abs_drift * t_eff;
    if (a <= 0.0) {
      bound += 1.0;  // cannot certify this index; should not happen
      continue;
    }
    const double term = 2.0 * phi_tail(a / denom);
    bound += term;
    if (term < 1e-300) break;
  }
  run.truncation_union_bound = bound;
  return run;
}

}  // namespace rankflow
