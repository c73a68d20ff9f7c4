#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "rankflow/errors.hpp"
#include "rankflow/infinite.hpp"
#include "rankflow/sim.hpp"

using namespace rankflow;

namespace {

InfiniteSpec linear_spec(std::size_t M, std::vector<double> drifts,
                         std::vector<double> sigmas, double slope) {
  InfiniteSpec spec;
  spec.M = M;
  spec.head_drifts = std::move(drifts);
  spec.head_sigmas = std::move(sigmas);
  spec.gamma1 = slope;
  spec.gamma2 = 0.0;
  spec.initial_fn = [slope](std::size_t i) {
    return slope * static_cast<double>(i);
  };
  return spec;
}

bool spacings_nonnegative(const Trajectory& t) {
  return std::all_of(t.spacings.begin(), t.spacings.end(),
                     [](double y) { return y >= 0.0; });
}

// Noise scripted per (lane, step), zero elsewhere. Lets a test steer one
// particle through an exact scenario.
class ScriptNoise final : public NoiseSource {
 public:
  struct Entry {
    std::uint32_t lane;
    std::uint64_t step;
    double value;
  };
  explicit ScriptNoise(std::vector<Entry> entries)
      : entries_(std::move(entries)) {}
  double normal(std::uint32_t lane, std::uint64_t step) const override {
    for (const auto& e : entries_) {
      if (e.lane == lane && e.step == step) return e.value;
    }
    return 0.0;
  }

 private:
  std::vector<Entry> entries_;
};

}  // namespace

TEST_CASE("validate_infinite accepts a clean linear family") {
  auto spec = linear_spec(2, {0.0, 0.0}, {1.0, 1.0}, 1.0);
  CHECK(&validate_infinite(spec, 10) == &spec);
  // Equality with the floor is allowed; the floor only rules out sublinear
  // growth.
  auto exact = linear_spec(1, {0.5}, {2.0}, 0.25);
  CHECK_NOTHROW(validate_infinite(exact, 100));
}

TEST_CASE("validate_infinite: each violation maps to its own code") {
  const auto spec = linear_spec(2, {0.0, 0.0}, {1.0, 1.0}, 1.0);

  {
    auto sq = spec;
    sq.initial_fn = [](std::size_t i) {
      return std::sqrt(static_cast<double>(i));
    };
    // sqrt(2) < 2: dies at the second index, but a horizon of 2 sees it.
    try {
      validate_infinite(sq, 4);
      FAIL("sublinear growth accepted");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::growth_violation);
    }
  }
  {
    auto dis = spec;
    dis.gamma1 = 0.5;
    dis.initial_fn = [](std::size_t i) {
      const double v[] = {1.0, 3.0, 2.5, 4.0};
      return i <= 4 ? v[i - 1] : static_cast<double>(i);
    };
    try {
      validate_infinite(dis, 4);
      FAIL("unordered initial accepted");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unordered_initial);
    }
  }
  {
    auto flat = spec;
    flat.gamma1 = 0.0;
    try {
      validate_infinite(flat, 4);
      FAIL("gamma1 = 0 accepted");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::non_positive_gamma1);
    }
  }
  {
    auto none = spec;
    none.initial_fn = nullptr;
    CHECK_THROWS_AS(validate_infinite(none, 4), Error);
  }
  {
    auto zero = spec;
    zero.M = 0;
    CHECK_THROWS_AS(validate_infinite(zero, 4), Error);
  }
  {
    auto ragged = spec;
    ragged.head_sigmas = {1.0};
    CHECK_THROWS_AS(validate_infinite(ragged, 4), Error);
  }
  {
    auto dead = spec;
    dead.head_sigmas = {1.0, 0.0};
    CHECK_THROWS_AS(validate_infinite(dead, 4), Error);
  }
  CHECK_THROWS_AS(validate_infinite(spec, 1), Error);  // horizon below M
}

TEST_CASE("infinite run with silent noise: nothing moves, nothing activates") {
  const auto spec = linear_spec(2, {0.0, 0.0}, {1.0, 1.0}, 1.0);
  const auto run =
      simulate_infinite(spec, 0.5, 1e-2, Seed{100, 0}, ZeroNoise{}, 1.0);
  CHECK(run.activations.kappas == std::vector<double>{0.0});
  CHECK(run.activations.sizes == std::vector<std::size_t>{2});
  CHECK(run.block_size == 2);
  CHECK_FALSE(run.halt.has_value());
  // window = 7.2 * sqrt(0.5) + 1 ~ 6.09: indices up to ~9 get materialized,
  // the first strictly outside is kept as a sentinel column.
  CHECK(run.materialized >= 7);
  CHECK(run.materialized <= 11);
  CHECK(run.trajectory.n == run.materialized);
  const auto& traj = run.trajectory;
  CHECK(traj.steps() == 50);
  for (std::size_t k = 0; k <= traj.steps(); ++k) {
    for (std::size_t i = 0; i < traj.n; ++i) {
      CHECK(traj.positions_at(k)[i] == static_cast<double>(i + 1));
    }
  }
  CHECK(std::all_of(traj.noise.begin(), traj.noise.end(),
                    [](double v) { return v == 0.0; }));
  CHECK(run.truncation_union_bound < 1e-20);
}

TEST_CASE("a rising block drags exactly one activation") {
  // Bottom slot pushes up hard; the pair leapfrogs upward at ~10/s and
  // reaches the static third particle near t = 0.15.
  const auto spec = linear_spec(2, {20.0, 0.0}, {1.0, 1.0}, 1.0);
  const auto run =
      simulate_infinite(spec, 0.2, 1e-3, Seed{100, 0}, ZeroNoise{}, 1.0);
  REQUIRE(run.activations.sizes.size() == 2);
  CHECK(run.activations.sizes[0] == 2);
  CHECK(run.activations.sizes[1] == 3);
  CHECK(run.activations.kappas[0] == 0.0);
  CHECK(run.activations.kappas[1] >= 0.145);
  CHECK(run.activations.kappas[1] <= 0.160);
  CHECK(run.block_size == 3);
  CHECK(run.materialized >= 10);
  CHECK(spacings_nonnegative(run.trajectory));
}

TEST_CASE("block columns restrict bit for bit to the finite system") {
  // Wide spacing, short horizon: the block never grows, and lanes 0..2 see
  // exactly the draws a three-particle finite run sees.
  const auto spec = linear_spec(3, {0.1, -0.1, 0.0}, {1.0, 0.5, 1.5}, 3.0);
  const Seed seed{20240817, 9};
  const auto run = simulate_infinite(spec, 0.1, 1e-3, seed, 0.5);
  REQUIRE(run.activations.sizes == std::vector<std::size_t>{3});

  const SystemSpec finite{{0.1, -0.1, 0.0}, {1.0, 0.5, 1.5}, {3.0, 6.0, 9.0}};
  const auto plain = simulate_path(finite, 0.1, 1e-3, seed);
  REQUIRE(run.trajectory.steps() == plain.steps());
  for (std::size_t k = 0; k <= plain.steps(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(run.trajectory.positions_at(k)[i] == plain.positions_at(k)[i]);
    }
    if (k < plain.steps()) {
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(run.trajectory.noise_at(k)[i] == plain.noise_at(k)[i]);
      }
    }
  }
}

TEST_CASE("tail columns follow the closed form bit for bit") {
  const auto spec = linear_spec(3, {0.1, -0.1, 0.0}, {1.0, 0.5, 1.5}, 3.0);
  const Seed seed{20240817, 9};
  const auto run = simulate_infinite(spec, 0.1, 1e-3, seed, 0.5);
  REQUIRE(run.activations.sizes == std::vector<std::size_t>{3});
  REQUIRE(run.materialized > 3);

  const double dt = 1e-3;
  const double sqrt_dt = std::sqrt(dt);
  const double delta = 0.0;   // tail drift = last head slot
  const double sigma = 1.5;   // tail sigma likewise
  const auto& traj = run.trajectory;
  for (std::size_t i = 3; i < traj.n; ++i) {
    const double v0 = 3.0 * static_cast<double>(i + 1);
    double S = 0.0;
    CHECK(traj.positions_at(0)[i] == v0);
    for (std::size_t l = 1; l <= traj.steps(); ++l) {
      S += traj.noise_at(l - 1)[i];
      const double want =
          v0 + delta * (static_cast<double>(l) * dt) + sigma * (sqrt_dt * S);
      CHECK(traj.positions_at(l)[i] == want);
    }
  }
}

TEST_CASE("noisy tight-packed runs: activations are strictly monotone") {
  const auto spec = linear_spec(1, {0.0}, {2.0}, 0.6);
  for (std::uint32_t s = 1; s <= 5; ++s) {
    const auto run = simulate_infinite(spec, 1.0, 1e-2, Seed{777, s}, 1.0);
    const auto& acts = run.activations;
    REQUIRE(!acts.sizes.empty());
    CHECK(acts.kappas[0] == 0.0);
    CHECK(acts.sizes[0] == 1);
    CHECK(acts.sizes.size() >= 2);  // sigma = 2 across 0.6 gaps must collide
    for (std::size_t a = 1; a < acts.sizes.size(); ++a) {
      CHECK(acts.sizes[a] > acts.sizes[a - 1]);
      CHECK(acts.kappas[a] > acts.kappas[a - 1]);
    }
    CHECK(run.block_size == acts.sizes.back());
    CHECK(run.materialized >= run.block_size);
    CHECK(run.trajectory.n == run.materialized);
    CHECK(spacings_nonnegative(run.trajectory));
    CHECK(run.trajectory.steps() == 100);
    CHECK(run.truncation_union_bound < 1e-9);
    CHECK(run.truncation_union_bound >= 0.0);
  }
}

TEST_CASE("proximity halt works on the materialized union") {
  const auto spec = linear_spec(1, {0.0}, {2.0}, 0.6);
  const auto run =
      simulate_infinite(spec, 1.0, 1e-2, Seed{777, 1}, 1.0, 0.35);
  // Neighboring initial gaps are 0.6 each: corner radius 0.6 sqrt(2) ~ 0.85
  // at t = 0, so the start is clear; volatility 2 forces a hit quickly.
  REQUIRE(run.halt.has_value());
  CHECK(run.halt->step >= 1);
  CHECK(run.halt->radius <= 0.35);
  CHECK(run.trajectory.steps() == run.halt->step);
  CHECK_THROWS_AS(
      simulate_infinite(spec, 1.0, 1e-2, Seed{777, 1}, 1.0, -0.1), Error);
}

TEST_CASE("late materialization below a past block maximum is refused") {
  // Scripted draws: the block's particle 1 spikes to 4 at step one and to 8
  // at step two. Particle 2 dives into the block at step one (activation).
  // Particle 3 is materialized only at step two, but its backfilled path
  // was at 3.5 when the block maximum was 4: the lazy window failed, and
  // the run must refuse rather than silently keep the wrong history.
  InfiniteSpec spec;
  spec.M = 1;
  spec.head_drifts = {0.0};
  spec.head_sigmas = {1.0};
  spec.gamma1 = 3.0;
  spec.gamma2 = 0.0;
  spec.initial_fn = [](std::size_t i) { return 3.0 * static_cast<double>(i); };

  const ScriptNoise script({{0, 0, 10.0},
                            {0, 1, 40.0},
                            {1, 0, -30.0},
                            {2, 0, -55.0}});
  try {
    simulate_infinite(spec, 0.02, 0.01, Seed{1, 0}, script, 0.0);
    FAIL("stale backfill accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::window_too_small);
  }

  // The same geometry without the deep backdated dive is fine.
  const ScriptNoise tame({{0, 0, 10.0}, {0, 1, 40.0}, {1, 0, -30.0}});
  const auto run = simulate_infinite(spec, 0.02, 0.01, Seed{1, 0}, tame, 0.0);
  CHECK(run.block_size >= 2);
}
