#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "rankflow/conditions.hpp"
#include "rankflow/errors.hpp"

using namespace rankflow;

namespace {

void center(std::vector<double>& v) {
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (auto& c : v) c -= mean;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// Independent maximizer #1: power iteration on the centered diffusion
// operator, applied matrix-free as v -> center(vars * center(v)). The
// operator is positive semidefinite, so this converges to the top
// eigenvalue on the zero-sum hyperplane.
double power_iteration_m1(const std::vector<double>& vars) {
  const std::size_t n = vars.size();
  std::mt19937_64 gen(987654321);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& c : v) c = g(gen);
  center(v);
  double nv = norm(v);
  for (auto& c : v) c /= nv;

  double lambda = 0.0;
  std::vector<double> w(n);
  for (int iter = 0; iter < 200000; ++iter) {
    for (std::size_t i = 0; i < n; ++i) w[i] = vars[i] * v[i];
    center(w);
    double quotient = 0.0;
    for (std::size_t i = 0; i < n; ++i) quotient += v[i] * w[i];
    const double nw = norm(w);
    if (nw == 0.0) return quotient;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (iter > 10 &&
        std::abs(quotient - lambda) <= 1e-15 * std::max(1.0, quotient)) {
      return quotient;
    }
    lambda = quotient;
  }
  return lambda;
}

// Independent maximizer #2: best Rayleigh quotient of the centered
// diffusion operator over random unit vectors. Re-center after normalizing:
// a near-tied draw leaves a tiny centered norm, and dividing by it amplifies
// the rounding left by the first centering into a mean component of order
// 1e-12, enough to push the quotient above the top eigenvalue. A second
// projection knocks that back to rounding level while barely changing the
// norm, so the search stays a genuine lower bound.
double random_search_m1(const std::vector<double>& vars, std::size_t draws,
                        std::uint64_t seed) {
  const std::size_t n = vars.size();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  double best = 0.0;
  std::vector<double> x(n), y(n);
  for (std::size_t d = 0; d < draws; ++d) {
    for (auto& c : x) c = g(gen);
    center(x);
    const double nx = norm(x);
    if (nx == 0.0) continue;
    for (auto& c : x) c /= nx;
    center(x);
    for (std::size_t i = 0; i < n; ++i) y[i] = vars[i] * x[i];
    center(y);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) q += x[i] * y[i];
    best = std::max(best, q);
  }
  return best;
}

}  // namespace

TEST_CASE("is_concave on small sequences") {
  CHECK(is_concave(std::vector<double>{}));
  CHECK(is_concave(std::vector<double>{3.0}));
  CHECK(is_concave(std::vector<double>{3.0, -1.0}));  // vacuous below 3
  CHECK(is_concave(std::vector<double>{1.0, 1.0, 1.0}));
  CHECK(is_concave(std::vector<double>{0.0, 1.0, 2.0, 1.0, 0.0}));
  CHECK(is_concave(std::vector<double>{1.0, 2.0, 1.0}));
  CHECK_FALSE(is_concave(std::vector<double>{1.0, 1.0, 4.0}));
  CHECK_FALSE(is_concave(std::vector<double>{2.0, 1.0, 2.0}));
  // Midpoint equality is still concave.
  CHECK(is_concave(std::vector<double>{1.0, 2.0, 3.0}));
}

TEST_CASE("condition 1 is concavity of the variance sequence") {
  CHECK(check_condition1(std::vector<double>{1.0, 2.0, 2.0, 1.0}));
  CHECK(check_condition1(std::vector<double>{5.0}));
  CHECK_FALSE(check_condition1(std::vector<double>{1.0, 1.0, 4.0}));
  CHECK_THROWS_AS(check_condition1(std::vector<double>{1.0, 0.0, 1.0}),
                  Error);
  CHECK_THROWS_AS(check_condition1(std::vector<double>{-1.0}), Error);
}

TEST_CASE("condition 2, finite padding") {
  CHECK(check_condition2(std::vector<double>{1.0, 2.0, 1.0}, false));
  CHECK(check_condition2(std::vector<double>{1.0, 1.0, 1.0}, false));
  CHECK(check_condition2(std::vector<double>{1.0, 1.0}, false));
  CHECK_FALSE(check_condition2(std::vector<double>{2.0, 3.0, 1.0}, false));
  // The zero pad bites even for n = 2 when the top variance dominates.
  CHECK_FALSE(check_condition2(std::vector<double>{1.0, 3.0}, false));
  // A decreasing-at-the-end profile passes finite but padding is exact:
  CHECK(check_condition2(std::vector<double>{2.0, 1.0}, false));
}

TEST_CASE("condition 2, infinite padding differs from finite") {
  // Constant tail removes the trailing zero pad but adds tail constraints.
  CHECK_FALSE(check_condition2(std::vector<double>{1.0, 2.0, 1.0}, true));
  CHECK(check_condition2(std::vector<double>{1.0, 2.0, 2.0}, true));
  CHECK_FALSE(check_condition2(std::vector<double>{2.0, 1.0}, true));
  // One-slot head: equal coefficients everywhere, always fine.
  CHECK(check_condition2(std::vector<double>{0.5}, true));
}

TEST_CASE("trace M0 closed forms") {
  const std::vector<double> boundary = {1.0, 0.75, 0.5, 0.25};
  CHECK(trace_M0(boundary) == 1.875);  // exact in binary
  CHECK(trace_M0(std::vector<double>{1.0, 1.0, 1.0}) == 2.0);
  CHECK(trace_M0(std::vector<double>{1.0, 3.0}) == 2.0);
  CHECK_THROWS_AS(trace_M0(std::vector<double>{1.0}), Error);
}

TEST_CASE("M1 frozen reference values") {
  // (5 + sqrt 5)/8 for the arithmetic boundary profile.
  const std::vector<double> boundary = {1.0, 0.75, 0.5, 0.25};
  CHECK(max_eig_M1(boundary) ==
        doctest::Approx(0.9045084971874737).epsilon(1e-12));
  // Equal variances: the projected operator is c times the projector.
  CHECK(max_eig_M1(std::vector<double>{3.0, 3.0, 3.0, 3.0, 3.0}) ==
        doctest::Approx(3.0).epsilon(1e-12));
  // n = 2: always the average of the two variances.
  CHECK(max_eig_M1(std::vector<double>{1.0, 3.0}) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("M2 closed forms and the equality criterion") {
  const std::vector<double> boundary = {1.0, 0.75, 0.5, 0.25};
  CHECK(bound_M2(boundary) == 0.9375);  // exact in binary
  CHECK(bound_M2(std::vector<double>{1.0, 1.0, 1.0}) == 1.0);
  CHECK(bound_M2(std::vector<double>{1.0, 3.0}) == 2.0);
  // Tied top counts with multiplicity: C == c.
  CHECK(bound_M2(std::vector<double>{3.0, 3.0, 1.0}) == 3.0);

  // Equality M1 == M2 holds exactly when every entry >= second largest.
  const std::vector<double> flat_below = {2.0, 1.0, 1.0, 1.0};
  CHECK(max_eig_M1(flat_below) == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(bound_M2(flat_below) == 1.75);
  const std::vector<double> digs_below = {4.0, 3.0, 1.0};
  CHECK(max_eig_M1(digs_below) < bound_M2(digs_below) - 1e-6);
  const std::vector<double> all_above = {4.0, 3.0, 3.0};
  CHECK(max_eig_M1(all_above) ==
        doctest::Approx(bound_M2(all_above)).epsilon(1e-12));
}

TEST_CASE("trace dominance") {
  CHECK(de_blassie_holds(std::vector<double>{1.0, 0.75, 0.5, 0.25}).holds);
  // Equal variances: M0 = (n-1)c vs 2M1 = 2c.
  CHECK_FALSE(de_blassie_holds(std::vector<double>{2.0, 2.0, 2.0}).holds);
  CHECK(de_blassie_holds(std::vector<double>{2.0, 2.0, 2.0, 2.0}).holds);
  CHECK_THROWS_AS(de_blassie_holds(std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("M1 against independent maximizers") {
  std::mt19937_64 gen(555);
  std::uniform_real_distribution<double> u(0.3, 4.0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rep % 6);
    std::vector<double> vars(n);
    for (auto& v : vars) v = u(gen);
    const double m1 = max_eig_M1(vars);
    const double m2 = bound_M2(vars);
    const double pi = power_iteration_m1(vars);
    const double rs = random_search_m1(vars, 20000, 1000 + rep);

    CHECK(m1 <= m2 + 1e-12);                      // closed-form bound
    CHECK(pi == doctest::Approx(m1).epsilon(1e-9));
    CHECK(rs <= m1 + 1e-12);                      // search never exceeds
    CHECK(rs >= m1 - 0.05 * std::max(1.0, m1));   // but lands in the area
    if (n == 2) {
      CHECK(m1 == doctest::Approx(0.5 * (vars[0] + vars[1])).epsilon(1e-12));
    }
  }
  // In low dimensions the random search pins the value tightly from below.
  for (const auto& vars :
       {std::vector<double>{1.7, 0.4}, std::vector<double>{1.0, 2.5, 0.7},
        std::vector<double>{3.0, 1.0, 1.0}}) {
    const double m1 = max_eig_M1(vars);
    const double rs = random_search_m1(vars, 100000, 77);
    CHECK(rs <= m1 + 1e-12);
    CHECK(m1 - rs <= 1e-6 * std::max(1.0, m1));
  }
}

TEST_CASE("classify: the three verdicts") {
  {
    const auto r = classify(std::vector<double>{1.0, 0.75, 0.5, 0.25}, false);
    CHECK(r.classification == Classification::NoTripleCollisions);
    CHECK(r.condition1);
    CHECK(r.condition2);
    CHECK(r.M0 == 1.875);
    CHECK(r.M2 == 0.9375);
    CHECK(r.M0 == 2.0 * r.M2);  // boundary identity, exact
    CHECK(r.M1 < r.M2);
    CHECK(r.de_blassie);
    CHECK(r.C == 1.0);
    CHECK(r.c == 0.75);
  }
  {
    const auto r = classify(std::vector<double>{4.0, 3.0, 1.0}, false);
    CHECK(r.classification == Classification::Indeterminate);
    CHECK(r.condition1);
    CHECK_FALSE(r.condition2);
  }
  {
    const auto r = classify(std::vector<double>{1.0, 1.0, 4.0}, false);
    CHECK(r.classification ==
          Classification::TripleCollisionsPositiveProbability);
    CHECK_FALSE(r.condition1);
  }
  for (std::size_t n : {2u, 3u, 10u}) {
    const std::vector<double> equal(n, 2.5);
    CHECK(classify(equal, false).classification ==
          Classification::NoTripleCollisions);
  }
}

TEST_CASE("classify: verdict is order-sensitive, ledger is not") {
  const auto a = classify(std::vector<double>{1.0, 2.0, 1.0}, false);
  const auto b = classify(std::vector<double>{2.0, 1.0, 1.0}, false);
  CHECK(a.classification == Classification::NoTripleCollisions);
  CHECK(b.classification ==
        Classification::TripleCollisionsPositiveProbability);
  CHECK(a.M0 == b.M0);
  CHECK(a.M1 == doctest::Approx(b.M1).epsilon(1e-12));
  CHECK(a.M2 == b.M2);
}

TEST_CASE("classify: condition 2 implies condition 1") {
  std::mt19937_64 gen(808);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> vars(3 + rep % 4);
    for (auto& v : vars) v = u(gen);
    const bool infinite = rep % 2 == 1;
    const auto r = classify(vars, infinite);
    if (r.condition2) CHECK(r.condition1);
    CHECK(r.M1 <= r.M2 + 1e-12);
  }
}

TEST_CASE("classify: scaling by a power of two is exact") {
  const std::vector<double> vars = {1.0, 2.5, 0.75, 1.25};
  const auto base = classify(vars, false);
  std::vector<double> scaled = vars;
  for (auto& v : scaled) v *= 2.0;
  const auto twice = classify(scaled, false);
  CHECK(twice.classification == base.classification);
  CHECK(twice.condition1 == base.condition1);
  CHECK(twice.condition2 == base.condition2);
  CHECK(twice.M0 == 2.0 * base.M0);
  CHECK(twice.M2 == 2.0 * base.M2);
  CHECK(twice.M1 == doctest::Approx(2.0 * base.M1).epsilon(1e-12));
}

TEST_CASE("classify: infinite head vs finite profile") {
  // Same numbers, different universes. Finite, (1, 2, 1) padded with zeros
  // is concave: no triples. With a constant tail the sequence continues
  // (1, 2, 1, 1, ...), and the dip at the third slot breaks concavity
  // itself, so collisions become certain-positive.
  const auto fin = classify(std::vector<double>{1.0, 2.0, 1.0}, false);
  const auto inf = classify(std::vector<double>{1.0, 2.0, 1.0}, true);
  CHECK(fin.classification == Classification::NoTripleCollisions);
  CHECK(inf.classification ==
        Classification::TripleCollisionsPositiveProbability);
  CHECK_FALSE(inf.condition1);

  // A head that keeps its tail-extended concavity but trips on the leading
  // zero pad lands in the gray zone.
  const auto gray = classify(std::vector<double>{1.0, 3.0, 3.0}, true);
  CHECK(gray.condition1);
  CHECK_FALSE(gray.condition2);
  CHECK(gray.classification == Classification::Indeterminate);

  // Non-concave head stays non-concave.
  const auto bad = classify(std::vector<double>{1.0, 1.0, 4.0}, true);
  CHECK(bad.classification ==
        Classification::TripleCollisionsPositiveProbability);

  // Condition 1 must consult the constant tail: the two-slot head (1, 0.5)
  // is vacuously concave on its own, but (1, 0.5, 0.5, ...) is not.
  const auto droop = classify(std::vector<double>{1.0, 0.5}, true);
  CHECK_FALSE(droop.condition1);
  CHECK(droop.classification ==
        Classification::TripleCollisionsPositiveProbability);
  const auto lift = classify(std::vector<double>{1.0, 2.0}, true);
  CHECK(lift.condition1);  // (1, 2, 2, ...) is concave
  CHECK(lift.condition2);
  CHECK(lift.classification == Classification::NoTripleCollisions);
}

TEST_CASE("classification names") {
  CHECK(to_string(Classification::NoTripleCollisions) ==
        "NoTripleCollisions");
  CHECK(to_string(Classification::TripleCollisionsPositiveProbability) ==
        "TripleCollisionsPositiveProbability");
  CHECK(to_string(Classification::Indeterminate) == "Indeterminate");
}
