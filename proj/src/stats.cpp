#include "rankflow/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "rankflow/errors.hpp"

namespace rankflow {

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// log of the upper-tail normal probability for z >= 8, via the standard
// continued expansion of Mills' ratio. Good to ~1e-6 relative there, which
// is ample: it only matters when the whole term is below ~1e-14.
double log_normal_tail(double z) {
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
  return -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(z) +
         std::log(series);
}

void check_rbm_args(double y0, double nu2, double t) {
  if (y0 < 0.0) raise(Errc::negative_y, "start must satisfy y0 >= 0");
  if (!(nu2 > 0.0) || !(t > 0.0)) {
    raise(Errc::non_positive_entry, "nu2 and t must be > 0");
  }
}

}  // namespace

double reflected_bm_cdf(double y, double y0, double mu, double nu2, double t) {
  if (y < 0.0) raise(Errc::negative_y, "reflected process is nonnegative");
  check_rbm_args(y0, nu2, t);
  const double s = std::sqrt(nu2 * t);
  const double first = normal_cdf((y - y0 - mu * t) / s);
  const double arg = (-y - y0 - mu * t) / s;
  const double expo = 2.0 * mu * y / nu2;
  double second;
  if (arg > -8.0) {
    second = std::exp(expo) * normal_cdf(arg);
  } else {
    // exp(expo) may overflow while the Gaussian factor underflows; combine
    // the exponents before exponentiating.
    const double log_term = expo + log_normal_tail(-arg);
    second = log_term < -745.0 ? 0.0 : std::exp(log_term);
  }
  return std::clamp(first - second, 0.0, 1.0);
}

double reflected_bm_quantile(double p, double y0, double mu, double nu2,
                             double t) {
  check_rbm_args(y0, nu2, t);
  if (!(p >= 0.0) || !(p < 1.0)) {
    raise(Errc::non_positive_entry, "p must lie in [0, 1)");
  }
  if (p == 0.0) return 0.0;
  double lo = 0.0;
  double hi = y0 + std::abs(mu) * t + 8.0 * std::sqrt(nu2 * t) + 1.0;
  while (reflected_bm_cdf(hi, y0, mu, nu2, t) < p) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (reflected_bm_cdf(mid, y0, mu, nu2, t) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double sum = left + right;
  if (depth <= 0 || std::abs(sum - whole) <= 15.0 * tol) {
    return sum + (sum - whole) / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double reflected_bm_mean(double y0, double mu, double nu2, double t) {
  check_rbm_args(y0, nu2, t);
  const double s = std::sqrt(nu2 * t);
  const double cut = y0 + std::max(mu, 0.0) * t + 13.0 * s + 1.0;
  const auto survival = [&](double y) {
    return 1.0 - reflected_bm_cdf(y, y0, mu, nu2, t);
  };
  return adaptive_simpson(survival, 0.0, cut, 1e-12 * std::max(1.0, cut));
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) raise(Errc::too_few_particles, "no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) raise(Errc::too_few_particles, "no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] == v) ++i;  // consume whole tie groups so
    while (j < b.size() && b[j] == v) ++j;  // both ECDFs are measured at v+
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency()
                                  : threads;
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  if (workers == 1) {
    for (std::size_t p = 0; p < count; ++p) body(p);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t p = next.fetch_add(1, std::memory_order_relaxed);
      if (p >= count) return;
      try {
        body(p);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count, std::memory_order_relaxed);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> mc_samples(const PathFunctional& f, const SystemSpec& spec,
                               double T, double dt, std::size_t n_paths,
                               Seed seed, unsigned threads) {
  if (n_paths == 0) raise(Errc::non_positive_entry, "n_paths must be >= 1");
  if (seed.stream + n_paths > 0x100000000ull) {
    raise(Errc::index_out_of_range, "stream ids exhausted (32-bit)");
  }
  std::vector<double> out(n_paths);
  parallel_for_index(n_paths, threads, [&](std::size_t p) {
    const Trajectory traj =
        simulate_path(spec, T, dt, Seed{seed.value, seed.stream + p});
    out[p] = f(traj);
  });
  return out;
}

McResult mc_mean(const PathFunctional& f, const SystemSpec& spec, double T,
                 double dt, std::size_t n_paths, Seed seed, unsigned threads) {
  const std::vector<double> samples =
      mc_samples(f, spec, T, dt, n_paths, seed, threads);
  McResult r;
  r.n_paths = n_paths;
  r.seed_base = seed;
  const double n = static_cast<double>(n_paths);
  r.estimate = pairwise_sum(samples) / n;
  if (n_paths > 1) {
    std::vector<double> sq(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
      const double d = samples[i] - r.estimate;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (n - 1.0);
    r.std_error = std::sqrt(var / n);
  }
  return r;
}

GapLawResult gap_law_test(const SystemSpec& spec, double T, double dt,
                          std::size_t n_paths, Seed seed, double threshold,
                          unsigned threads) {
  if (spec.size() != 2) {
    raise(Errc::unsupported_dimension, "gap law check needs exactly n = 2");
  }
  const auto terminal_gap = [](const Trajectory& traj) {
    return traj.spacings_at(traj.steps())[0];
  };
  std::vector<double> samples =
      mc_samples(terminal_gap, spec, T, dt, n_paths, seed, threads);

  const double y0 = std::abs(spec.initial[1] - spec.initial[0]);
  const double mu = spec.drifts[1] - spec.drifts[0];
  const double nu2 =
      spec.sigmas[0] * spec.sigmas[0] + spec.sigmas[1] * spec.sigmas[1];
  const double t_eff = static_cast<double>(std::llround(T / dt)) * dt;

  GapLawResult r;
  r.n_paths = n_paths;
  r.threshold = threshold;
  r.ks = ks_statistic(std::move(samples), [&](double y) {
    return y < 0.0 ? 0.0 : reflected_bm_cdf(y, y0, mu, nu2, t_eff);
  });
  r.pass = r.ks <= threshold;
  return r;
}

ProximityCurve triple_proximity_curve(const SystemSpec& spec, double T,
                                      double dt,
                                      std::span<const double> epsilons,
                                      std::size_t n_paths, Seed seed,
                                      unsigned threads) {
  if (spec.size() < 3) {
    raise(Errc::too_few_particles, "proximity curve needs n >= 3");
  }
  if (epsilons.empty()) raise(Errc::bad_epsilon_grid, "empty epsilon grid");
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    if (!(epsilons[e] > 0.0)) {
      raise(Errc::bad_epsilon_grid, "epsilons must be > 0");
    }
    if (e > 0 && !(epsilons[e] < epsilons[e - 1])) {
      raise(Errc::bad_epsilon_grid, "epsilons must be strictly decreasing");
    }
  }
  if (n_paths == 0) raise(Errc::non_positive_entry, "n_paths must be >= 1");

  // One number per path: the closest any adjacent gap pair came to the
  // corner (0, 0). Every epsilon is then a threshold query on the same
  // sample, which makes the curve exactly monotone by construction.
  const auto min_corner_distance = [](const Trajectory& traj) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= traj.steps(); ++k) {
      const auto gaps = traj.spacings_at(k);
      for (std::size_t j = 0; j + 1 < gaps.size(); ++j) {
        best = std::min(best, std::hypot(gaps[j], gaps[j + 1]));
      }
    }
    return best;
  };
  const std::vector<double> dists =
      mc_samples(min_corner_distance, spec, T, dt, n_paths, seed, threads);

  ProximityCurve curve;
  curve.n_paths = n_paths;
  curve.epsilons.assign(epsilons.begin(), epsilons.end());
  const double n = static_cast<double>(n_paths);
  for (double eps : epsilons) {
    std::size_t hits = 0;
    for (double d : dists) {
      if (d <= eps) ++hits;
    }
    const double p = static_cast<double>(hits) / n;
    curve.frequencies.push_back(p);
    curve.ci_halfwidths.push_back(1.96 * std::sqrt(p * (1.0 - p) / n));
  }
  return curve;
}

}  // namespace rankflow
