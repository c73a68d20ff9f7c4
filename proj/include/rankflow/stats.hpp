#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rankflow/sim.hpp"

namespace rankflow {

double normal_cdf(double z);

// Law of Brownian motion with drift mu and variance nu2, reflected at the
// origin, started at y0 >= 0, evaluated at time t > 0:
//   P(Y_t <= y) = Phi((y - y0 - mu t)/s) - e^{2 mu y / nu2} *
//                 Phi((-y - y0 - mu t)/s),   s = sqrt(nu2 t).
// This is the law of the spacing of a two-particle ranked system with gap
// drift mu and gap variance nu2 = sigma_lo^2 + sigma_hi^2.
double reflected_bm_cdf(double y, double y0, double mu, double nu2, double t);

// Inverse of the above in y, by bisection to 1e-12 absolute.
double reflected_bm_quantile(double p, double y0, double mu, double nu2,
                             double t);

// E[Y_t], integrating the survival function (adaptive Simpson).
double reflected_bm_mean(double y0, double mu, double nu2, double t);

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF, and the
// two-sample statistic. Inputs are copied and sorted.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);

// Fixed-topology pairwise (cascade) summation: the result depends only on
// the order of `values`, never on thread count.
double pairwise_sum(std::span<const double> values);

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  Seed seed_base;
};

// Runs `body(p)` for p = 0..count-1 on `threads` workers (0 = hardware).
// Each index writes only its own slot, so results are order-independent.
void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& body);

using PathFunctional = std::function<double(const Trajectory&)>;

// One functional value per path; path p uses stream seed.stream + p, so the
// samples are reproducible path-by-path.
std::vector<double> mc_samples(const PathFunctional& f, const SystemSpec& spec,
                               double T, double dt, std::size_t n_paths,
                               Seed seed, unsigned threads = 0);

// Mean with standard error (pairwise reductions throughout).
McResult mc_mean(const PathFunctional& f, const SystemSpec& spec, double T,
                 double dt, std::size_t n_paths, Seed seed,
                 unsigned threads = 0);

struct GapLawResult {
  double ks = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::size_t n_paths = 0;
};

// Simulates the two-particle system and compares the terminal ranked gap
// against the reflected-Brownian law above.
GapLawResult gap_law_test(const SystemSpec& spec, double T, double dt,
                          std::size_t n_paths, Seed seed, double threshold,
                          unsigned threads = 0);

struct ProximityCurve {
  std::vector<double> epsilons;      // strictly decreasing
  std::vector<double> frequencies;   // fraction of paths entering the ball
  std::vector<double> ci_halfwidths; // 1.96 * binomial standard error
  std::size_t n_paths = 0;
};

// Fraction of paths whose minimal corner distance min_k hypot(Y_j, Y_{j+1})
// reaches each epsilon. Needs n >= 3 and a strictly decreasing grid.
ProximityCurve triple_proximity_curve(const SystemSpec& spec, double T,
                                      double dt,
                                      std::span<const double> epsilons,
                                      std::size_t n_paths, Seed seed,
                                      unsigned threads = 0);

}  // namespace rankflow
