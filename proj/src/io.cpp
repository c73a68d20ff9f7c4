#include "rankflow/io.hpp"

#include <charconv>
#include <ostream>

namespace rankflow {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          std::size_t decimation,
                          const std::optional<TripleHit>& halt) {
  const std::size_t n = traj.n;
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",X_" << i;
  for (std::size_t j = 1; j <= n; ++j) out << ",rank_" << j;
  for (std::size_t j = 1; j < n; ++j) out << ",Y_" << j;
  out << '\n';

  const std::size_t K = traj.steps();
  for (std::size_t k = 0; k <= K; ++k) {
    if (k % decimation != 0 && k != K) continue;
    out << format_double(traj.times[k]);
    const auto pos = traj.positions_at(k);
    for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(pos[i]);
    const auto ranks = traj.ranks_at(k);
    for (std::size_t j = 0; j < n; ++j) out << ',' << (ranks[j] + 1);
    const auto gaps = traj.spacings_at(k);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      out << ',' << format_double(gaps[j]);
    }
    out << '\n';
  }

  if (halt) {
    // One marker row, padded to the table width (3n columns in total).
    out << "halted_at_triple_proximity,"
        << format_double(traj.times[halt->step]) << ',' << (halt->gap + 1)
        << ',' << format_double(halt->radius);
    for (std::size_t c = 4; c < 3 * n; ++c) out << ',';
    out << '\n';
  }
}

void write_activations_csv(std::ostream& out, const ActiveSetRecord& record) {
  out << "kappa,size\n";
  for (std::size_t i = 0; i < record.kappas.size(); ++i) {
    out << format_double(record.kappas[i]) << ',' << record.sizes[i] << '\n';
  }
}

void write_proximity_csv(std::ostream& out, const ProximityCurve& curve) {
  out << "epsilon,frequency,ci_halfwidth\n";
  for (std::size_t e = 0; e < curve.epsilons.size(); ++e) {
    out << format_double(curve.epsilons[e]) << ','
        << format_double(curve.frequencies[e]) << ','
        << format_double(curve.ci_halfwidths[e]) << '\n';
  }
}

}  // namespace rankflow
