#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "rankflow/infinite.hpp"
#include "rankflow/sim.hpp"
#include "rankflow/stats.hpp"

namespace rankflow {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// Columns: t, X_1..X_n (named positions), rank_1..rank_n (1-based particle
// id per slot), Y_1..Y_{n-1} (ranked spacings). Rows are every
// `decimation`-th grid point plus always the final one. A halt appends one
// marker row padded to the same width.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          std::size_t decimation,
                          const std::optional<TripleHit>& halt);

void write_activations_csv(std::ostream& out, const ActiveSetRecord& record);

void write_proximity_csv(std::ostream& out, const ProximityCurve& curve);

}  // namespace rankflow
