#pragma once

#include "ot/prox.hpp"

namespace ot {

/// Weighted action of a centered field: sum of w |m|^2 / (2 f^beta) over all
/// cells, compensated summation in storage order. Returns +inf as soon as any
/// cell is infeasible (f < 0; f = 0 with m != 0; anything but the exact origin
/// on an impassable cell).
double energy(const CenteredField& V, const CostModel& cost);

/// Telemetry variant that never returns +inf: cells with nonpositive density
/// and |m| <= 1e-12 contribute 0, other infeasible cells contribute a flat
/// 1e15 penalty and are counted. The finite part alone lands in *finite_part.
double capped_energy(const CenteredField& V, const CostModel& cost, long& infeasible_cells,
                     double* finite_part = nullptr);

/// Pointwise transport velocity m / f per component; cells with f <= eps give 0.
std::vector<Array3> velocity_field(const CenteredField& V, double eps = 1e-12);

enum class WeightMode { uniform, obstacle, distance };

/// Euclidean distance from every cell center to the nearest masked cell, with
/// axis spacings (hx, hy); masked cells get 0. Exact: plain scan up to
/// brute_force_limit cells per call, lower-envelope transform above (also exact).
Array2 distance_field(const std::vector<std::uint8_t>& mask, int nx, int ny, double hx,
                      double hy, std::size_t brute_force_limit = 128 * 128);

/// Weight grid from an impassable-cell mask over the centered space-time nodes
/// (Array3 storage order, one byte per cell).
///   uniform:  all ones, mask ignored;
///   obstacle: 1 outside, impassable inside;
///   distance: 1 + distance to the obstacle outside, impassable inside.
/// A time slice that is fully masked makes the problem meaningless and throws
/// DegenerateInputError.
CostModel build_weights(const GridDims& g, const std::vector<std::uint8_t>& mask,
                        WeightMode mode, double beta = 1.0, double min_weight = 1e-6);

/// Same from a static spatial mask (nx * ny bytes) replicated across time.
CostModel build_weights_static(const GridDims& g, const std::vector<std::uint8_t>& spatial_mask,
                               WeightMode mode, double beta = 1.0, double min_weight = 1e-6);

}  // namespace ot
