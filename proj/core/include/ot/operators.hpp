#pragma once

#include <functional>

#include "ot/grid.hpp"

namespace ot {

/// Midpoint average from staggered samples onto the centered lattice.
CenteredField interpolate(const StaggeredField& U);

/// Adjoint of interpolate: spreads half of each centered sample onto its two
/// flanking staggered samples.
StaggeredField interpolate_adjoint(const CenteredField& V);

/// Discrete space-time divergence on the centered lattice:
/// N * dx(m0) + M * dy(m1) + P * dt(f), one-cell differences of staggered data.
Array3 divergence(const StaggeredField& U);

/// Adjoint of divergence (negative staggered gradient with zero padding).
StaggeredField divergence_adjoint(const Array3& p);

/// Embed boundary slab values into an otherwise zero staggered field
/// (adjoint of extract_boundary).
StaggeredField boundary_adjoint(const BoundaryValues& b);

enum class OpTag { interpolation, divergence, constraint };

/// Largest singular value by power iteration on the normal operator,
/// deterministic start vector. Throws ConvergenceError (carrying the last
/// estimate) if max_iter is exhausted before |change| <= tol * estimate.
double estimate_op_norm(const GridDims& g, OpTag op, double tol = 1e-9, int max_iter = 20000);

/// Power iteration core on a flat vector of length n; `apply` must implement a
/// symmetric positive-semidefinite map (typically A*A). Returns sqrt of the
/// dominant eigenvalue.
double power_iteration(std::size_t n,
                       const std::function<void(const double*, double*)>& apply,
                       double tol, int max_iter);

}  // namespace ot
