#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ot/solvers.hpp"

/// Slow reference implementations for validating the production code: direct
/// scans, dense linear algebra and explicitly assembled stencils, written
/// against the definitions rather than the optimized formulas.
namespace ot::testkit {

struct ProxOracleResult {
  double m[3] = {0.0, 0.0, 0.0};
  double f = 0.0;
  double value = 0.0;  // attained prox objective
};

/// Minimizes 0.5(|m - mt|^2 + (f - ft)^2) + gamma * weight * |m|^2 / (2 f^beta)
/// by a log-spaced scan over f followed by golden-section refinement, with the
/// origin checked separately. Independent of the root-finding production path.
ProxOracleResult oracle_prox(const double* mt, int d, double ft, double gamma,
                             double beta = 1.0, double weight = 1.0);

/// Orthogonal projection onto {div U = 0, boundary = b0} through a dense
/// complete-orthogonal factorization of the explicitly assembled constraint
/// matrix. Throws SizeError beyond 5000 unknowns.
StaggeredField oracle_project(const StaggeredField& U, const BoundaryValues& b0);

/// Dense solve of the interpolation-coupling projection:
/// (Id + I* I) u = U + I* V, followed by v = I u.
std::pair<StaggeredField, CenteredField> oracle_couple(const StaggeredField& U,
                                                       const CenteredField& V);

struct DenseOp {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major

  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

/// Explicit stencil matrices over the flattened variables (momentum components
/// first, then the density, each in storage order).
DenseOp dense_interpolation(const GridDims& g);  // staggered -> centered
DenseOp dense_divergence(const GridDims& g);     // staggered -> centered lattice

double spectral_norm(const DenseOp& op);  // largest singular value

std::vector<double> flatten(const StaggeredField& U);
std::vector<double> flatten(const CenteredField& V);
void unflatten(const std::vector<double>& v, StaggeredField& U);
void unflatten(const std::vector<double>& v, CenteredField& V);

/// Golden-section minimizer of a unimodal function on [lo, hi]; returns the
/// midpoint of the final bracket of width <= tol.
double golden_min(const std::function<double(double)>& phi, double lo, double hi, double tol);

/// Deterministic pseudo-random fills, entries uniform in [-1, 1].
void fill_random(StaggeredField& U, std::uint64_t seed);
void fill_random(CenteredField& V, std::uint64_t seed);
void fill_random(std::vector<double>& v, std::uint64_t seed);

/// Two unnormalized Gaussian blobs on the spatial sample lattice.
std::pair<Array2, Array2> gaussian_pair(const GridDims& g, double sigma, double cx0, double cy0,
                                        double cx1, double cy1);

}  // namespace ot::testkit
