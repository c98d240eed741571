#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ot/grid.hpp"

namespace ot {

/// Linear-solver backend for the constraint projection's normal system.
enum class PoissonBackend { dct, cg };

/// Per-cell cost description: exponent beta in [0,1] and a positive weight per
/// centered node. Impassable cells carry an explicit infinite flag; the stored
/// weight value there is ignored.
struct CostModel {
  double beta = 1.0;
  double min_weight = 1e-6;  // finite weights must exceed this
  Array3 weight;             // (nx, ny, nt)
  std::vector<std::uint8_t> infinite;  // parallel to weight.v; nonzero = impassable

  static CostModel uniform(const GridDims& g, double beta = 1.0);
  void validate(const GridDims& g) const;
  bool any_infinite() const;
};

/// Proximal map of the kinetic-energy integrand
///   j(m, f) = |m|^2 / (2 f)   (f > 0;  0 at the origin;  +inf elsewhere)
/// with step gamma. Writes d momentum entries to m_out, returns the density.
/// The density solves the largest-root cubic (X - ft)(X + gamma)^2 = gamma |mt|^2 / 2.
double prox_j(const double* mt, int d, double ft, double gamma, double* m_out);

/// Generalized integrand |m|^2 / (2 f^beta), beta in [0, 1], with a per-cell
/// weight scaling the step (infinite weight collapses the cell to the origin).
/// beta = 1 reduces exactly to prox_j; beta = 0 decouples into a scalar shrink
/// on m and a positive-part clamp on f.
double prox_j_beta(const double* mt, int d, double ft, double gamma, double beta,
                   double weight, double* m_out);

/// Orthogonal projection onto the paraboloid region {(a, b) : |a|^2 + 2 b <= 0}, evaluated
/// through the Moreau identity with prox_j at step gamma.
void project_paraboloid(const double* a, int d, double b, double gamma,
                        double* a_out, double* b_out);

/// Cell-wise prox of the weighted cost over a centered field, in place.
void prox_J(CenteredField& V, double gamma, const CostModel& cost);

/// Workspace bound to one grid: spectral plans and eigenvalue tables for the
/// constraint projection, tridiagonal factorizations for the coupling
/// projection, and conjugate-gradient buffers for the fallback backend.
/// Not thread-safe; use one instance per solver.
class ProxScratch {
 public:
  explicit ProxScratch(const GridDims& g, PoissonBackend backend = PoissonBackend::dct);
  ~ProxScratch();
  ProxScratch(ProxScratch&&) noexcept;
  ProxScratch& operator=(ProxScratch&&) noexcept;
  ProxScratch(const ProxScratch&) = delete;
  ProxScratch& operator=(const ProxScratch&) = delete;

  const GridDims& dims() const;
  PoissonBackend backend() const;

  /// Solve L p = r where L is the space-time Laplacian with natural (Neumann)
  /// boundary closure, the normal operator of the pinned-boundary divergence.
  /// r must be mean-free up to rounding; the returned p is mean-free.
  void poisson_solve(const Array3& r, Array3& p);

  /// Solve (Id + I* I) x = rhs in place, independently along every staggered
  /// line (I is the midpoint interpolation along that component's axis).
  void coupling_solve(StaggeredField& rhs);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Joint projection onto the coupling set {(U, V) : V = I(U)}:
/// U_out = (Id + I*I)^{-1} (U + I*(V)), V_out = I(U_out).
void project_coupling(const StaggeredField& U, const CenteredField& V, ProxScratch& scratch,
                      StaggeredField& U_out, CenteredField& V_out);

/// Orthogonal projection onto {U : div(U) = 0, boundary(U) = b0}, in place.
/// Pins the boundary slabs to b0 exactly, then corrects the interior through
/// one Poisson solve. Throws FeasibilityError when b0's two densities carry
/// different total mass.
void project_constraints(StaggeredField& U, const BoundaryValues& b0, ProxScratch& scratch);

}  // namespace ot
