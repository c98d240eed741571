#pragma once

#include <memory>
#include <utility>

#include "ot/cost.hpp"
#include "ot/operators.hpp"

namespace ot {

enum class Algorithm { a_dr, a_dr2, s_dr, s_dr2, pd, centered };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // throws ConfigError

struct SolverConfig {
  Algorithm algo = Algorithm::a_dr;
  double gamma = 1.0 / 75.0;  // prox step
  double alpha = 1.998;       // splitting relaxation, (0, 2)
  double sigma = 85.0;        // dual step (pd)
  double tau = 0.0;           // primal step (pd); 0 picks 0.99 / (sigma |I|^2)
  double theta = 1.0;         // extrapolation (pd), [0, 1]
  int max_iters = 1000;
  double tol = 1e-8;          // stop when the iterate's relative change drops below
  int log_every = 1;
  PoissonBackend backend = PoissonBackend::dct;
  void validate() const;  // throws ConfigError; the pd step-size bound is checked
                          // against |I| at solver construction, not here
};

struct ConvergenceRow {
  int iter = 0;
  double J = 0.0;           // capped objective of the interpolated iterate
  long infeasible = 0;      // cells paying the cap
  double min_f = 0.0;       // most negative density sample
  double div_residual = 0.0;
  double boundary_residual = 0.0;
  double delta_f = 0.0;     // relative density change over the last step
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
};

/// Iterates blew up (objective or norm beyond 1e12, or non-finite values).
/// Carries the telemetry gathered up to the failing iteration.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, ConvergenceRecord partial)
      : NumericalError(what), partial_record(std::move(partial)) {}
  ConvergenceRecord partial_record;
};

struct Problem {
  GridDims dims;
  BoundaryValues b0;
  CostModel cost;

  /// Build from endpoint densities (already validated/normalized by the caller).
  static Problem from_densities(const GridDims& g, const Array2& f0, const Array2& f1,
                                CostModel cost);
  static Problem uniform(const GridDims& g, const Array2& f0, const Array2& f1,
                         double beta = 1.0);
  void validate() const;  // shape checks + endpoint mass compatibility
};

/// Deterministic start: zero momentum, density linear in time between the
/// endpoints (exact at both boundary slabs).
StaggeredField initial_field(const Problem& p);
CenteredField initial_centered(const Problem& p);

struct IterateView {
  const StaggeredField* U = nullptr;
  const CenteredField* V = nullptr;
};

/// Douglas-Rachford over the staggered variables, four orderings:
///   a_dr : two blocks, first prox = (divergence-free projection, cost prox)
///   a_dr2: two blocks, proxes swapped
///   s_dr : four blocks, first prox adds the interpolation coupling, second averages
///   s_dr2: averaging first
/// primary() is the block that went through the constraint projection — its U
/// is exactly divergence-free with pinned boundary and its V is the cost-prox
/// output. mirror() is the block that went through the coupling projection —
/// its V equals the interpolation of its U.
class DRSolver {
 public:
  DRSolver(const Problem& p, const SolverConfig& cfg);
  ~DRSolver();
  DRSolver(DRSolver&&) noexcept;
  DRSolver& operator=(DRSolver&&) noexcept;

  void step();
  int iterations() const;
  IterateView primary() const;
  IterateView mirror() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Primal-dual iteration: dual ascent through the conjugate cost prox, primal
/// descent through the divergence-free projection, overrelaxed primal point fed
/// to the interpolation.
class PDSolver {
 public:
  PDSolver(const Problem& p, const SolverConfig& cfg);  // throws ConfigError when
                                                        // sigma tau |I|^2 >= 1
  ~PDSolver();
  PDSolver(PDSolver&&) noexcept;
  PDSolver& operator=(PDSolver&&) noexcept;

  void step();
  int iterations() const;
  const StaggeredField& U() const;
  const StaggeredField& extrapolated() const;
  const CenteredField& dual() const;
  double op_norm() const;
  double tau() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Linear equality constraint of the all-centered formulation: forward
/// divergence rows over the interior plus boundary rows pinning the normal
/// momentum at the spatial walls and the density at both time ends. One
/// redundant divergence row is dropped so the system has full row rank.
class CenteredConstraint {
 public:
  CenteredConstraint(const GridDims& g, const BoundaryValues& b0);
  ~CenteredConstraint();
  CenteredConstraint(CenteredConstraint&&) noexcept;
  CenteredConstraint& operator=(CenteredConstraint&&) noexcept;

  std::size_t rows() const;
  std::size_t divergence_rows() const;
  std::size_t cols() const;

  std::vector<double> apply(const CenteredField& V) const;          // A V
  CenteredField apply_adjoint(const std::vector<double>& s) const;  // A* s
  std::vector<double> solve_normal(const std::vector<double>& r) const;  // (A A*)^{-1} r
  const std::vector<double>& target() const;                        // y

  void project(CenteredField& V) const;  // onto { A V = y }
  /// (max |divergence row residual|, max |boundary row residual|)
  std::pair<double, double> residuals(const CenteredField& V) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Douglas-Rachford on the centered variables: constraint projection first,
/// cost prox second. With alpha = 1 it reproduces ADMM on the dual, step for step.
class CenteredDRSolver {
 public:
  CenteredDRSolver(const Problem& p, const SolverConfig& cfg);
  void step();
  int iterations() const;
  const CenteredField& iterate() const;  // cost-prox output
  const CenteredConstraint& constraint() const;

 private:
  Problem prob_;
  SolverConfig cfg_;
  CenteredConstraint cons_;
  CenteredField z_, w_;
  int iters_ = 0;
};

/// ADMM on the dual of the centered problem, written on the splitting
/// min F(s) + H(q) s.t. B s = q with B = -A*. The s-update is resolved in
/// closed form through the normal equations; the q-update is the cellwise
/// projection onto the cost's conjugate set. multiplier() returns gamma times
/// the scaled multiplier, which tracks the centered DR iterate with alpha = 1.
class ADMMDualSolver {
 public:
  ADMMDualSolver(const Problem& p, const SolverConfig& cfg);
  void step();
  int iterations() const;
  CenteredField multiplier() const;

 private:
  Problem prob_;
  SolverConfig cfg_;
  CenteredConstraint cons_;
  CenteredField q_, u_;
  int iters_ = 0;
};

struct SolveResult {
  GridDims dims;
  bool has_staggered = true;   // false for the centered algorithm
  StaggeredField U;            // primary staggered iterate (empty when centered)
  CenteredField V;             // interpolated iterate (or the centered iterate)
  CenteredField prox_V;        // last cost-prox output (exactly 0 on impassable cells)
  ConvergenceRecord record;
  int iters = 0;
  bool converged = false;
};

/// Run the configured algorithm from the deterministic start until the iterate
/// stops moving (relative change below cfg.tol on two consecutive steps) or the
/// budget runs out. Telemetry rows land every cfg.log_every iterations plus the
/// final one.
SolveResult solve(const Problem& p, const SolverConfig& cfg);

}  // namespace ot
