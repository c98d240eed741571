#include "ot/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ot {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::a_dr: return "a-dr";
    case Algorithm::a_dr2: return "a-dr2";
    case Algorithm::s_dr: return "s-dr";
    case Algorithm::s_dr2: return "s-dr2";
    case Algorithm::pd: return "pd";
    case Algorithm::centered: return "centered";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::a_dr, Algorithm::a_dr2, Algorithm::s_dr, Algorithm::s_dr2,
                      Algorithm::pd, Algorithm::centered})
    if (name == algorithm_name(a)) return a;
  throw ConfigError("unknown solver '" + name +
                    "' (expected a-dr, a-dr2, s-dr, s-dr2, pd or centered)");
}

void SolverConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  if (!(alpha > 0.0) || !(alpha < 2.0)) throw ConfigError("alpha must lie in (0, 2)");
  if (algo == Algorithm::pd) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau))
      throw ConfigError("tau must be nonnegative (0 selects the largest stable step)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  }
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(tol >= 0.0)) throw ConfigError("tol must be nonnegative");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
}

Problem Problem::from_densities(const GridDims& g, const Array2& f0, const Array2& f1,
                                CostModel cost) {
  Problem p;
  p.dims = g;
  p.b0 = assemble_boundary_target(g, f0, f1);
  p.cost = std::move(cost);
  p.validate();
  return p;
}

Problem Problem::uniform(const GridDims& g, const Array2& f0, const Array2& f1, double beta) {
  return from_densities(g, f0, f1, CostModel::uniform(g, beta));
}

void Problem::validate() const {
  dims.validate();
  cost.validate(dims);
  if (b0.f0.n0 != dims.nx() || b0.f0.n1 != dims.ny() || !b0.f0.same_shape(b0.f1))
    throw DimensionError("problem: boundary densities do not match the grid");
  const double m0 = total_mass(b0.f0);
  const double m1 = total_mass(b0.f1);
  if (std::abs(m0 - m1) > 1e-12 * std::max(1.0, std::abs(m0)))
    throw FeasibilityError("problem: endpoint masses differ beyond tolerance");
}

StaggeredField initial_field(const Problem& p) {
  StaggeredField U = StaggeredField::zeros(p.dims);
  const int nts = U.f.n2;  // nt + 1 staggered time samples
  for (int ts = 0; ts < nts; ++ts) {
    const double s = static_cast<double>(ts) / (nts - 1);
    for (int i = 0; i < U.f.n0; ++i)
      for (int j = 0; j < U.f.n1; ++j)
        U.f(i, j, ts) = (1.0 - s) * p.b0.f0(i, j) + s * p.b0.f1(i, j);
  }
  return U;
}

CenteredField initial_centered(const Problem& p) {
  CenteredField V = CenteredField::zeros(p.dims);
  const int nt = V.f.n2;
  for (int t = 0; t < nt; ++t) {
    const double s = static_cast<double>(t) / (nt - 1);
    for (int i = 0; i < V.f.n0; ++i)
      for (int j = 0; j < V.f.n1; ++j)
        V.f(i, j, t) = (1.0 - s) * p.b0.f0(i, j) + s * p.b0.f1(i, j);
  }
  return V;
}

namespace {

struct Block {
  StaggeredField U;
  CenteredField V;
};

// t = 2 z - w
void reflect(Block& t, const Block& z, const Block& w) {
  t = z;
  t.U *= 2.0;
  t.V *= 2.0;
  t.U -= w.U;
  t.V -= w.V;
}

// w += alpha (x - z)
void relax(Block& w, double alpha, const Block& x, const Block& z) {
  axpy(w.U, alpha, x.U);
  axpy(w.V, alpha, x.V);
  axpy(w.U, -alpha, z.U);
  axpy(w.V, -alpha, z.V);
}

}  // namespace

struct DRSolver::Impl {
  Problem prob;
  SolverConfig cfg;
  ProxScratch scratch;
  bool quad;
  Block z1, z2, w1, w2, x1, x2, t1, t2;
  int iters = 0;

  Impl(const Problem& p, const SolverConfig& c)
      : prob(p), cfg(c), scratch(p.dims, c.backend),
        quad(c.algo == Algorithm::s_dr || c.algo == Algorithm::s_dr2) {
    Block init;
    init.U = initial_field(prob);
    init.V = interpolate(init.U);
    z1 = init;
    w1 = init;
    x1 = init;
    t1 = init;
    if (quad) {
      z2 = init;
      w2 = init;
      x2 = init;
      t2 = init;
    }
  }

  // in-place: divergence-free projection on U, cost prox on V
  void prox_cost_constraint(Block& b) {
    project_constraints(b.U, prob.b0, scratch);
    prox_J(b.V, cfg.gamma, prob.cost);
  }

  void prox_couple(const Block& in, Block& out) {
    project_coupling(in.U, in.V, scratch, out.U, out.V);
  }

  // both outputs are the bitwise-identical pairwise average
  void prox_average(const Block& a, const Block& b, Block& oa, Block& ob) {
    oa = a;
    oa.U += b.U;
    oa.V += b.V;
    oa.U *= 0.5;
    oa.V *= 0.5;
    ob = oa;
  }

  void step() {
    switch (cfg.algo) {
      case Algorithm::a_dr:
        reflect(t1, z1, w1);
        x1 = t1;
        prox_cost_constraint(x1);
        relax(w1, cfg.alpha, x1, z1);
        prox_couple(w1, z1);
        break;
      case Algorithm::a_dr2:
        reflect(t1, z1, w1);
        prox_couple(t1, x1);
        relax(w1, cfg.alpha, x1, z1);
        z1 = w1;
        prox_cost_constraint(z1);
        break;
      case Algorithm::s_dr:
        reflect(t1, z1, w1);
        reflect(t2, z2, w2);
        x1 = t1;
        prox_cost_constraint(x1);
        prox_couple(t2, x2);
        relax(w1, cfg.alpha, x1, z1);
        relax(w2, cfg.alpha, x2, z2);
        prox_average(w1, w2, z1, z2);
        break;
      case Algorithm::s_dr2:
        reflect(t1, z1, w1);
        reflect(t2, z2, w2);
        prox_average(t1, t2, x1, x2);
        relax(w1, cfg.alpha, x1, z1);
        relax(w2, cfg.alpha, x2, z2);
        z1 = w1;
        prox_cost_constraint(z1);
        prox_couple(w2, z2);
        break;
      default:
        throw ConfigError("DRSolver: not a splitting algorithm");
    }
    ++iters;
  }

  IterateView primary() const {
    switch (cfg.algo) {
      case Algorithm::a_dr:
      case Algorithm::s_dr: return {&x1.U, &x1.V};
      default: return {&z1.U, &z1.V};
    }
  }

  IterateView mirror() const {
    switch (cfg.algo) {
      case Algorithm::a_dr: return {&z1.U, &z1.V};
      case Algorithm::a_dr2: return {&x1.U, &x1.V};
      case Algorithm::s_dr: return {&x2.U, &x2.V};
      default: return {&z2.U, &z2.V};
    }
  }
};

DRSolver::DRSolver(const Problem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  if (cfg.algo == Algorithm::pd || cfg.algo == Algorithm::centered)
    throw ConfigError("DRSolver handles the staggered splitting variants only");
  impl_ = std::make_unique<Impl>(p, cfg);
}
DRSolver::~DRSolver() = default;
DRSolver::DRSolver(DRSolver&&) noexcept = default;
DRSolver& DRSolver::operator=(DRSolver&&) noexcept = default;
void DRSolver::step() { impl_->step(); }
int DRSolver::iterations() const { return impl_->iters; }
IterateView DRSolver::primary() const { return impl_->primary(); }
IterateView DRSolver::mirror() const { return impl_->mirror(); }

struct PDSolver::Impl {
  Problem prob;
  SolverConfig cfg;
  ProxScratch scratch;
  double op_norm = 0.0;
  double tau = 0.0;
  StaggeredField U, Uprev, Ups, tmpU;
  CenteredField dual, arg, moreau, tmpV;
  int iters = 0;

  Impl(const Problem& p, const SolverConfig& c)
      : prob(p), cfg(c), scratch(p.dims, c.backend) {
    op_norm = estimate_op_norm(prob.dims, OpTag::interpolation);
    tau = cfg.tau > 0.0 ? cfg.tau : 0.99 / (cfg.sigma * op_norm * op_norm);
    if (!(cfg.sigma * tau * op_norm * op_norm < 1.0))
      throw ConfigError("pd steps violate the stability bound sigma*tau*|I|^2 < 1");
    U = initial_field(prob);
    Uprev = U;
    Ups = U;
    dual = CenteredField::zeros(prob.dims);
  }

  void step() {
    // dual ascent through the conjugate cost prox (Moreau)
    tmpV = interpolate(Ups);
    arg = dual;
    axpy(arg, cfg.sigma, tmpV);
    moreau = arg;
    moreau *= 1.0 / cfg.sigma;
    prox_J(moreau, 1.0 / cfg.sigma, prob.cost);
    dual = arg;
    axpy(dual, -cfg.sigma, moreau);
    // primal descent + feasibility projection
    Uprev = U;
    tmpU = interpolate_adjoint(dual);
    axpy(U, -tau, tmpU);
    project_constraints(U, prob.b0, scratch);
    // extrapolation; theta = 0 hands the plain iterate to the next dual step
    if (cfg.theta == 0.0) {
      Ups = U;
    } else {
      Ups = U;
      Ups *= 1.0 + cfg.theta;
      axpy(Ups, -cfg.theta, Uprev);
    }
    ++iters;
  }
};

PDSolver::PDSolver(const Problem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  impl_ = std::make_unique<Impl>(p, cfg);
}
PDSolver::~PDSolver() = default;
PDSolver::PDSolver(PDSolver&&) noexcept = default;
PDSolver& PDSolver::operator=(PDSolver&&) noexcept = default;
void PDSolver::step() { impl_->step(); }
int PDSolver::iterations() const { return impl_->iters; }
const StaggeredField& PDSolver::U() const { return impl_->U; }
const StaggeredField& PDSolver::extrapolated() const { return impl_->Ups; }
const CenteredField& PDSolver::dual() const { return impl_->dual; }
double PDSolver::op_norm() const { return impl_->op_norm; }
double PDSolver::tau() const { return impl_->tau; }

namespace {

constexpr double kBlowup = 1e12;

ConvergenceRow staggered_row(int iter, const StaggeredField& U, const Problem& p, double rel,
                             double* finite_out) {
  ConvergenceRow row;
  row.iter = iter;
  const CenteredField V = interpolate(U);
  double finite = 0.0;
  row.J = capped_energy(V, p.cost, row.infeasible, &finite);
  row.min_f = *std::min_element(U.f.v.begin(), U.f.v.end());
  row.div_residual = linf(divergence(U));
  row.boundary_residual = boundary_distance(extract_boundary(U), p.b0);
  row.delta_f = rel;
  if (finite_out) *finite_out = finite;
  return row;
}

struct LoopOutcome {
  ConvergenceRecord record;
  int iters = 0;
  bool converged = false;
};

// Tracks the relative change of the full iterate (momentum and density alike)
// between consecutive steps.  The stop decision must see the whole field: on
// symmetric instances a splitting can leave the density bitwise-frozen for the
// first couple of iterations while the momentum is already moving.
template <class Field>
struct RelTracker {
  Field prev;
  Field tmp;
  explicit RelTracker(Field init) : prev(std::move(init)) {}
  // returns {relative change, current norm}
  std::pair<double, double> operator()(const Field& cur) {
    tmp = cur;
    tmp -= prev;
    const double n = std::sqrt(norm2_sq(cur));
    const double rel = std::sqrt(norm2_sq(tmp)) / std::max(n, 1e-300);
    prev = cur;
    return {rel, n};
  }
};

template <class StepFn, class FieldFn, class StateFn, class RowFn>
LoopOutcome run_loop(const SolverConfig& cfg, const Array3& f_init, StepFn do_step,
                     FieldFn current_f, StateFn state_rel, RowFn make_row) {
  LoopOutcome out;
  Array3 prev_f = f_init;
  Array3 diff;
  double ref_finite = -1.0;  // first logged objective; growth is judged against it
  int calm = 0;              // consecutive sub-tolerance steps
  for (int l = 1; l <= cfg.max_iters; ++l) {
    do_step();
    const auto [rel_state, n] = state_rel();
    if (!std::isfinite(n) || n > kBlowup)
      throw DivergenceError("solver diverged: iterate norm exploded at iteration " +
                                std::to_string(l),
                            std::move(out.record));
    const Array3& f = current_f();
    diff = f;
    diff -= prev_f;
    const double rel = std::sqrt(norm2_sq(diff)) / std::max(std::sqrt(norm2_sq(f)), 1e-300);
    prev_f = f;
    if (!std::isfinite(rel_state))
      throw DivergenceError("solver diverged: non-finite iterate at iteration " +
                                std::to_string(l),
                            std::move(out.record));
    // a single tiny step can be an alignment accident (the first iterate of a
    // splitting often leaves the field untouched); ask for two in a row
    calm = rel_state < cfg.tol ? calm + 1 : 0;
    const bool stop = calm >= 2;
    const bool last = l == cfg.max_iters;
    if (stop || last || l % cfg.log_every == 0) {
      double finite = 0.0;
      out.record.rows.push_back(make_row(l, rel, &finite));
      if (ref_finite < 0.0 && std::isfinite(finite)) ref_finite = std::max(1.0, finite);
      if (!std::isfinite(finite) || finite > kBlowup * std::max(1.0, ref_finite))
        throw DivergenceError("solver diverged: objective exploded at iteration " +
                                  std::to_string(l),
                              std::move(out.record));
    }
    out.iters = l;
    if (stop) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

SolveResult solve(const Problem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  SolveResult res;
  res.dims = p.dims;
  LoopOutcome out;
  if (cfg.algo == Algorithm::centered) {
    CenteredDRSolver solver(p, cfg);
    RelTracker<CenteredField> track(initial_centered(p));
    out = run_loop(
        cfg, initial_centered(p).f, [&] { solver.step(); },
        [&]() -> const Array3& { return solver.iterate().f; },
        [&] { return track(solver.iterate()); },
        [&](int l, double rel, double* finite) {
          ConvergenceRow row;
          row.iter = l;
          const CenteredField& V = solver.iterate();
          row.J = capped_energy(V, p.cost, row.infeasible, finite);
          row.min_f = *std::min_element(V.f.v.begin(), V.f.v.end());
          std::tie(row.div_residual, row.boundary_residual) = solver.constraint().residuals(V);
          row.delta_f = rel;
          return row;
        });
    res.has_staggered = false;
    res.V = solver.iterate();
    res.prox_V = solver.iterate();
  } else if (cfg.algo == Algorithm::pd) {
    PDSolver solver(p, cfg);
    RelTracker<StaggeredField> track(initial_field(p));
    out = run_loop(
        cfg, initial_field(p).f, [&] { solver.step(); },
        [&]() -> const Array3& { return solver.U().f; },
        [&] { return track(solver.U()); },
        [&](int l, double rel, double* finite) {
          return staggered_row(l, solver.U(), p, rel, finite);
        });
    res.U = solver.U();
    res.V = interpolate(res.U);
    res.prox_V = res.V;
  } else {
    DRSolver solver(p, cfg);
    RelTracker<StaggeredField> track(initial_field(p));
    out = run_loop(
        cfg, initial_field(p).f, [&] { solver.step(); },
        [&]() -> const Array3& { return solver.primary().U->f; },
        [&] { return track(*solver.primary().U); },
        [&](int l, double rel, double* finite) {
          return staggered_row(l, *solver.primary().U, p, rel, finite);
        });
    res.U = *solver.primary().U;
    res.V = interpolate(res.U);
    res.prox_V = *solver.primary().V;
  }
  res.record = std::move(out.record);
  res.iters = out.iters;
  res.converged = out.converged;
  return res;
}

}  // namespace ot
