#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ot/solvers.hpp"

namespace ot {
namespace {

constexpr std::size_t kMaxUnknowns = 200000;

std::size_t flat_index(const GridDims& g, int i, int j, int t) {
  return (static_cast<std::size_t>(t) * g.nx() + i) * g.ny() + j;
}

}  // namespace

struct CenteredConstraint::Impl {
  GridDims dims;
  std::size_t size = 0;      // samples per component
  std::size_t div_rows = 0;  // divergence rows kept (one dropped)
  Eigen::SparseMatrix<double> A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> normal;
  Eigen::VectorXd y;
  std::vector<double> y_std;

  Impl(const GridDims& g, const BoundaryValues& b0) : dims(g) {
    dims.validate();
    size = dims.centered_size();
    const std::size_t cols = static_cast<std::size_t>(dims.d + 1) * size;
    if (cols > kMaxUnknowns)
      throw SizeError("centered constraint: grid too large for the all-at-once factorization");
    if (b0.f0.n0 != dims.nx() || b0.f0.n1 != dims.ny() || !b0.f0.same_shape(b0.f1))
      throw DimensionError("centered constraint: boundary densities do not match the grid");

    const int nx = dims.nx(), ny = dims.ny(), nt = dims.nt();
    const std::size_t fcol = static_cast<std::size_t>(dims.d) * size;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> rhs;
    std::size_t row = 0;

    // forward-difference divergence over interior cells, storage order; the
    // last cell carries the one redundant row and is dropped
    const std::size_t total_cells = static_cast<std::size_t>(dims.N) *
                                    (dims.d == 2 ? dims.M : 1) * dims.P;
    std::size_t cell = 0;
    for (int t = 0; t + 1 < nt; ++t)
      for (int i = 0; i + 1 < nx; ++i)
        for (int j = 0; j + 1 < (dims.d == 2 ? ny : 2); ++j) {
          if (++cell == total_cells) continue;  // dropped row
          const double sx = dims.scale(0);
          trip.emplace_back(row, flat_index(dims, i + 1, j, t), sx);
          trip.emplace_back(row, flat_index(dims, i, j, t), -sx);
          if (dims.d == 2) {
            const double sy = dims.scale(1);
            trip.emplace_back(row, size + flat_index(dims, i, j + 1, t), sy);
            trip.emplace_back(row, size + flat_index(dims, i, j, t), -sy);
          }
          const double st = dims.scale(2);
          trip.emplace_back(row, fcol + flat_index(dims, i, j, t + 1), st);
          trip.emplace_back(row, fcol + flat_index(dims, i, j, t), -st);
          rhs.push_back(0.0);
          ++row;
        }
    div_rows = row;

    // boundary rows: normal momentum pinned to zero at the spatial walls
    for (int t = 0; t < nt; ++t)
      for (int j = 0; j < ny; ++j)
        for (int i : {0, nx - 1}) {
          trip.emplace_back(row, flat_index(dims, i, j, t), 1.0);
          rhs.push_back(0.0);
          ++row;
        }
    if (dims.d == 2)
      for (int t = 0; t < nt; ++t)
        for (int i = 0; i < nx; ++i)
          for (int j : {0, ny - 1}) {
            trip.emplace_back(row, size + flat_index(dims, i, j, t), 1.0);
            rhs.push_back(0.0);
            ++row;
          }

    // density pinned to the endpoint data at both time ends
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        trip.emplace_back(row, fcol + flat_index(dims, i, j, 0), 1.0);
        rhs.push_back(b0.f0(i, j));
        ++row;
        trip.emplace_back(row, fcol + flat_index(dims, i, j, nt - 1), 1.0);
        rhs.push_back(b0.f1(i, j));
        ++row;
      }

    A.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cols));
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    y = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    y_std = rhs;

    Eigen::SparseMatrix<double> aat = (A * A.transpose()).pruned();
    normal.compute(aat);
    if (normal.info() != Eigen::Success)
      throw NumericalError("centered constraint: normal-equation factorization failed");
    if (normal.vectorD().minCoeff() <= 0.0)
      throw NumericalError("centered constraint: row rank deficiency detected");
  }

  Eigen::VectorXd to_vec(const CenteredField& V) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>((dims.d + 1) * size));
    for (int c = 0; c < dims.d; ++c)
      std::copy(V.m[static_cast<std::size_t>(c)].v.begin(),
                V.m[static_cast<std::size_t>(c)].v.end(),
                v.data() + static_cast<std::size_t>(c) * size);
    std::copy(V.f.v.begin(), V.f.v.end(), v.data() + static_cast<std::size_t>(dims.d) * size);
    return v;
  }

  void from_vec(const Eigen::VectorXd& v, CenteredField& V) const {
    for (int c = 0; c < dims.d; ++c)
      std::copy(v.data() + static_cast<std::size_t>(c) * size,
                v.data() + static_cast<std::size_t>(c + 1) * size,
                V.m[static_cast<std::size_t>(c)].v.begin());
    std::copy(v.data() + static_cast<std::size_t>(dims.d) * size,
              v.data() + static_cast<std::size_t>(dims.d + 1) * size, V.f.v.begin());
  }
};

CenteredConstraint::CenteredConstraint(const GridDims& g, const BoundaryValues& b0)
    : impl_(std::make_unique<Impl>(g, b0)) {}
CenteredConstraint::~CenteredConstraint() = default;
CenteredConstraint::CenteredConstraint(CenteredConstraint&&) noexcept = default;
CenteredConstraint& CenteredConstraint::operator=(CenteredConstraint&&) noexcept = default;

std::size_t CenteredConstraint::rows() const { return static_cast<std::size_t>(impl_->A.rows()); }
std::size_t CenteredConstraint::divergence_rows() const { return impl_->div_rows; }
std::size_t CenteredConstraint::cols() const { return static_cast<std::size_t>(impl_->A.cols()); }

std::vector<double> CenteredConstraint::apply(const CenteredField& V) const {
  V.check_shape();
  if (!(V.dims == impl_->dims)) throw DimensionError("centered constraint: field dims mismatch");
  Eigen::VectorXd r = impl_->A * impl_->to_vec(V);
  return std::vector<double>(r.data(), r.data() + r.size());
}

CenteredField CenteredConstraint::apply_adjoint(const std::vector<double>& s) const {
  if (s.size() != rows()) throw DimensionError("centered constraint: row vector size mismatch");
  const Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(s.size()));
  Eigen::VectorXd v = impl_->A.transpose() * sv;
  CenteredField V = CenteredField::zeros(impl_->dims);
  impl_->from_vec(v, V);
  return V;
}

std::vector<double> CenteredConstraint::solve_normal(const std::vector<double>& r) const {
  if (r.size() != rows()) throw DimensionError("centered constraint: row vector size mismatch");
  const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
  Eigen::VectorXd s = impl_->normal.solve(rv);
  return std::vector<double>(s.data(), s.data() + s.size());
}

const std::vector<double>& CenteredConstraint::target() const { return impl_->y_std; }

void CenteredConstraint::project(CenteredField& V) const {
  V.check_shape();
  if (!(V.dims == impl_->dims)) throw DimensionError("centered constraint: field dims mismatch");
  Eigen::VectorXd v = impl_->to_vec(V);
  Eigen::VectorXd r = impl_->A * v - impl_->y;
  v -= impl_->A.transpose() * impl_->normal.solve(r);
  impl_->from_vec(v, V);
}

std::pair<double, double> CenteredConstraint::residuals(const CenteredField& V) const {
  const std::vector<double> av = apply(V);
  double dres = 0.0, bres = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) {
    const double e = std::abs(av[k] - impl_->y_std[k]);
    double& slot = k < impl_->div_rows ? dres : bres;
    slot = std::max(slot, e);
  }
  return {dres, bres};
}

CenteredDRSolver::CenteredDRSolver(const Problem& p, const SolverConfig& cfg)
    : prob_(p), cfg_(cfg), cons_(p.dims, p.b0) {
  prob_.validate();
  cfg_.validate();
  z_ = initial_centered(prob_);
  w_ = z_;
}

void CenteredDRSolver::step() {
  CenteredField x = z_;
  x *= 2.0;
  x -= w_;
  cons_.project(x);
  axpy(w_, cfg_.alpha, x);
  axpy(w_, -cfg_.alpha, z_);
  z_ = w_;
  prox_J(z_, cfg_.gamma, prob_.cost);
  ++iters_;
}

int CenteredDRSolver::iterations() const { return iters_; }
const CenteredField& CenteredDRSolver::iterate() const { return z_; }
const CenteredConstraint& CenteredDRSolver::constraint() const { return cons_; }

ADMMDualSolver::ADMMDualSolver(const Problem& p, const SolverConfig& cfg)
    : prob_(p), cfg_(cfg), cons_(p.dims, p.b0) {
  prob_.validate();
  cfg_.validate();
  u_ = initial_centered(prob_);
  u_ *= 1.0 / cfg_.gamma;
  q_ = CenteredField::zeros(prob_.dims);
}

void ADMMDualSolver::step() {
  const double gamma = cfg_.gamma;
  // s-update: normal equations of the quadratic penalty, A A* s = -A(q-u) - y/gamma
  CenteredField zf = q_;
  zf -= u_;
  std::vector<double> r = cons_.apply(zf);
  const std::vector<double>& y = cons_.target();
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += y[k] / gamma;
  std::vector<double> s = cons_.solve_normal(r);
  for (double& x : s) x = -x;
  // B s = -A* s
  CenteredField bs = cons_.apply_adjoint(s);
  bs *= -1.0;
  // q-update: prox of the conjugate cost at Bs + u, resolved through the cost prox
  CenteredField x = bs;
  x += u_;
  CenteredField mor = x;
  mor *= gamma;
  prox_J(mor, gamma, prob_.cost);
  q_ = x;
  axpy(q_, -1.0 / gamma, mor);
  // multiplier ascent
  u_ += bs;
  u_ -= q_;
  ++iters_;
}

int ADMMDualSolver::iterations() const { return iters_; }

CenteredField ADMMDualSolver::multiplier() const {
  CenteredField v = u_;
  v *= cfg_.gamma;
  return v;
}

}  // namespace ot
