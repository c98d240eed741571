#include "ot/testkit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace ot::testkit {
namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double unit_symmetric(std::uint64_t& s) {
  return 2.0 * (static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53) - 1.0;
}

std::size_t cidx(const GridDims& g, int i, int j, int t) {
  return (static_cast<std::size_t>(t) * g.nx() + i) * g.ny() + j;
}

// staggered block sizes and offsets in the flattened order (momentum, density)
struct StagLayout {
  std::size_t off[3] = {0, 0, 0};  // m0, m1, f
  std::size_t total = 0;
  int d = 1;

  explicit StagLayout(const GridDims& g) {
    d = g.d;
    const std::size_t m0 = static_cast<std::size_t>(g.nx() + 1) * g.ny() * g.nt();
    const std::size_t m1 =
        g.d == 2 ? static_cast<std::size_t>(g.nx()) * (g.ny() + 1) * g.nt() : 0;
    const std::size_t fs = static_cast<std::size_t>(g.nx()) * g.ny() * (g.nt() + 1);
    off[0] = 0;
    off[1] = m0;
    off[2] = m0 + m1;
    total = m0 + m1 + fs;
  }
  // storage index inside component arrays (n0, n1 are the component's shape)
  static std::size_t at(int n0, int n1, int i, int j, int t) {
    return (static_cast<std::size_t>(t) * n0 + i) * n1 + j;
  }
};

}  // namespace

std::vector<double> flatten(const StaggeredField& U) {
  std::vector<double> v;
  v.reserve(U.f.size() + U.m[0].size() + (U.m.size() > 1 ? U.m[1].size() : 0));
  for (const Array3& comp : U.m) v.insert(v.end(), comp.v.begin(), comp.v.end());
  v.insert(v.end(), U.f.v.begin(), U.f.v.end());
  return v;
}

std::vector<double> flatten(const CenteredField& V) {
  std::vector<double> v;
  for (const Array3& comp : V.m) v.insert(v.end(), comp.v.begin(), comp.v.end());
  v.insert(v.end(), V.f.v.begin(), V.f.v.end());
  return v;
}

void unflatten(const std::vector<double>& v, StaggeredField& U) {
  std::size_t at = 0;
  for (Array3& comp : U.m) {
    std::copy(v.begin() + at, v.begin() + at + comp.v.size(), comp.v.begin());
    at += comp.v.size();
  }
  std::copy(v.begin() + at, v.begin() + at + U.f.v.size(), U.f.v.begin());
}

void unflatten(const std::vector<double>& v, CenteredField& V) {
  std::size_t at = 0;
  for (Array3& comp : V.m) {
    std::copy(v.begin() + at, v.begin() + at + comp.v.size(), comp.v.begin());
    at += comp.v.size();
  }
  std::copy(v.begin() + at, v.begin() + at + V.f.v.size(), V.f.v.begin());
}

double golden_min(const std::function<double(double)>& phi, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int k = 0; k < 500 && b - a > tol; ++k) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = phi(d);
    }
  }
  return 0.5 * (a + b);
}

ProxOracleResult oracle_prox(const double* mt, int d, double ft, double gamma, double beta,
                             double weight) {
  ProxOracleResult res;
  double mn2 = 0.0;
  for (int c = 0; c < d; ++c) mn2 += mt[c] * mt[c];
  res.f = 0.0;
  res.value = 0.5 * (mn2 + ft * ft);  // the origin, always admissible
  if (std::isinf(weight)) return res;

  const double gw = gamma * weight;
  auto phi = [&](double f) {
    const double fb = std::pow(f, beta);
    const double shrink = fb / (fb + gw);  // optimal momentum factor at this density
    const double dm2 = (1.0 - shrink) * (1.0 - shrink) * mn2;
    const double jm = shrink * shrink * mn2 / (2.0 * fb);
    return 0.5 * (dm2 + (f - ft) * (f - ft)) + gw * jm;
  };

  const double hi = std::max(ft, 0.0) + gw + std::sqrt(mn2) + 1.0;
  const double lo = 1e-14;
  const int K = 600;
  const double step = std::log(hi / lo) / (K - 1);
  int best_k = 0;
  double best_phi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double f = lo * std::exp(step * k);
    const double p = phi(f);
    if (p < best_phi) {
      best_phi = p;
      best_k = k;
    }
  }
  const double bl = lo * std::exp(step * std::max(best_k - 1, 0));
  const double bh = lo * std::exp(step * std::min(best_k + 1, K - 1));
  const double fstar = golden_min(phi, bl, bh, 1e-12);
  const double vstar = phi(fstar);
  if (vstar < res.value) {
    res.value = vstar;
    res.f = fstar;
    const double fb = std::pow(fstar, beta);
    const double shrink = fb / (fb + gw);
    for (int c = 0; c < d; ++c) res.m[c] = shrink * mt[c];
  }
  return res;
}

DenseOp dense_interpolation(const GridDims& g) {
  g.validate();
  const StagLayout lay(g);
  const std::size_t S = g.centered_size();
  DenseOp op;
  op.rows = static_cast<std::size_t>(g.d + 1) * S;
  op.cols = lay.total;
  op.a.assign(op.rows * op.cols, 0.0);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const std::size_t ci = cidx(g, i, j, t);
        op.at(ci, lay.off[0] + StagLayout::at(nx + 1, ny, i, j, t)) = 0.5;
        op.at(ci, lay.off[0] + StagLayout::at(nx + 1, ny, i + 1, j, t)) = 0.5;
        if (g.d == 2) {
          op.at(S + ci, lay.off[1] + StagLayout::at(nx, ny + 1, i, j, t)) = 0.5;
          op.at(S + ci, lay.off[1] + StagLayout::at(nx, ny + 1, i, j + 1, t)) = 0.5;
        }
        const std::size_t fr = static_cast<std::size_t>(g.d) * S + ci;
        op.at(fr, lay.off[2] + StagLayout::at(nx, ny, i, j, t)) = 0.5;
        op.at(fr, lay.off[2] + StagLayout::at(nx, ny, i, j, t + 1)) = 0.5;
      }
  return op;
}

DenseOp dense_divergence(const GridDims& g) {
  g.validate();
  const StagLayout lay(g);
  DenseOp op;
  op.rows = g.centered_size();
  op.cols = lay.total;
  op.a.assign(op.rows * op.cols, 0.0);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const std::size_t r = cidx(g, i, j, t);
        op.at(r, lay.off[0] + StagLayout::at(nx + 1, ny, i + 1, j, t)) += g.scale(0);
        op.at(r, lay.off[0] + StagLayout::at(nx + 1, ny, i, j, t)) -= g.scale(0);
        if (g.d == 2) {
          op.at(r, lay.off[1] + StagLayout::at(nx, ny + 1, i, j + 1, t)) += g.scale(1);
          op.at(r, lay.off[1] + StagLayout::at(nx, ny + 1, i, j, t)) -= g.scale(1);
        }
        op.at(r, lay.off[2] + StagLayout::at(nx, ny, i, j, t + 1)) += g.scale(2);
        op.at(r, lay.off[2] + StagLayout::at(nx, ny, i, j, t)) -= g.scale(2);
      }
  return op;
}

double spectral_norm(const DenseOp& op) {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      m(op.a.data(), static_cast<Eigen::Index>(op.rows), static_cast<Eigen::Index>(op.cols));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

StaggeredField oracle_project(const StaggeredField& U, const BoundaryValues& b0) {
  U.check_shape();
  const GridDims g = U.dims;
  const StagLayout lay(g);
  if (lay.total > 5000) throw SizeError("oracle_project: too many unknowns for the dense oracle");
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  const std::size_t div_rows = g.centered_size();
  const std::size_t wall_rows =
      2 * (static_cast<std::size_t>(ny) * nt) + (g.d == 2 ? 2 * static_cast<std::size_t>(nx) * nt : 0);
  const std::size_t end_rows = 2 * static_cast<std::size_t>(nx) * ny;
  const std::size_t rows = div_rows + wall_rows + end_rows;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                            static_cast<Eigen::Index>(lay.total));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  std::size_t r = 0;
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j, ++r) {
        A(r, lay.off[0] + StagLayout::at(nx + 1, ny, i + 1, j, t)) += g.scale(0);
        A(r, lay.off[0] + StagLayout::at(nx + 1, ny, i, j, t)) -= g.scale(0);
        if (g.d == 2) {
          A(r, lay.off[1] + StagLayout::at(nx, ny + 1, i, j + 1, t)) += g.scale(1);
          A(r, lay.off[1] + StagLayout::at(nx, ny + 1, i, j, t)) -= g.scale(1);
        }
        A(r, lay.off[2] + StagLayout::at(nx, ny, i, j, t + 1)) += g.scale(2);
        A(r, lay.off[2] + StagLayout::at(nx, ny, i, j, t)) -= g.scale(2);
      }
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < ny; ++j)
      for (int t = 0; t < nt; ++t, ++r) {
        A(r, lay.off[0] + StagLayout::at(nx + 1, ny, side == 0 ? 0 : nx, j, t)) = 1.0;
        b(static_cast<Eigen::Index>(r)) = b0.mslab[0][static_cast<std::size_t>(side)](j, t);
      }
  if (g.d == 2)
    for (int side = 0; side < 2; ++side)
      for (int i = 0; i < nx; ++i)
        for (int t = 0; t < nt; ++t, ++r) {
          A(r, lay.off[1] + StagLayout::at(nx, ny + 1, i, side == 0 ? 0 : ny, t)) = 1.0;
          b(static_cast<Eigen::Index>(r)) = b0.mslab[1][static_cast<std::size_t>(side)](i, t);
        }
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      A(r, lay.off[2] + StagLayout::at(nx, ny, i, j, 0)) = 1.0;
      b(static_cast<Eigen::Index>(r)) = b0.f0(i, j);
      ++r;
      A(r, lay.off[2] + StagLayout::at(nx, ny, i, j, nt)) = 1.0;
      b(static_cast<Eigen::Index>(r)) = b0.f1(i, j);
      ++r;
    }

  const std::vector<double> x0 = flatten(U);
  const Eigen::Map<const Eigen::VectorXd> x(x0.data(), static_cast<Eigen::Index>(x0.size()));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd xp = x - cod.solve(A * x - b);
  StaggeredField out = StaggeredField::zeros(g);
  unflatten(std::vector<double>(xp.data(), xp.data() + xp.size()), out);
  return out;
}

std::pair<StaggeredField, CenteredField> oracle_couple(const StaggeredField& U,
                                                       const CenteredField& V) {
  U.check_shape();
  V.check_shape();
  const GridDims g = U.dims;
  const StagLayout lay(g);
  if (lay.total > 3000) throw SizeError("oracle_couple: too many unknowns for the dense oracle");
  const DenseOp iop = dense_interpolation(g);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      M(iop.a.data(), static_cast<Eigen::Index>(iop.rows), static_cast<Eigen::Index>(iop.cols));
  const std::vector<double> uf = flatten(U);
  const std::vector<double> vf = flatten(V);
  const Eigen::Map<const Eigen::VectorXd> u(uf.data(), static_cast<Eigen::Index>(uf.size()));
  const Eigen::Map<const Eigen::VectorXd> v(vf.data(), static_cast<Eigen::Index>(vf.size()));
  const Eigen::MatrixXd S =
      Eigen::MatrixXd::Identity(M.cols(), M.cols()) + M.transpose() * M;
  const Eigen::VectorXd rhs = u + M.transpose() * v;
  const Eigen::VectorXd uhat = Eigen::LLT<Eigen::MatrixXd>(S).solve(rhs);
  const Eigen::VectorXd vhat = M * uhat;
  StaggeredField uo = StaggeredField::zeros(g);
  CenteredField vo = CenteredField::zeros(g);
  unflatten(std::vector<double>(uhat.data(), uhat.data() + uhat.size()), uo);
  unflatten(std::vector<double>(vhat.data(), vhat.data() + vhat.size()), vo);
  return {std::move(uo), std::move(vo)};
}

void fill_random(StaggeredField& U, std::uint64_t seed) {
  std::uint64_t s = seed;
  for (Array3& comp : U.m)
    for (double& x : comp.v) x = unit_symmetric(s);
  for (double& x : U.f.v) x = unit_symmetric(s);
}

void fill_random(CenteredField& V, std::uint64_t seed) {
  std::uint64_t s = seed;
  for (Array3& comp : V.m)
    for (double& x : comp.v) x = unit_symmetric(s);
  for (double& x : V.f.v) x = unit_symmetric(s);
}

void fill_random(std::vector<double>& v, std::uint64_t seed) {
  std::uint64_t s = seed;
  for (double& x : v) x = unit_symmetric(s);
}

std::pair<Array2, Array2> gaussian_pair(const GridDims& g, double sigma, double cx0, double cy0,
                                        double cx1, double cy1) {
  g.validate();
  const int nx = g.nx(), ny = g.ny();
  Array2 f0(nx, ny), f1(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double x = static_cast<double>(i) / g.N;
      const double y = g.d == 2 ? static_cast<double>(j) / g.M : 0.0;
      const double r0 = (x - cx0) * (x - cx0) + (g.d == 2 ? (y - cy0) * (y - cy0) : 0.0);
      const double r1 = (x - cx1) * (x - cx1) + (g.d == 2 ? (y - cy1) * (y - cy1) : 0.0);
      f0(i, j) = std::exp(-r0 / (2.0 * sigma * sigma));
      f1(i, j) = std::exp(-r1 / (2.0 * sigma * sigma));
    }
  return {std::move(f0), std::move(f1)};
}

}  // namespace ot::testkit
