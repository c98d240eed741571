#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ot/operators.hpp"
#include "ot/prox.hpp"

namespace ot {

namespace {

// LDL^T factorization of the symmetric tridiagonal Id + I*I along one axis:
// diagonal 1.5 (1.25 at both ends), off-diagonal 0.25 everywhere.
struct TriFactor {
  std::vector<double> d;  // pivots
  std::vector<double> l;  // subdiagonal multipliers, l[0] unused

  void build(int n) {
    d.assign(n, 0.0);
    l.assign(n, 0.0);
    auto diag = [n](int i) { return (i == 0 || i == n - 1) ? 1.25 : 1.5; };
    d[0] = diag(0);
    for (int i = 1; i < n; ++i) {
      l[i] = 0.25 / d[i - 1];
      d[i] = diag(i) - 0.25 * l[i];
    }
  }

  void solve(double* x, int n) const {
    for (int i = 1; i < n; ++i) x[i] -= l[i] * x[i - 1];
    x[n - 1] /= d[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = x[i] / d[i] - l[i + 1] * x[i + 1];
  }
};

void solve_lines(Array3& A, int axis, const TriFactor& T, std::vector<double>& line) {
  const int n0 = A.n0, n1 = A.n1, n2 = A.n2;
  auto run = [&](std::size_t base, std::size_t stride, int len) {
    for (int k = 0; k < len; ++k) line[k] = A.v[base + stride * k];
    T.solve(line.data(), len);
    for (int k = 0; k < len; ++k) A.v[base + stride * k] = line[k];
  };
  if (axis == 0) {
    for (int t = 0; t < n2; ++t)
      for (int j = 0; j < n1; ++j)
        run(static_cast<std::size_t>(t) * n0 * n1 + j, n1, n0);
  } else if (axis == 1) {
    for (int t = 0; t < n2; ++t)
      for (int i = 0; i < n0; ++i)
        run((static_cast<std::size_t>(t) * n0 + i) * n1, 1, n1);
  } else {
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j)
        run(static_cast<std::size_t>(i) * n1 + j, static_cast<std::size_t>(n0) * n1, n2);
  }
}

}  // namespace

struct ProxScratch::Impl {
  GridDims g;
  PoissonBackend backend;

  // Spectral path: in-place separable cosine transforms over the centered grid.
  std::vector<double> buf;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  double dct_norm = 1.0;
  std::vector<double> lamx, lamy, lamt;

  // Fallback path.
  BoundaryValues zero_bnd;
  Array3 diag;

  TriFactor tri_x, tri_y, tri_t;
  std::vector<double> line;

  explicit Impl(const GridDims& dims, PoissonBackend be) : g(dims), backend(be) {
    g.validate();
    const int nx = g.nx(), ny = g.ny(), nt = g.nt();

    tri_x.build(nx + 1);
    if (g.d == 2) tri_y.build(ny + 1);
    tri_t.build(nt + 1);
    line.resize(static_cast<std::size_t>(std::max({nx, ny, nt}) + 1));

    auto eigen_table = [](int n, double scale) {
      std::vector<double> lam(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        const double s = std::sin(0.5 * M_PI * k / n);
        lam[k] = 4.0 * scale * scale * s * s;
      }
      return lam;
    };
    lamx = eigen_table(nx, g.scale(0));
    lamy = g.d == 2 ? eigen_table(ny, g.scale(1)) : std::vector<double>(1, 0.0);
    lamt = eigen_table(nt, g.scale(2));

    buf.resize(static_cast<std::size_t>(nx) * ny * nt);
    // Memory order is (t, x, y), y fastest; axes of size one are dropped.
    int n[3];
    fftw_r2r_kind kf[3], kb[3];
    int rank = 0;
    dct_norm = 1.0;
    for (int len : {nt, nx, ny}) {
      if (len <= 1) continue;
      n[rank] = len;
      kf[rank] = FFTW_REDFT10;
      kb[rank] = FFTW_REDFT01;
      dct_norm *= 2.0 * len;
      ++rank;
    }
    fwd = fftw_plan_r2r(rank, n, buf.data(), buf.data(), kf, FFTW_ESTIMATE);
    bwd = fftw_plan_r2r(rank, n, buf.data(), buf.data(), kb, FFTW_ESTIMATE);
    if (!fwd || !bwd) throw NumericalError("failed to create cosine-transform plans");

    zero_bnd = BoundaryValues::zeros(g);
    diag = Array3(nx, ny, nt);
    const double sx2 = g.scale(0) * g.scale(0);
    const double sy2 = g.scale(1) * g.scale(1);
    const double st2 = g.scale(2) * g.scale(2);
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
          double v = sx2 * ((i >= 1 ? 1 : 0) + (i <= nx - 2 ? 1 : 0));
          if (g.d == 2) v += sy2 * ((j >= 1 ? 1 : 0) + (j <= ny - 2 ? 1 : 0));
          v += st2 * ((t >= 1 ? 1 : 0) + (t <= nt - 2 ? 1 : 0));
          diag(i, j, t) = v;
        }
  }

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }

  void solve_dct(const Array3& r, Array3& p) {
    const int nx = g.nx(), ny = g.ny(), nt = g.nt();
    std::memcpy(buf.data(), r.data(), sizeof(double) * buf.size());
    fftw_execute(fwd);
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
          const std::size_t k = (static_cast<std::size_t>(t) * nx + i) * ny + j;
          const double lam = lamx[i] + lamy[j] + lamt[t];
          buf[k] = lam > 0.0 ? buf[k] / lam : 0.0;  // mean mode removed
        }
    fftw_execute(bwd);
    const double scale = 1.0 / dct_norm;
    p = Array3(nx, ny, nt);
    for (std::size_t k = 0; k < buf.size(); ++k) p.v[k] = buf[k] * scale;
  }

  // Normal operator of the interior divergence: embeds p through the adjoint,
  // zeroes the pinned slabs, takes the divergence again.
  Array3 apply_normal(const Array3& p) {
    StaggeredField U = divergence_adjoint(p);
    write_boundary(U, zero_bnd);
    return divergence(U);
  }

  void solve_cg(const Array3& rhs, Array3& x) {
    const std::size_t n = rhs.size();
    x = Array3(rhs.n0, rhs.n1, rhs.n2);
    Array3 r = rhs;
    double mean = 0.0;
    for (double v : r.v) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : r.v) v -= mean;  // keep the right-hand side in range(L)

    const double target = 1e-12 * std::sqrt(norm2_sq(r));
    if (target == 0.0) return;
    Array3 z = r;
    for (std::size_t k = 0; k < n; ++k) z.v[k] /= diag.v[k];
    Array3 pdir = z;
    double rz = dot(r, z);
    const int maxit = 50 * (g.nx() + g.ny() + g.nt());
    for (int it = 0; it < maxit; ++it) {
      Array3 Ap = apply_normal(pdir);
      const double alpha = rz / dot(pdir, Ap);
      axpy(x, alpha, pdir);
      axpy(r, -alpha, Ap);
      if (std::sqrt(norm2_sq(r)) <= target) {
        double xm = 0.0;
        for (double v : x.v) xm += v;
        xm /= static_cast<double>(n);
        for (double& v : x.v) v -= xm;
        return;
      }
      z = r;
      for (std::size_t k = 0; k < n; ++k) z.v[k] /= diag.v[k];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t k = 0; k < n; ++k) pdir.v[k] = z.v[k] + beta * pdir.v[k];
    }
    throw NumericalError("conjugate gradient stalled in the constraint projection");
  }
};

ProxScratch::ProxScratch(const GridDims& g, PoissonBackend backend)
    : impl_(std::make_unique<Impl>(g, backend)) {}
ProxScratch::~ProxScratch() = default;
ProxScratch::ProxScratch(ProxScratch&&) noexcept = default;
ProxScratch& ProxScratch::operator=(ProxScratch&&) noexcept = default;

const GridDims& ProxScratch::dims() const { return impl_->g; }
PoissonBackend ProxScratch::backend() const { return impl_->backend; }

void ProxScratch::poisson_solve(const Array3& r, Array3& p) {
  if (r.n0 != impl_->g.nx() || r.n1 != impl_->g.ny() || r.n2 != impl_->g.nt())
    throw DimensionError("poisson right-hand side does not match the workspace grid");
  if (impl_->backend == PoissonBackend::dct)
    impl_->solve_dct(r, p);
  else
    impl_->solve_cg(r, p);
}

void ProxScratch::coupling_solve(StaggeredField& rhs) {
  rhs.check_shape();
  if (!(rhs.dims == impl_->g)) throw DimensionError("field does not match the workspace grid");
  solve_lines(rhs.m[0], 0, impl_->tri_x, impl_->line);
  if (impl_->g.d == 2) solve_lines(rhs.m[1], 1, impl_->tri_y, impl_->line);
  solve_lines(rhs.f, 2, impl_->tri_t, impl_->line);
}

void project_coupling(const StaggeredField& U, const CenteredField& V, ProxScratch& scratch,
                      StaggeredField& U_out, CenteredField& V_out) {
  U.check_shape();
  V.check_shape();
  if (!(U.dims == scratch.dims()) || !(V.dims == scratch.dims()))
    throw DimensionError("fields do not match the workspace grid");
  U_out = interpolate_adjoint(V);
  U_out += U;
  scratch.coupling_solve(U_out);
  V_out = interpolate(U_out);
}

void project_constraints(StaggeredField& U, const BoundaryValues& b0, ProxScratch& scratch) {
  U.check_shape();
  if (!(U.dims == scratch.dims()) || !(b0.dims == U.dims))
    throw DimensionError("field does not match the workspace grid");
  const double mass0 = total_mass(b0.f0);
  const double mass1 = total_mass(b0.f1);
  if (std::abs(mass0 - mass1) > 1e-12 * std::max(1.0, std::abs(mass0)))
    throw FeasibilityError("boundary densities carry different total mass");

  write_boundary(U, b0);
  const Array3 r = divergence(U);
  Array3 p;
  scratch.poisson_solve(r, p);
  StaggeredField corr = divergence_adjoint(p);
  write_boundary(corr, BoundaryValues::zeros(U.dims));  // correction lives on the interior
  axpy(U, -1.0, corr);
}

}  // namespace ot
