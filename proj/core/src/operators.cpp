#include "ot/operators.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace ot {

CenteredField interpolate(const StaggeredField& U) {
  U.check_shape();
  const GridDims& g = U.dims;
  CenteredField V = CenteredField::zeros(g);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        V.m[0](i, j, t) = 0.5 * (U.m[0](i, j, t) + U.m[0](i + 1, j, t));
  if (g.d == 2)
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
          V.m[1](i, j, t) = 0.5 * (U.m[1](i, j, t) + U.m[1](i, j + 1, t));
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j)
        V.f(i, j, t) = 0.5 * (U.f(i, j, t) + U.f(i, j, t + 1));
  return V;
}

StaggeredField interpolate_adjoint(const CenteredField& V) {
  V.check_shape();
  const GridDims& g = V.dims;
  StaggeredField U = StaggeredField::zeros(g);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int s = 0; s <= nx; ++s)
      for (int j = 0; j < ny; ++j) {
        double acc = 0.0;
        if (s > 0) acc += V.m[0](s - 1, j, t);
        if (s < nx) acc += V.m[0](s, j, t);
        U.m[0](s, j, t) = 0.5 * acc;
      }
  if (g.d == 2)
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < nx; ++i)
        for (int s = 0; s <= ny; ++s) {
          double acc = 0.0;
          if (s > 0) acc += V.m[1](i, s - 1, t);
          if (s < ny) acc += V.m[1](i, s, t);
          U.m[1](i, s, t) = 0.5 * acc;
        }
  for (int s = 0; s <= nt; ++s)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double acc = 0.0;
        if (s > 0) acc += V.f(i, j, s - 1);
        if (s < nt) acc += V.f(i, j, s);
        U.f(i, j, s) = 0.5 * acc;
      }
  return U;
}

Array3 divergence(const StaggeredField& U) {
  U.check_shape();
  const GridDims& g = U.dims;
  Array3 out(g.nx(), g.ny(), g.nt());
  const double sx = g.scale(0), sy = g.scale(1), st = g.scale(2);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double acc = sx * (U.m[0](i + 1, j, t) - U.m[0](i, j, t));
        if (g.d == 2) acc += sy * (U.m[1](i, j + 1, t) - U.m[1](i, j, t));
        acc += st * (U.f(i, j, t + 1) - U.f(i, j, t));
        out(i, j, t) = acc;
      }
  return out;
}

StaggeredField divergence_adjoint(const Array3& p) {
  // Shape of p decides the grid; the caller owns consistency with its fields.
  GridDims g;
  g.d = p.n1 > 1 ? 2 : 1;
  g.N = p.n0 - 1;
  g.M = p.n1 > 1 ? p.n1 - 1 : 0;
  g.P = p.n2 - 1;
  g.validate();
  StaggeredField U = StaggeredField::zeros(g);
  const double sx = g.scale(0), sy = g.scale(1), st = g.scale(2);
  const int nx = g.nx(), ny = g.ny(), nt = g.nt();
  for (int t = 0; t < nt; ++t)
    for (int s = 0; s <= nx; ++s)
      for (int j = 0; j < ny; ++j) {
        double acc = 0.0;
        if (s > 0) acc += p(s - 1, j, t);
        if (s < nx) acc -= p(s, j, t);
        U.m[0](s, j, t) = sx * acc;
      }
  if (g.d == 2)
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < nx; ++i)
        for (int s = 0; s <= ny; ++s) {
          double acc = 0.0;
          if (s > 0) acc += p(i, s - 1, t);
          if (s < ny) acc -= p(i, s, t);
          U.m[1](i, s, t) = sy * acc;
        }
  for (int s = 0; s <= nt; ++s)
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double acc = 0.0;
        if (s > 0) acc += p(i, j, s - 1);
        if (s < nt) acc -= p(i, j, s);
        U.f(i, j, s) = st * acc;
      }
  return U;
}

StaggeredField boundary_adjoint(const BoundaryValues& b) {
  StaggeredField U = StaggeredField::zeros(b.dims);
  write_boundary(U, b);
  return U;
}

namespace {

// splitmix64, fixed seed: reproducible start vectors for the power method.
struct DeterministicFill {
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  double next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
  }
};

}  // namespace

double power_iteration(std::size_t n,
                       const std::function<void(const double*, double*)>& apply,
                       double tol, int max_iter) {
  std::vector<double> x(n), y(n);
  DeterministicFill rng;
  for (double& xi : x) xi = rng.next();
  double lambda_prev = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    apply(x.data(), y.data());
    double xx = 0.0, xy = 0.0, yy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      xx += x[k] * x[k];
      xy += x[k] * y[k];
      yy += y[k] * y[k];
    }
    if (yy == 0.0) return 0.0;  // x already in the kernel: zero map in practice
    const double lambda = xy / xx;
    const double ynorm = std::sqrt(yy);
    for (std::size_t k = 0; k < n; ++k) x[k] = y[k] / ynorm;
    if (lambda_prev >= 0.0 && std::abs(lambda - lambda_prev) <= tol * std::max(lambda, 1e-300))
      return std::sqrt(std::max(lambda, 0.0));
    lambda_prev = lambda;
  }
  throw ConvergenceError("operator norm estimate did not settle",
                         std::sqrt(std::max(lambda_prev, 0.0)));
}

namespace {

std::size_t staggered_total(const GridDims& g) {
  std::size_t n = static_cast<std::size_t>(g.nx() + 1) * g.ny() * g.nt();
  if (g.d == 2) n += static_cast<std::size_t>(g.nx()) * (g.ny() + 1) * g.nt();
  n += static_cast<std::size_t>(g.nx()) * g.ny() * (g.nt() + 1);
  return n;
}

void stag_from_flat(StaggeredField& U, const double* x) {
  std::size_t k = 0;
  for (Array3& c : U.m)
    for (double& v : c.v) v = x[k++];
  for (double& v : U.f.v) v = x[k++];
}

void stag_to_flat(const StaggeredField& U, double* x) {
  std::size_t k = 0;
  for (const Array3& c : U.m)
    for (double v : c.v) x[k++] = v;
  for (double v : U.f.v) x[k++] = v;
}

}  // namespace

double estimate_op_norm(const GridDims& g, OpTag op, double tol, int max_iter) {
  g.validate();
  const std::size_t n = staggered_total(g);
  StaggeredField scratch = StaggeredField::zeros(g);
  auto apply = [&](const double* in, double* out) {
    stag_from_flat(scratch, in);
    StaggeredField normal = StaggeredField::zeros(g);
    switch (op) {
      case OpTag::interpolation:
        normal = interpolate_adjoint(interpolate(scratch));
        break;
      case OpTag::divergence:
        normal = divergence_adjoint(divergence(scratch));
        break;
      case OpTag::constraint: {
        normal = divergence_adjoint(divergence(scratch));
        normal += boundary_adjoint(extract_boundary(scratch));
        break;
      }
    }
    stag_to_flat(normal, out);
  };
  return power_iteration(n, apply, tol, max_iter);
}

}  // namespace ot
