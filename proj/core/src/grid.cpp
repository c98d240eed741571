#include "ot/grid.hpp"

#include <cmath>
#include <string>

namespace ot {

void GridDims::validate() const {
  if (d != 1 && d != 2)
    throw DimensionError("spatial dimension must be 1 or 2, got " + std::to_string(d));
  if (N < 2) throw DimensionError("N must be at least 2, got " + std::to_string(N));
  if (P < 2) throw DimensionError("P must be at least 2, got " + std::to_string(P));
  if (d == 2 && M < 2) throw DimensionError("M must be at least 2, got " + std::to_string(M));
}

namespace {

Array3 centered_shape(const GridDims& g) { return Array3(g.nx(), g.ny(), g.nt()); }

Array3 staggered_m_shape(const GridDims& g, int axis) {
  return axis == 0 ? Array3(g.nx() + 1, g.ny(), g.nt())
                   : Array3(g.nx(), g.ny() + 1, g.nt());
}

Array3 staggered_f_shape(const GridDims& g) { return Array3(g.nx(), g.ny(), g.nt() + 1); }

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

CenteredField CenteredField::zeros(const GridDims& g) {
  g.validate();
  CenteredField V;
  V.dims = g;
  V.m.resize(g.d);
  for (int a = 0; a < g.d; ++a) V.m[a] = centered_shape(g);
  V.f = centered_shape(g);
  return V;
}

void CenteredField::check_shape() const {
  dims.validate();
  require(static_cast<int>(m.size()) == dims.d, "centered field: wrong component count");
  const Array3 want = centered_shape(dims);
  for (const Array3& c : m) require(c.same_shape(want), "centered field: bad momentum shape");
  require(f.same_shape(want), "centered field: bad density shape");
}

CenteredField& CenteredField::operator+=(const CenteredField& o) {
  for (std::size_t a = 0; a < m.size(); ++a) m[a] += o.m[a];
  f += o.f;
  return *this;
}
CenteredField& CenteredField::operator-=(const CenteredField& o) {
  for (std::size_t a = 0; a < m.size(); ++a) m[a] -= o.m[a];
  f -= o.f;
  return *this;
}
CenteredField& CenteredField::operator*=(double a) {
  for (Array3& c : m) c *= a;
  f *= a;
  return *this;
}

void axpy(CenteredField& y, double a, const CenteredField& x) {
  for (std::size_t c = 0; c < y.m.size(); ++c) axpy(y.m[c], a, x.m[c]);
  axpy(y.f, a, x.f);
}
double dot(const CenteredField& a, const CenteredField& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.m.size(); ++c) s += dot(a.m[c], b.m[c]);
  return s + dot(a.f, b.f);
}
double norm2_sq(const CenteredField& a) { return dot(a, a); }

StaggeredField StaggeredField::zeros(const GridDims& g) {
  g.validate();
  StaggeredField U;
  U.dims = g;
  U.m.resize(g.d);
  for (int a = 0; a < g.d; ++a) U.m[a] = staggered_m_shape(g, a);
  U.f = staggered_f_shape(g);
  return U;
}

void StaggeredField::check_shape() const {
  dims.validate();
  require(static_cast<int>(m.size()) == dims.d, "staggered field: wrong component count");
  for (int a = 0; a < dims.d; ++a)
    require(m[a].same_shape(staggered_m_shape(dims, a)), "staggered field: bad momentum shape");
  require(f.same_shape(staggered_f_shape(dims)), "staggered field: bad density shape");
}

StaggeredField& StaggeredField::operator+=(const StaggeredField& o) {
  for (std::size_t a = 0; a < m.size(); ++a) m[a] += o.m[a];
  f += o.f;
  return *this;
}
StaggeredField& StaggeredField::operator-=(const StaggeredField& o) {
  for (std::size_t a = 0; a < m.size(); ++a) m[a] -= o.m[a];
  f -= o.f;
  return *this;
}
StaggeredField& StaggeredField::operator*=(double a) {
  for (Array3& c : m) c *= a;
  f *= a;
  return *this;
}

void axpy(StaggeredField& y, double a, const StaggeredField& x) {
  for (std::size_t c = 0; c < y.m.size(); ++c) axpy(y.m[c], a, x.m[c]);
  axpy(y.f, a, x.f);
}
double dot(const StaggeredField& a, const StaggeredField& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.m.size(); ++c) s += dot(a.m[c], b.m[c]);
  return s + dot(a.f, b.f);
}
double norm2_sq(const StaggeredField& a) { return dot(a, a); }

BoundaryValues BoundaryValues::zeros(const GridDims& g) {
  g.validate();
  BoundaryValues b;
  b.dims = g;
  b.mslab[0][0] = Array2(g.ny(), g.nt());
  b.mslab[0][1] = Array2(g.ny(), g.nt());
  if (g.d == 2) {
    b.mslab[1][0] = Array2(g.nx(), g.nt());
    b.mslab[1][1] = Array2(g.nx(), g.nt());
  }
  b.f0 = Array2(g.nx(), g.ny());
  b.f1 = Array2(g.nx(), g.ny());
  return b;
}

BoundaryValues extract_boundary(const StaggeredField& U) {
  U.check_shape();
  const GridDims& g = U.dims;
  BoundaryValues b = BoundaryValues::zeros(g);
  const int hi_x = g.nx();  // stored index of the high x wall in m[0]
  for (int t = 0; t < g.nt(); ++t)
    for (int j = 0; j < g.ny(); ++j) {
      b.mslab[0][0](j, t) = U.m[0](0, j, t);
      b.mslab[0][1](j, t) = U.m[0](hi_x, j, t);
    }
  if (g.d == 2) {
    const int hi_y = g.ny();
    for (int t = 0; t < g.nt(); ++t)
      for (int i = 0; i < g.nx(); ++i) {
        b.mslab[1][0](i, t) = U.m[1](i, 0, t);
        b.mslab[1][1](i, t) = U.m[1](i, hi_y, t);
      }
  }
  const int hi_t = g.nt();
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      b.f0(i, j) = U.f(i, j, 0);
      b.f1(i, j) = U.f(i, j, hi_t);
    }
  return b;
}

void write_boundary(StaggeredField& U, const BoundaryValues& b) {
  U.check_shape();
  if (!(b.dims == U.dims)) throw DimensionError("boundary values built for another grid");
  const GridDims& g = U.dims;
  const int hi_x = g.nx();
  for (int t = 0; t < g.nt(); ++t)
    for (int j = 0; j < g.ny(); ++j) {
      U.m[0](0, j, t) = b.mslab[0][0](j, t);
      U.m[0](hi_x, j, t) = b.mslab[0][1](j, t);
    }
  if (g.d == 2) {
    const int hi_y = g.ny();
    for (int t = 0; t < g.nt(); ++t)
      for (int i = 0; i < g.nx(); ++i) {
        U.m[1](i, 0, t) = b.mslab[1][0](i, t);
        U.m[1](i, hi_y, t) = b.mslab[1][1](i, t);
      }
  }
  const int hi_t = g.nt();
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      U.f(i, j, 0) = b.f0(i, j);
      U.f(i, j, hi_t) = b.f1(i, j);
    }
}

BoundaryValues assemble_boundary_target(const GridDims& g, const Array2& f0, const Array2& f1) {
  g.validate();
  if (f0.n0 != g.nx() || f0.n1 != g.ny() || f1.n0 != g.nx() || f1.n1 != g.ny())
    throw DimensionError("density shape does not match the grid");
  for (double x : f0.v)
    if (!(x >= 0.0)) throw ValidationError("initial density has a negative or NaN entry");
  for (double x : f1.v)
    if (!(x >= 0.0)) throw ValidationError("final density has a negative or NaN entry");
  BoundaryValues b = BoundaryValues::zeros(g);
  b.f0 = f0;
  b.f1 = f1;
  return b;
}

double boundary_distance(const BoundaryValues& a, const BoundaryValues& b) {
  double s = 0.0;
  auto acc2 = [&s](const Array2& x, const Array2& y) {
    for (std::size_t k = 0; k < x.v.size(); ++k) s = std::max(s, std::abs(x.v[k] - y.v[k]));
  };
  for (int axis = 0; axis < a.dims.d; ++axis)
    for (int side = 0; side < 2; ++side) acc2(a.mslab[axis][side], b.mslab[axis][side]);
  acc2(a.f0, b.f0);
  acc2(a.f1, b.f1);
  return s;
}

double total_mass(const Array2& g) {
  double s = 0.0;
  for (double x : g.v) s += x;
  return s;
}

namespace {

// One density: clamp to the floor and renormalize until both hold together.
bool normalize_one(Array2& f, double floor_value, double& mass_before) {
  mass_before = total_mass(f);
  bool any_positive = false;
  for (double x : f.v) {
    if (!(x == x)) throw ValidationError("density has a NaN entry");
    if (x > 0.0) any_positive = true;
  }
  if (!any_positive && floor_value <= 0.0)
    throw DegenerateInputError("density is identically zero");
  if (floor_value < 0.0) throw ValidationError("floor must be nonnegative");
  if (floor_value * static_cast<double>(f.size()) >= 1.0)
    throw ValidationError("floor too large: floored mass would exceed 1");

  auto satisfied = [&](const Array2& g) {
    double lo = g.v.empty() ? 0.0 : g.v[0];
    for (double x : g.v) lo = std::min(lo, x);
    return lo >= floor_value && std::abs(total_mass(g) - 1.0) <= 1e-12;
  };
  if (satisfied(f)) return false;

  for (int pass = 0; pass < 100; ++pass) {
    for (double& x : f.v) x = std::max(x, floor_value);
    const double mass = total_mass(f);
    if (mass <= 0.0) throw DegenerateInputError("density is identically zero");
    for (double& x : f.v) x /= mass;
    if (satisfied(f)) return true;
  }
  throw NumericalError("density normalization did not reach a fixed point");
}

}  // namespace

NormalizeReport validate_and_normalize(Array2& f0, Array2& f1, double floor_value) {
  if (!f0.same_shape(f1)) throw DimensionError("densities have different shapes");
  NormalizeReport r;
  const bool c0 = normalize_one(f0, floor_value, r.mass0_before);
  const bool c1 = normalize_one(f1, floor_value, r.mass1_before);
  r.changed = c0 || c1;
  return r;
}

std::vector<double> mass_per_slice(const Array3& stack) {
  std::vector<double> out(static_cast<std::size_t>(stack.n2), 0.0);
  const std::size_t slice = static_cast<std::size_t>(stack.n0) * stack.n1;
  for (int t = 0; t < stack.n2; ++t) {
    double s = 0.0;
    const double* p = stack.data() + slice * t;
    for (std::size_t k = 0; k < slice; ++k) s += p[k];
    out[t] = s;
  }
  return out;
}

}  // namespace ot
