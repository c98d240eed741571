#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ot {

/// Dense 2-D array, row-major: (i, j) -> v[i * n1 + j].
struct Array2 {
  int n0 = 0;
  int n1 = 0;
  std::vector<double> v;

  Array2() = default;
  Array2(int rows, int cols, double fill = 0.0)
      : n0(rows), n1(cols), v(static_cast<std::size_t>(rows) * cols, fill) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * n1 + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * n1 + j]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Array2& o) const { return n0 == o.n0 && n1 == o.n1; }
};

/// Dense 3-D array over (x, y, t). Time slices are contiguous:
/// (i, j, t) -> v[(t * n0 + i) * n1 + j]. 1-D space uses n1 == 1.
struct Array3 {
  int n0 = 0;  // x samples
  int n1 = 0;  // y samples
  int n2 = 0;  // t samples
  std::vector<double> v;

  Array3() = default;
  Array3(int nx, int ny, int nt, double fill = 0.0)
      : n0(nx), n1(ny), n2(nt),
        v(static_cast<std::size_t>(nx) * ny * nt, fill) {}

  double& operator()(int i, int j, int t) {
    return v[(static_cast<std::size_t>(t) * n0 + i) * n1 + j];
  }
  double operator()(int i, int j, int t) const {
    return v[(static_cast<std::size_t>(t) * n0 + i) * n1 + j];
  }
  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  bool same_shape(const Array3& o) const { return n0 == o.n0 && n1 == o.n1 && n2 == o.n2; }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  Array3& operator+=(const Array3& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
    return *this;
  }
  Array3& operator-=(const Array3& o) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
    return *this;
  }
  Array3& operator*=(double a) {
    for (double& x : v) x *= a;
    return *this;
  }
};

inline void axpy(Array3& y, double a, const Array3& x) {
  for (std::size_t k = 0; k < y.v.size(); ++k) y.v[k] += a * x.v[k];
}

inline double dot(const Array3& a, const Array3& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
  return s;
}

inline double norm2_sq(const Array3& a) { return dot(a, a); }

inline double linf(const Array3& a) {
  double s = 0.0;
  for (double x : a.v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace ot
