#pragma once

#include <cstdint>
#include <utility>

#include "ot/io.hpp"
#include "ot/solvers.hpp"
#include "ot/testkit.hpp"

namespace ot::test {

// splitmix64; independent stream per seed, stable across platforms
inline std::uint64_t next_u64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double uniform(std::uint64_t& s, double lo, double hi) {
  const double u = static_cast<double>(next_u64(s) >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// normalized two-blob transport problem; the workhorse instance of the suite
inline Problem gaussian_problem(const GridDims& g, double sigma = 0.2, double beta = 1.0) {
  auto [f0, f1] = testkit::gaussian_pair(g, sigma, 0.25, 0.25, 0.75, 0.75);
  validate_and_normalize(f0, f1, 1e-10);
  return Problem::uniform(g, f0, f1, beta);
}

// transport-style boundary data (zero momentum slabs) with random positive
// endpoint densities of equal mass
inline BoundaryValues random_boundary(const GridDims& g, std::uint64_t seed) {
  Array2 f0(g.nx(), g.ny());
  Array2 f1(g.nx(), g.ny());
  for (auto& x : f0.v) x = 0.1 + uniform(seed, 0.0, 1.0);
  for (auto& x : f1.v) x = 0.1 + uniform(seed, 0.0, 1.0);
  const double scale = total_mass(f0) / total_mass(f1);
  for (auto& x : f1.v) x *= scale;
  return assemble_boundary_target(g, f0, f1);
}

inline double rel_diff(const StaggeredField& a, const StaggeredField& b) {
  StaggeredField d = a;
  d -= b;
  return std::sqrt(norm2_sq(d)) / std::max(std::sqrt(norm2_sq(b)), 1e-300);
}

inline double rel_diff(const CenteredField& a, const CenteredField& b) {
  CenteredField d = a;
  d -= b;
  return std::sqrt(norm2_sq(d)) / std::max(std::sqrt(norm2_sq(b)), 1e-300);
}

inline double linf_diff(const Array3& a, const Array3& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace ot::test
