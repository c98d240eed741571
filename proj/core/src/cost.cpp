#include "ot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenalty = 1e15;
constexpr double kMomentumTol = 1e-12;

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double momentum_norm_sq(const CenteredField& V, std::size_t k) {
  double s = 0.0;
  for (const Array3& comp : V.m) s += comp.v[k] * comp.v[k];
  return s;
}

}  // namespace

double energy(const CenteredField& V, const CostModel& cost) {
  V.check_shape();
  cost.validate(V.dims);
  const bool unit_beta = cost.beta == 1.0;
  const std::size_t n = V.f.v.size();
  KahanSum acc;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = V.f.v[k];
    const double mn2 = momentum_norm_sq(V, k);
    if (!cost.infinite.empty() && cost.infinite[k]) {
      if (f == 0.0 && mn2 == 0.0) continue;
      return kInf;
    }
    if (f < 0.0) return kInf;
    if (f == 0.0) {
      if (mn2 == 0.0) continue;
      return kInf;
    }
    if (mn2 == 0.0) continue;  // exact zero either way; keeps beta=0 bitwise too
    const double denom = unit_beta ? f : std::pow(f, cost.beta);
    acc.add(cost.weight.v[k] * mn2 / (2.0 * denom));
  }
  return acc.sum;
}

double capped_energy(const CenteredField& V, const CostModel& cost, long& infeasible_cells,
                     double* finite_part) {
  V.check_shape();
  cost.validate(V.dims);
  const bool unit_beta = cost.beta == 1.0;
  const std::size_t n = V.f.v.size();
  KahanSum acc;
  long bad = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = V.f.v[k];
    const double mn2 = momentum_norm_sq(V, k);
    const double mn = std::sqrt(mn2);
    if (!cost.infinite.empty() && cost.infinite[k]) {
      if (mn > kMomentumTol) ++bad;  // flow through a wall; parked mass is telemetry-silent
      continue;
    }
    if (f <= 0.0) {
      if (mn > kMomentumTol) ++bad;
      continue;
    }
    if (mn2 == 0.0) continue;
    const double denom = unit_beta ? f : std::pow(f, cost.beta);
    acc.add(cost.weight.v[k] * mn2 / (2.0 * denom));
  }
  infeasible_cells = bad;
  if (finite_part) *finite_part = acc.sum;
  return acc.sum + kPenalty * static_cast<double>(bad);
}

std::vector<Array3> velocity_field(const CenteredField& V, double eps) {
  V.check_shape();
  std::vector<Array3> vel;
  vel.reserve(V.m.size());
  for (const Array3& comp : V.m) {
    Array3 out = comp;
    for (std::size_t k = 0; k < out.v.size(); ++k)
      out.v[k] = V.f.v[k] > eps ? comp.v[k] / V.f.v[k] : 0.0;
    vel.push_back(std::move(out));
  }
  return vel;
}

namespace {

constexpr double kFar = 1e300;  // stands in for +inf inside the envelope recursion

// One squared-distance pass along a strided line with sample spacing h.
// f holds current squared distances; d receives min_j ((q_i-q_j)^2 h^2 + f_j).
void envelope_1d(const double* f, double* d, int n, double h, std::vector<int>& v,
                 std::vector<double>& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  const double h2 = h * h;
  const auto cut = [&](int q, int p) {
    return ((f[q] + h2 * q * q) - (f[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
  };
  for (int q = 1; q < n; ++q) {
    // Pop parabolas the new one dominates; k >= 0 stays invariant even when the
    // intersection lands outside any finite sentinel (large seed / tiny spacing).
    double s = cut(q, v[static_cast<std::size_t>(k)]);
    while (k > 0 && s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = cut(q, v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < static_cast<double>(q)) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    d[q] = h2 * (q - p) * (q - p) + f[p];
  }
}

Array2 distance_brute(const std::vector<std::uint8_t>& mask, int nx, int ny, double hx,
                      double hy) {
  Array2 out(nx, ny);
  std::vector<std::pair<int, int>> sites;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (mask[static_cast<std::size_t>(i) * ny + j]) sites.emplace_back(i, j);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double best = kFar;
      for (const auto& [si, sj] : sites) {
        const double dx = (i - si) * hx;
        const double dy = (j - sj) * hy;
        best = std::min(best, dx * dx + dy * dy);
      }
      out(i, j) = best >= kFar ? kFar : std::sqrt(best);
    }
  return out;
}

Array2 distance_envelope(const std::vector<std::uint8_t>& mask, int nx, int ny, double hx,
                         double hy) {
  Array2 sq(nx, ny);
  for (std::size_t k = 0; k < sq.v.size(); ++k) sq.v[k] = mask[k] ? 0.0 : kFar;
  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> line(static_cast<std::size_t>(std::max(nx, ny)));
  std::vector<double> dist(line.size());
  if (ny > 1) {
    for (int i = 0; i < nx; ++i) {
      envelope_1d(&sq(i, 0), dist.data(), ny, hy, v, z);
      std::copy(dist.begin(), dist.begin() + ny, &sq(i, 0));
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) line[static_cast<std::size_t>(i)] = sq(i, j);
    envelope_1d(line.data(), dist.data(), nx, hx, v, z);
    for (int i = 0; i < nx; ++i) sq(i, j) = dist[static_cast<std::size_t>(i)];
  }
  for (double& x : sq.v) x = x >= kFar ? kFar : std::sqrt(x);
  return sq;
}

}  // namespace

Array2 distance_field(const std::vector<std::uint8_t>& mask, int nx, int ny, double hx,
                      double hy, std::size_t brute_force_limit) {
  if (nx < 1 || ny < 1) throw DimensionError("distance_field: empty grid");
  if (mask.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw DimensionError("distance_field: mask size does not match grid");
  if (!(hx > 0.0) || !(hy > 0.0)) throw ValidationError("distance_field: spacings must be positive");
  const std::size_t cells = mask.size();
  return cells <= brute_force_limit ? distance_brute(mask, nx, ny, hx, hy)
                                    : distance_envelope(mask, nx, ny, hx, hy);
}

namespace {

CostModel weights_from_mask(const GridDims& g, const std::vector<std::uint8_t>& mask,
                            WeightMode mode, double beta, double min_weight) {
  g.validate();
  if (mask.size() != g.centered_size())
    throw DimensionError("build_weights: mask size does not match centered grid");
  CostModel cost = CostModel::uniform(g, beta);
  cost.min_weight = min_weight;
  if (mode == WeightMode::uniform) {
    cost.validate(g);
    return cost;
  }
  cost.infinite.assign(mask.begin(), mask.end());
  const int nx = g.nx();
  const int ny = g.ny();
  const int nt = g.nt();
  const std::size_t slice = static_cast<std::size_t>(nx) * ny;
  std::vector<std::uint8_t> spatial(slice);
  for (int t = 0; t < nt; ++t) {
    const std::uint8_t* src = mask.data() + static_cast<std::size_t>(t) * slice;
    std::size_t blocked = 0;
    for (std::size_t k = 0; k < slice; ++k) blocked += src[k] ? 1 : 0;
    if (blocked == slice)
      throw DegenerateInputError("build_weights: a time slice is fully impassable");
    if (mode == WeightMode::distance && blocked > 0) {
      std::copy(src, src + slice, spatial.begin());
      const Array2 dist =
          distance_field(spatial, nx, ny, 1.0 / g.scale(0), ny > 1 ? 1.0 / g.scale(1) : 1.0);
      double* w = cost.weight.v.data() + static_cast<std::size_t>(t) * slice;
      for (std::size_t k = 0; k < slice; ++k)
        if (!src[k]) w[k] = 1.0 + dist.v[k];
    }
  }
  cost.validate(g);
  return cost;
}

}  // namespace

CostModel build_weights(const GridDims& g, const std::vector<std::uint8_t>& mask,
                        WeightMode mode, double beta, double min_weight) {
  return weights_from_mask(g, mask, mode, beta, min_weight);
}

CostModel build_weights_static(const GridDims& g, const std::vector<std::uint8_t>& spatial_mask,
                               WeightMode mode, double beta, double min_weight) {
  g.validate();
  const std::size_t slice = static_cast<std::size_t>(g.nx()) * g.ny();
  if (spatial_mask.size() != slice)
    throw DimensionError("build_weights_static: mask size does not match spatial grid");
  std::vector<std::uint8_t> full(g.centered_size());
  for (int t = 0; t < g.nt(); ++t)
    std::copy(spatial_mask.begin(), spatial_mask.end(), full.begin() + static_cast<std::size_t>(t) * slice);
  return weights_from_mask(g, full, mode, beta, min_weight);
}

}  // namespace ot
