#include "ot/prox.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ot {

CostModel CostModel::uniform(const GridDims& g, double beta) {
  g.validate();
  CostModel c;
  c.beta = beta;
  c.weight = Array3(g.nx(), g.ny(), g.nt(), 1.0);
  c.infinite.assign(c.weight.size(), 0);
  return c;
}

void CostModel::validate(const GridDims& g) const {
  g.validate();
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ValidationError("cost exponent must lie in [0, 1], got " + std::to_string(beta));
  if (!(min_weight > 0.0)) throw ValidationError("weight lower bound must be positive");
  Array3 want(g.nx(), g.ny(), g.nt());
  if (!weight.same_shape(want)) throw DimensionError("weight grid does not match the grid");
  if (infinite.size() != weight.size())
    throw DimensionError("infinite-cell mask does not match the weight grid");
  for (std::size_t k = 0; k < weight.v.size(); ++k) {
    if (infinite[k]) continue;
    const double w = weight.v[k];
    if (!(w > min_weight) || !std::isfinite(w))
      throw ValidationError("finite weights must exceed the lower bound " +
                            std::to_string(min_weight));
  }
}

bool CostModel::any_infinite() const {
  for (std::uint8_t b : infinite)
    if (b) return true;
  return false;
}

namespace {

inline double sum_sq(const double* x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return s;
}

}  // namespace

double prox_j(const double* mt, int d, double ft, double gamma, double* m_out) {
  const double mn2 = sum_sq(mt, d);
  // The cubic (X - ft)(X + gamma)^2 - (gamma/2)|mt|^2 has a positive root
  // exactly when its value at 0 is negative.
  if (gamma * gamma * ft + 0.5 * gamma * mn2 <= 0.0) {
    for (int k = 0; k < d; ++k) m_out[k] = 0.0;
    return 0.0;
  }
  const double k0 = 0.5 * gamma * mn2;
  double lo = 0.0;
  double hi = std::max(ft, 0.0) + gamma + std::sqrt(mn2);  // upper root bound
  double X = hi;
  for (int it = 0; it < 60; ++it) {
    const double e = X + gamma;
    const double val = (X - ft) * e * e - k0;
    if (val >= 0.0)
      hi = X;
    else
      lo = X;
    const double dval = e * (3.0 * X + gamma - 2.0 * ft);
    double Xn = X - val / dval;
    if (!(Xn > lo && Xn < hi)) Xn = 0.5 * (lo + hi);
    const double step = std::abs(Xn - X);
    X = Xn;
    if (step <= 1e-16 * std::max(1.0, X) || hi - lo <= 1e-16 * std::max(1.0, hi)) break;
  }
  const double scale = X / (X + gamma);
  for (int k = 0; k < d; ++k) m_out[k] = scale * mt[k];
  return X;
}

double prox_j_beta(const double* mt, int d, double ft, double gamma, double beta,
                   double weight, double* m_out) {
  if (std::isinf(weight)) {
    for (int k = 0; k < d; ++k) m_out[k] = 0.0;
    return 0.0;
  }
  const double geff = gamma * weight;
  if (beta == 1.0) return prox_j(mt, d, ft, geff, m_out);
  if (beta == 0.0) {
    // Quadratic in m, positive-part clamp in f.
    const double shrink = 1.0 / (1.0 + geff);
    for (int k = 0; k < d; ++k) m_out[k] = shrink * mt[k];
    return std::max(ft, 0.0);
  }
  const double mn2 = sum_sq(mt, d);
  if (mn2 == 0.0) {
    for (int k = 0; k < d; ++k) m_out[k] = 0.0;
    return ft > 0.0 ? ft : 0.0;
  }
  // P(X) = X^{1-beta} (X - ft) (X^beta + geff)^2 - (geff beta / 2)|mt|^2,
  // strictly negative at 0+ here, positive at the bracket top.
  const double k0 = 0.5 * geff * beta * mn2;
  double lo = 0.0;
  double hi = std::max(ft, 0.0) + geff + std::sqrt(mn2) + 1.0;
  double X = hi;
  for (int it = 0; it < 60; ++it) {
    const double xb = std::pow(X, beta);
    const double x1b = std::pow(X, 1.0 - beta);
    const double e = xb + geff;
    const double val = x1b * (X - ft) * e * e - k0;
    if (val >= 0.0)
      hi = X;
    else
      lo = X;
    const double dval = (1.0 - beta) * (x1b / X) * (X - ft) * e * e + x1b * e * e +
                        2.0 * beta * (X - ft) * e;
    double Xn = (dval > 0.0) ? X - val / dval : 0.5 * (lo + hi);
    if (!(Xn > lo && Xn < hi)) Xn = 0.5 * (lo + hi);
    const double step = std::abs(Xn - X);
    X = Xn;
    if (step <= 1e-16 * std::max(1.0, X) || hi - lo <= 1e-16 * std::max(1.0, hi)) break;
  }
  const double xb = std::pow(X, beta);
  const double scale = xb / (xb + geff);
  for (int k = 0; k < d; ++k) m_out[k] = scale * mt[k];
  return X;
}

void project_paraboloid(const double* a, int d, double b, double gamma,
                        double* a_out, double* b_out) {
  // Moreau: prox_{gamma j}(v) = v - gamma proj(v / gamma), rearranged.
  double mt[3] = {0.0, 0.0, 0.0};
  double mp[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < d; ++k) mt[k] = gamma * a[k];
  const double fp = prox_j(mt, d, gamma * b, gamma, mp);
  for (int k = 0; k < d; ++k) a_out[k] = a[k] - mp[k] / gamma;
  *b_out = b - fp / gamma;
}

void prox_J(CenteredField& V, double gamma, const CostModel& cost) {
  V.check_shape();
  if (!cost.weight.same_shape(V.f) || cost.infinite.size() != V.f.size())
    throw DimensionError("cost model does not match the field");
  const int d = V.dims.d;
  const std::size_t n = V.f.size();
  const double inf = std::numeric_limits<double>::infinity();
  double mt[2], mo[2];
  for (std::size_t k = 0; k < n; ++k) {
    mt[0] = V.m[0].v[k];
    if (d == 2) mt[1] = V.m[1].v[k];
    const double w = cost.infinite[k] ? inf : cost.weight.v[k];
    V.f.v[k] = prox_j_beta(mt, d, V.f.v[k], gamma, cost.beta, w, mo);
    V.m[0].v[k] = mo[0];
    if (d == 2) V.m[1].v[k] = mo[1];
  }
}

}  // namespace ot
