#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ot/prox.hpp"
#include "ot/testkit.hpp"

using namespace ot;
namespace tk = ot::testkit;

namespace {

struct FrozenCase {
  double mt0, mt1, ft, gamma, beta, w;
  double m0, m1, f;  // expected prox output
};

// Reference solutions computed with 60-digit arithmetic by an external
// root-on-bracket solver, rounded to shortest round-trip doubles.
constexpr FrozenCase kFrozen[] = {
    {0.69999999999999996, -0.29999999999999999, 0.50000000000000000, 0.013333333333333334, 1.0000000000000000, 1.0000000000000000, 0.68229785087172822, -0.29241336465931210, 0.51390961698320547},
    {1.2000000000000000, 0.0, -0.20000000000000001, 0.10000000000000001, 1.0000000000000000, 1.0000000000000000, 0.88848357091053275, 0.0, 0.28521242796326521},
    {-0.40000000000000002, 0.90000000000000002, 1.7000000000000000, 1.0000000000000000, 1.0000000000000000, 1.0000000000000000, -0.25525637525959011, 0.57432684433407773, 1.7635068606121963},
    {0.0, 0.0, -0.80000000000000004, 0.25000000000000000, 1.0000000000000000, 1.0000000000000000, 0.0, 0.0, 0.0},
    {2.5000000000000000, -1.1000000000000001, 0.010000000000000000, 0.50000000000000000, 1.0000000000000000, 1.0000000000000000, 1.6237310045934126, -0.71444164202110160, 0.92650259971825434},
    {0.29999999999999999, 0.40000000000000002, 0.20000000000000001, 0.050000000000000003, 0.50000000000000000, 1.0000000000000000, 0.27134067572116121, 0.36178756762821498, 0.22409796873486465},
    {-1.0000000000000000, 0.59999999999999998, -0.10000000000000001, 0.29999999999999999, 0.50000000000000000, 1.0000000000000000, -0.61899543099714840, 0.37139725859828902, 0.23755109061975922},
    {0.80000000000000004, 0.0, 1.1000000000000001, 0.20000000000000001, 0.69999999999999996, 2.5000000000000000, 0.54961157215939416, 0.0, 1.1421703573437277},
    {0.050000000000000003, -0.020000000000000000, 0.90000000000000002, 0.013333333333333334, 0.25000000000000000, 1.0000000000000000, 0.049324784108590518, -0.019729913643436206, 0.90000536575392102},
    {1.5000000000000000, 2.0000000000000000, 0.40000000000000002, 0.59999999999999998, 0.90000000000000002, 0.50000000000000000, 1.1397858284467252, 1.5197144379289670, 0.94378004808385735},
};

double moreau_objective(const double* m, double f, const double* mt, double ft, double gamma,
                        double beta, double w) {
  const double n2 = m[0] * m[0] + m[1] * m[1];
  double jv;
  if (f > 0.0)
    jv = w * n2 / (2.0 * std::pow(f, beta));
  else
    jv = (n2 == 0.0 && f == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  const double d2 = (m[0] - mt[0]) * (m[0] - mt[0]) + (m[1] - mt[1]) * (m[1] - mt[1]) +
                    (f - ft) * (f - ft);
  return jv + d2 / (2.0 * gamma);
}

}  // namespace

TEST_CASE("prox matches externally computed reference points") {
  for (const FrozenCase& c : kFrozen) {
    const double mt[2] = {c.mt0, c.mt1};
    double m[2];
    const double f = prox_j_beta(mt, 2, c.ft, c.gamma, c.beta, c.w, m);
    CHECK(std::abs(f - c.f) <= 1e-9);
    CHECK(std::abs(m[0] - c.m0) <= 1e-9);
    CHECK(std::abs(m[1] - c.m1) <= 1e-9);
  }
}

TEST_CASE("frozen reference points are genuine minimizers") {
  // the production output may not beat the reference value by more than rounding
  for (const FrozenCase& c : kFrozen) {
    const double mt[2] = {c.mt0, c.mt1};
    const double mref[2] = {c.m0, c.m1};
    double m[2];
    const double f = prox_j_beta(mt, 2, c.ft, c.gamma, c.beta, c.w, m);
    const double ours = moreau_objective(m, f, mt, c.ft, c.gamma, c.beta, c.w);
    const double ref = moreau_objective(mref, c.f, mt, c.ft, c.gamma, c.beta, c.w);
    CHECK(ours <= ref + 1e-10);
    CHECK(ref <= ours + 1e-10);
  }
}

TEST_CASE("general-exponent prox at beta 1 reduces to the cubic solver") {
  std::uint64_t s = 5;
  for (int k = 0; k < 200; ++k) {
    double mt[2] = {ot::test::uniform(s, -2, 2), ot::test::uniform(s, -2, 2)};
    const double ft = ot::test::uniform(s, -2, 2);
    const double gamma = ot::test::uniform(s, 1e-3, 2);
    double m1[2], m2[2];
    const double f1 = prox_j(mt, 2, ft, gamma, m1);
    const double f2 = prox_j_beta(mt, 2, ft, gamma, 1.0, 1.0, m2);
    CHECK(std::abs(f1 - f2) <= 1e-12 * std::max(1.0, std::abs(f1)));
    CHECK(std::abs(m1[0] - m2[0]) <= 1e-12);
    CHECK(std::abs(m1[1] - m2[1]) <= 1e-12);
  }
}

TEST_CASE("positive prox density solves the cubic exactly") {
  std::uint64_t s = 6;
  for (int k = 0; k < 500; ++k) {
    double mt[2] = {ot::test::uniform(s, -2, 2), ot::test::uniform(s, -2, 2)};
    const double ft = ot::test::uniform(s, -2, 2);
    const double gamma = ot::test::uniform(s, 1e-3, 2);
    double m[2];
    const double X = prox_j(mt, 2, ft, gamma, m);
    const double n2 = mt[0] * mt[0] + mt[1] * mt[1];
    const double disc = gamma * gamma * ft + 0.5 * gamma * n2;
    if (disc > 1e-12) {  // clearly on the positive-root branch
      CHECK(X > 0.0);
      const double res = (X - ft) * (X + gamma) * (X + gamma) - 0.5 * gamma * n2;
      const double scale = std::max(1.0, std::abs(ft) + gamma + n2);
      CHECK(std::abs(res) <= 1e-11 * scale * std::max(1.0, X));
      // momentum shrink factor
      CHECK(m[0] == doctest::Approx(X / (X + gamma) * mt[0]).epsilon(1e-12));
      CHECK(m[1] == doctest::Approx(X / (X + gamma) * mt[1]).epsilon(1e-12));
    } else if (disc < -1e-12) {
      CHECK(X == 0.0);
      CHECK(m[0] == 0.0);
      CHECK(m[1] == 0.0);
    }
  }
}

TEST_CASE("prox agrees with the scan-and-refine oracle") {
  std::uint64_t s = 7;
  const double betas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double weights[] = {0.5, 1.0, 5.0};
  for (int k = 0; k < 150; ++k) {
    double mt[2] = {ot::test::uniform(s, -2, 2), ot::test::uniform(s, -2, 2)};
    const double ft = ot::test::uniform(s, -2, 2);
    const double gamma = ot::test::uniform(s, 1e-2, 2);
    const double beta = betas[ot::test::next_u64(s) % 5];
    const double w = weights[ot::test::next_u64(s) % 3];
    double m[2];
    const double f = prox_j_beta(mt, 2, ft, gamma, beta, w, m);
    const tk::ProxOracleResult o = tk::oracle_prox(mt, 2, ft, gamma, beta, w);
    const double err = std::sqrt((f - o.f) * (f - o.f) + (m[0] - o.m[0]) * (m[0] - o.m[0]) +
                                 (m[1] - o.m[1]) * (m[1] - o.m[1]));
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("degenerate prox inputs take their closed forms") {
  double m[2];
  // zero target momentum, nonpositive target density: the origin
  double mt0[2] = {0.0, 0.0};
  CHECK(prox_j(mt0, 2, -0.3, 0.7, m) == 0.0);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == 0.0);
  // zero target momentum, positive target density: density is kept
  CHECK(prox_j(mt0, 2, 1.4, 0.7, m) == doctest::Approx(1.4).epsilon(1e-14));
  // infinite weight collapses to the origin regardless of the target
  double mt1[2] = {3.0, -1.0};
  CHECK(prox_j_beta(mt1, 2, 5.0, 0.5, 1.0, std::numeric_limits<double>::infinity(), m) == 0.0);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == 0.0);
  // beta 0 decouples: plain shrink on m, positive part on f
  const double g = 0.4, w = 2.0;
  const double f = prox_j_beta(mt1, 2, -0.2, g, 0.0, w, m);
  CHECK(f == 0.0);
  CHECK(m[0] == doctest::Approx(3.0 / (1.0 + g * w)).epsilon(1e-14));
  CHECK(m[1] == doctest::Approx(-1.0 / (1.0 + g * w)).epsilon(1e-14));
  const double f2 = prox_j_beta(mt1, 2, 0.9, g, 0.0, w, m);
  CHECK(f2 == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("prox output density is never negative") {
  std::uint64_t s = 8;
  for (int k = 0; k < 1000; ++k) {
    double mt[2] = {ot::test::uniform(s, -5, 5), ot::test::uniform(s, -5, 5)};
    const double ft = ot::test::uniform(s, -5, 5);
    const double gamma = ot::test::uniform(s, 1e-4, 10);
    const double beta = ot::test::uniform(s, 0.0, 1.0);
    double m[2];
    CHECK(prox_j_beta(mt, 2, ft, gamma, beta, 1.0, m) >= 0.0);
  }
}

TEST_CASE("prox is firmly nonexpansive") {
  std::uint64_t s = 9;
  for (int k = 0; k < 1000; ++k) {
    double x[3] = {ot::test::uniform(s, -3, 3), ot::test::uniform(s, -3, 3),
                   ot::test::uniform(s, -3, 3)};
    double y[3] = {ot::test::uniform(s, -3, 3), ot::test::uniform(s, -3, 3),
                   ot::test::uniform(s, -3, 3)};
    const double gamma = ot::test::uniform(s, 1e-2, 3);
    double px[2], py[2];
    const double fx = prox_j(x, 2, x[2], gamma, px);
    const double fy = prox_j(y, 2, y[2], gamma, py);
    const double d[3] = {px[0] - py[0], px[1] - py[1], fx - fy};
    const double lhs = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    const double rhs = d[0] * (x[0] - y[0]) + d[1] * (x[1] - y[1]) + d[2] * (x[2] - y[2]);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("paraboloid projection satisfies the projection optimality conditions") {
  std::uint64_t s = 10;
  for (int k = 0; k < 500; ++k) {
    double a[2] = {ot::test::uniform(s, -4, 4), ot::test::uniform(s, -4, 4)};
    const double b = ot::test::uniform(s, -4, 4);
    double pa[2], pb;
    project_paraboloid(a, 2, b, 1.0, pa, &pb);
    // lands inside the region
    CHECK(pa[0] * pa[0] + pa[1] * pa[1] + 2.0 * pb <= 1e-10);
    const double r[3] = {a[0] - pa[0], a[1] - pa[1], b - pb};
    if (a[0] * a[0] + a[1] * a[1] + 2.0 * b <= 0.0) {
      // interior points are fixed
      CHECK(std::abs(r[0]) <= 1e-10);
      CHECK(std::abs(r[1]) <= 1e-10);
      CHECK(std::abs(r[2]) <= 1e-10);
    } else {
      // boundary is active and the residual points along the outward normal
      // (2*pa, 2): r = lambda*(pa, 1) componentwise with lambda = r[2] >= 0
      CHECK(std::abs(pa[0] * pa[0] + pa[1] * pa[1] + 2.0 * pb) <= 1e-9);
      CHECK(r[2] >= -1e-12);
      CHECK(std::abs(r[0] - r[2] * pa[0]) <= 1e-9);
      CHECK(std::abs(r[1] - r[2] * pa[1]) <= 1e-9);
    }
    // projecting the projection is a no-op
    double qa[2], qb;
    project_paraboloid(pa, 2, pb, 1.0, qa, &qb);
    CHECK(std::abs(qa[0] - pa[0]) <= 1e-9);
    CHECK(std::abs(qa[1] - pa[1]) <= 1e-9);
    CHECK(std::abs(qb - pb) <= 1e-9);
  }
}

TEST_CASE("paraboloid projection is invariant to the internal step") {
  std::uint64_t s = 11;
  for (int k = 0; k < 200; ++k) {
    double a[2] = {ot::test::uniform(s, -4, 4), ot::test::uniform(s, -4, 4)};
    const double b = ot::test::uniform(s, -4, 4);
    double p1[2], b1, p2[2], b2;
    project_paraboloid(a, 2, b, 0.1, p1, &b1);
    project_paraboloid(a, 2, b, 10.0, p2, &b2);
    CHECK(std::abs(p1[0] - p2[0]) <= 1e-10);
    CHECK(std::abs(p1[1] - p2[1]) <= 1e-10);
    CHECK(std::abs(b1 - b2) <= 1e-10);
  }
}

TEST_CASE("moreau identity splits the point between prox and region projection") {
  std::uint64_t s = 12;
  for (const double gamma : {0.1, 1.0, 10.0}) {
    for (int k = 0; k < 100; ++k) {
      double v[3] = {ot::test::uniform(s, -3, 3), ot::test::uniform(s, -3, 3),
                     ot::test::uniform(s, -3, 3)};
      double pm[2];
      const double pf = prox_j(v, 2, v[2], gamma, pm);
      const double vs[2] = {v[0] / gamma, v[1] / gamma};
      double cm[2], cf;
      project_paraboloid(vs, 2, v[2] / gamma, gamma, cm, &cf);
      const double r0 = pm[0] + gamma * cm[0] - v[0];
      const double r1 = pm[1] + gamma * cm[1] - v[1];
      const double r2 = pf + gamma * cf - v[2];
      CHECK(std::sqrt(r0 * r0 + r1 * r1 + r2 * r2) <= 1e-10);
    }
  }
}

TEST_CASE("field prox applies the cell rule everywhere including walls") {
  const GridDims g = GridDims::plane(4, 3, 2);
  CostModel cost = CostModel::uniform(g, 0.75);
  cost.weight.fill(1.3);
  cost.infinite[5] = 1;  // one impassable cell
  CenteredField V = CenteredField::zeros(g);
  tk::fill_random(V, 31);
  const CenteredField before = V;
  const double gamma = 0.2;
  prox_J(V, gamma, cost);
  for (std::size_t k = 0; k < V.f.v.size(); ++k) {
    double mt[2] = {before.m[0].v[k], before.m[1].v[k]};
    double m[2];
    double f;
    if (cost.infinite[k]) {
      f = 0.0;
      m[0] = m[1] = 0.0;
    } else {
      f = prox_j_beta(mt, 2, before.f.v[k], gamma, cost.beta, cost.weight.v[k], m);
    }
    CHECK(V.f.v[k] == f);
    CHECK(V.m[0].v[k] == m[0]);
    CHECK(V.m[1].v[k] == m[1]);
  }
}

TEST_CASE("cost model validation rejects malformed weights") {
  const GridDims g = GridDims::plane(4, 3, 2);
  CostModel cost = CostModel::uniform(g);
  CHECK_NOTHROW(cost.validate(g));
  CostModel bad_beta = cost;
  bad_beta.beta = 1.5;
  CHECK_THROWS_AS(bad_beta.validate(g), ValidationError);
  CostModel low = cost;
  low.weight.v[3] = 1e-9;  // below min_weight, not flagged infinite
  CHECK_THROWS_AS(low.validate(g), ValidationError);
  CostModel shape = cost;
  shape.weight = Array3(2, 2, 2, 1.0);
  CHECK_THROWS_AS(shape.validate(g), DimensionError);
}
