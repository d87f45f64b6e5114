#include "oracles.hpp"

#include <acgeom/fixtures.hpp>
#include <acgeom/geodesic.hpp>

#include <gtest/gtest.h>

using namespace acgeom;

namespace {

const cplx b{0.3, 0.1};

exp_setup fixb_setup() { return make_exp_setup(fix_b(), cjet_matrix::identity(2, 2, 4)); }

// Plain midpoint rule with accelerations from term-by-term jet evaluation.
std::vector<cplx> midpoint_oracle(const coordinate_connection& k, std::vector<cplx> z, std::vector<cplx> v, int steps) {
  const int n = k.n;
  auto accel = [&](const std::vector<cplx>& x, const std::vector<cplx>& w) {
    std::vector<cplx> u(2 * n);
    for (int i = 0; i < n; ++i) u[i] = w[i], u[n + i] = std::conj(w[i]);
    std::vector<cplx> a(n);
    for (int c = 0; c < n; ++c)
      for (int p = 0; p < 2 * n; ++p)
        for (int q = 0; q < 2 * n; ++q) a[c] -= oracle::naive_eval(k.G[p](c, q), x) * u[p] * u[q];
    return a;
  };
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    auto a = accel(z, v);
    std::vector<cplx> zm(n), vm(n);
    for (int i = 0; i < n; ++i) zm[i] = z[i] + 0.5 * h * v[i], vm[i] = v[i] + 0.5 * h * a[i];
    auto am = accel(zm, vm);
    for (int i = 0; i < n; ++i) z[i] += h * vm[i], v[i] += h * am[i];
  }
  return z;
}

}  // namespace

TEST(ExpAsymptotic, FlatIsTranslation) {
  auto st = make_exp_setup(fix_j0(), cjet_matrix::identity(2, 2, 4));
  std::vector<cplx> z{cplx(0.03, -0.01), cplx(0.01, 0.02)}, v{cplx(0.04, 0.01), cplx(-0.02, 0.03)};
  auto r = compare_exp(st.coeffs, st.field, z, v);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(r.endpoint_asymptotic[k], z[k] + v[k]);
    EXPECT_LT(std::abs(r.endpoint_numeric[k] - (z[k] + v[k])), 1e-12);
  }
  auto p = error_scaling_probe(st, z, v);
  EXPECT_TRUE(p.exact);
}

TEST(ExpAsymptotic, FixBAtOrigin) {
  // only conj(B)^2_{1,1} = conj(b) contributes: exp_0(v)_1 = v_1 + (i/4) conj(b) conj(v_2) conj(v_1)
  auto st = fixb_setup();
  std::vector<cplx> z(2, 0.0), v{cplx(0.04, 0.01), cplx(-0.02, 0.03)};
  auto e = exp_asymptotic(st.coeffs, z, v);
  EXPECT_LT(std::abs(e[0] - (v[0] + cplx(0, 0.25) * std::conj(b) * std::conj(v[1]) * std::conj(v[0]))), 1e-17);
  EXPECT_LT(std::abs(e[1] - v[1]), 1e-17);
}

TEST(ExpAsymptotic, ZeroVector) {
  auto st = make_exp_setup(random_normal(2, 2, 4), random_metric(2, 2, 4, 0.2, 2));
  std::vector<cplx> z{cplx(0.03, -0.01), cplx(0.01, 0.02)};
  EXPECT_EQ(exp_asymptotic(st.coeffs, z, {0.0, 0.0}), z);
}

TEST(ExpAsymptotic, QuadraticPartIsConnection) {
  struct item {
    structure s;
    cjet_matrix h;
  };
  for (auto& c : std::vector<item>{{fix_b(), cjet_matrix::identity(2, 2, 4)},
                                   {random_normal(2, 2, 4), random_metric(2, 2, 4, 0.2, 2)},
                                   {random_normal(3, 3, 3), random_metric(3, 3, 3, 0.2, 2)}}) {
    auto g = make_geometry(c.s);
    auto k = chern_coordinate_connection(*g, chern_connection(*g, c.h));
    EXPECT_LT(quadratic_consistency(exp_asymptotic_coefficients(c.s, c.h), k), 1e-11);
  }
}

TEST(ExpAsymptotic, DisplayedTermsMissMixedPart) {
  auto s = random_normal(2, 2, 4);
  auto h = random_metric(2, 2, 4, 0.2, 2);
  auto g = make_geometry(s);
  auto k = chern_coordinate_connection(*g, chern_connection(*g, h));
  EXPECT_GT(quadratic_consistency(exp_asymptotic_coefficients(s, h), k, 11, exp_terms::displayed), 1e-3);
}

TEST(ExpAsymptotic, Preconditions) {
  EXPECT_THROW(exp_asymptotic_coefficients(random_deformation(1, 2, 4), cjet_matrix::identity(2, 2, 4)),
               precondition_error);
  EXPECT_THROW(exp_asymptotic_coefficients(fix_b(), 2.0 * cjet_matrix::identity(2, 2, 4)), precondition_error);
  // symmetric linear part H^1_{1,1}
  EXPECT_THROW(exp_asymptotic_coefficients(fix_b(), linear_metric(2, 4, 0, 0, 0, 0.1)), precondition_error);
  // antisymmetric linear part H^1_{2,1} = -H^2_{1,1} is accepted
  auto h = cjet_matrix::identity(2, 2, 4);
  h(1, 0).add_term(mono::unit(0), 0.1);
  h(0, 1).add_term(mono::unit(2), 0.1);
  h(0, 0).add_term(mono::unit(1), -0.1);
  h(0, 0).add_term(mono::unit(3), -0.1);
  EXPECT_NO_THROW(exp_asymptotic_coefficients(fix_b(), h));
}

TEST(Integrator, AgreesWithMidpointOracle) {
  auto s = random_normal(2, 2, 4);
  auto h = random_metric(2, 2, 4, 0.2, 2);
  auto g = make_geometry(s);
  auto k = chern_coordinate_connection(*g, chern_connection(*g, h));
  connection_field field(k);
  std::vector<cplx> z{cplx(0.02, 0.01), cplx(-0.01, 0.03)}, v{cplx(0.05, -0.02), cplx(0.03, 0.04)};
  auto r = integrate_geodesic(field, z, v);
  EXPECT_LT(r.richardson, 1e-12);
  EXPECT_LT(max_deviation(r.endpoint, midpoint_oracle(k, z, v, 2000)), 1e-9);
}

TEST(Integrator, Reversible) {
  auto st = fixb_setup();
  EXPECT_LT(reversibility_defect(st.field, {cplx(0.02, -0.01), 0.0}, {cplx(0.04, 0.01), cplx(0.02, -0.03)}), 1e-10);
}

TEST(Integrator, FourthOrder) {
  auto st = fixb_setup();
  const double ratio = convergence_ratio(st.field, {0.0, 0.0}, {cplx(0.12, 0.03), cplx(0.06, -0.05)});
  EXPECT_NEAR(ratio, 16.0, 3.2);
}

TEST(Integrator, StaysReal) {
  auto st = make_exp_setup(random_normal(3, 3, 3), random_metric(3, 3, 3, 0.2, 2));
  auto r = integrate_geodesic(st.field, {0.01, cplx(0, 0.02), -0.01}, {cplx(0.03, 0.01), 0.02, cplx(0, -0.04)});
  EXPECT_LT(r.reality_defect, 1e-15);
}

TEST(Integrator, TrustRadius) {
  auto st = fixb_setup();
  try {
    integrate_geodesic(st.field, {0.0, 0.0}, {0.15, 0.15});
    FAIL() << "expected a trust radius error";
  } catch (const trust_radius_error& e) {
    EXPECT_GT(e.exit_time, 0.8);
    EXPECT_LT(e.exit_time, 1.0);
  }
}

TEST(ErrorScaling, FixBAtOrigin) {
  auto p = error_scaling_probe(fixb_setup(), {0.0, 0.0}, {0.04, 0.02});
  ASSERT_EQ(p.rows.size(), 4u);
  EXPECT_FALSE(p.exact);
  EXPECT_GE(p.slope, 2.8);
  EXPECT_TRUE(std::isnan(p.rows[0].slope_partial));
  for (std::size_t i = 1; i < p.rows.size(); ++i) EXPECT_GT(p.rows[i].slope_partial, 2.5);
}

TEST(ErrorScaling, OffOrigin) {
  auto st = make_exp_setup(random_normal(2, 2, 4), random_metric(2, 2, 4, 0.2, 2));
  auto p = error_scaling_probe(st, {cplx(0.03, -0.01), cplx(0.01, 0.02)}, {0.04, 0.02});
  EXPECT_GE(p.slope, 2.8);
}

TEST(ErrorScaling, TorsionJetZeroVariant) {
  cjet_matrix bm(2, 2, 2, 4);
  bm(0, 0).add_term({0, 2}, {0, 0}, b);
  auto p = error_scaling_probe(make_exp_setup(structure_from_B(bm), cjet_matrix::identity(2, 2, 4)), {0.0, 0.0},
                               {0.04, 0.02});
  EXPECT_GE(p.slope, 2.8);
}
