#include "oracles.hpp"

#include <acgeom/jet_matrix.hpp>

#include <gtest/gtest.h>

using namespace acgeom;

namespace {

cjet z(int n, int order, int k) { return cjet::variable(n, order, k); }
cjet zb(int n, int order, int k) { return cjet::variable(n, order, n + k); }
cjet one(int n, int order) { return cjet::constant(n, order, 1.0); }

}  // namespace

TEST(Jet, BinomialProduct) {
  auto f = (one(2, 3) + z(2, 3, 0)) * (one(2, 3) + zb(2, 3, 0));
  EXPECT_EQ(f.terms().size(), 4u);
  EXPECT_EQ(f.coeff({1, 0}, {1, 0}), cplx(1.0));
  EXPECT_EQ(f.coeff({1, 0}, {0, 0}), cplx(1.0));
  EXPECT_EQ(f.coeff({0, 0}, {1, 0}), cplx(1.0));
  EXPECT_EQ(f.constant_term(), cplx(1.0));
}

TEST(Jet, UnitIsNeutral) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    auto f = oracle::random_jet(rng, 3, 5, 12);
    EXPECT_EQ(f * one(3, 5), f);
  }
}

TEST(Jet, TruncationMatchesExactOracle) {
  using E = exact_complex;
  auto x = jet<E>::variable(2, 2, 0) + jet<E>::variable(2, 2, 1);
  auto cube = x * x * x;
  EXPECT_TRUE(cube.is_zero());
  auto p = oracle::to_poly(x);
  auto sq = x * x;
  auto psq = oracle::mul(oracle::mul(p, p, 9), p, 9);
  EXPECT_EQ(psq.size(), 4u);  // the untruncated cube has four monomials, all of degree 3
  psq = oracle::mul(p, p, 2);
  EXPECT_EQ(sq.terms().size(), psq.size());
}

TEST(Jet, ProductMatchesDenseOracle) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    auto f = oracle::random_jet(rng, 2, 5, 10);
    auto g = oracle::random_jet(rng, 2, 5, 10);
    auto ref = oracle::mul(oracle::to_poly(f), oracle::to_poly(g), 5);
    auto got = oracle::to_poly(f * g);
    for (auto& [e, c] : ref) {
      cplx gc = got.count(e) ? got[e] : cplx(0);
      EXPECT_LT(std::abs(gc - c), 1e-13);
    }
  }
}

TEST(Jet, ConjugationRules) {
  auto f = cjet::variable(1, 2, 0, cplx(0, 1));
  auto c = conj(f);
  EXPECT_EQ(c.coeff({0}, {1}), cplx(0, -1));
  EXPECT_EQ(c.terms().size(), 1u);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto a = oracle::random_jet(rng, 3, 4, 10);
    auto b = oracle::random_jet(rng, 3, 4, 10);
    EXPECT_EQ(conj(conj(a)), a);
    EXPECT_LT(max_diff(conj(a * b), conj(a) * conj(b)), 1e-13);
    std::vector<cplx> p{{0.1, 0.2}, {-0.3, 0.05}, {0.2, -0.1}};
    EXPECT_LT(std::abs(eval(conj(a), p) - std::conj(eval(a, p))), 1e-13);
  }
}

TEST(Jet, PartialDerivatives) {
  auto f = z(2, 4, 0) * z(2, 4, 0) * zb(2, 4, 1);
  auto d = partial(f, 0);
  EXPECT_EQ(d.coeff({1, 0}, {0, 1}), cplx(2.0));
  EXPECT_EQ(d.terms().size(), 1u);
  EXPECT_EQ(d.effective_order(), 3);
  EXPECT_TRUE(partial(z(2, 4, 0) * z(2, 4, 0), 2).is_zero());
  EXPECT_THROW(partial(f, 4), structural_error);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    auto a = oracle::random_jet(rng, 2, 5, 10);
    auto b = oracle::random_jet(rng, 2, 5, 10);
    for (int v = 0; v < 4; ++v) {
      auto lhs = partial(a * b, v);
      auto rhs = partial(a, v) * b + a * partial(b, v);
      EXPECT_LT(max_diff(lhs, rhs), 1e-12);
    }
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) EXPECT_EQ(partial(partial(a, j), 2 + k), partial(partial(a, 2 + k), j));
  }
}

TEST(Jet, RingAxioms) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    auto a = oracle::random_jet(rng, 3, 5, 8);
    auto b = oracle::random_jet(rng, 3, 5, 8);
    auto c = oracle::random_jet(rng, 3, 5, 8);
    EXPECT_LT(max_diff((a * b) * c, a * (b * c)), 1e-12);
    EXPECT_LT(max_diff(a * b, b * a), 1e-13);
    EXPECT_LT(max_diff(a * (b + c), a * b + a * c), 1e-12);
  }
}

TEST(Jet, EffectiveOrderOfProduct) {
  auto f = partial(z(2, 4, 0) * z(2, 4, 0), 0);
  auto g = one(2, 4) + z(2, 4, 1);
  EXPECT_EQ((f * g).effective_order(), 3);
}

TEST(Jet, Composition) {
  // z_1 -> z_1 + z_2^2
  std::vector<cjet> phi{z(2, 4, 0) + z(2, 4, 1) * z(2, 4, 1), z(2, 4, 1)};
  auto r = compose(z(2, 4, 0), phi);
  EXPECT_LT(max_diff(r, phi[0]), 1e-15);

  std::mt19937_64 rng(2);
  auto f = oracle::random_jet(rng, 2, 4, 15);
  EXPECT_LT(max_diff(compose(f, {z(2, 4, 0), z(2, 4, 1)}), f), 1e-15);

  // Constant term requires the affine flag.
  std::vector<cjet> shift{z(2, 4, 0) + one(2, 4), z(2, 4, 1)};
  EXPECT_THROW(compose(f, shift), precondition_error);
  EXPECT_NO_THROW(compose(f, shift, true));
}

TEST(Jet, CompositionFunctorial) {
  std::mt19937_64 rng(9);
  auto f = oracle::random_jet(rng, 2, 4, 12);
  std::vector<cjet> phi{z(2, 4, 0) + 0.3 * (z(2, 4, 1) * zb(2, 4, 0)), z(2, 4, 1) - 0.2 * (z(2, 4, 0) * z(2, 4, 0))};
  std::vector<cjet> psi{z(2, 4, 0) + 0.1 * (zb(2, 4, 1) * zb(2, 4, 1)), z(2, 4, 1) + 0.4 * (z(2, 4, 0) * zb(2, 4, 1))};
  auto lhs = compose(compose(f, phi), psi);
  std::vector<cjet> phipsi{compose(phi[0], psi), compose(phi[1], psi)};
  EXPECT_LT(max_diff(lhs, compose(f, phipsi)), 1e-13);
}

TEST(Jet, Evaluation) {
  auto f = z(2, 3, 0) * zb(2, 3, 0);
  EXPECT_NEAR(std::abs(eval(f, {cplx(0.5), cplx(0)}) - 0.25), 0.0, 1e-16);
  EXPECT_EQ(eval(cjet::constant(2, 3, cplx(1, 2)), {cplx(0.3), cplx(0.1, 1)}), cplx(1, 2));
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto g = oracle::random_jet(rng, 3, 5, 20);
    std::vector<cplx> p{{0.3, -0.1}, {0.2, 0.4}, {-0.5, 0.1}};
    EXPECT_LT(std::abs(eval(g, p) - oracle::naive_eval(g, p)), 1e-13);
  }
}

TEST(Jet, PruningBelowThreshold) {
  auto f = z(1, 2, 0);
  f.add_term({1}, {0}, cplx(-1.0 + 1e-16));
  EXPECT_TRUE(f.is_zero());
}

TEST(JetMatrix, Inverse) {
  auto id = cjet_matrix::identity(2, 2, 4);
  EXPECT_LT(max_diff(inverse(id), id), 0.0 + 1e-300);

  auto m = id;
  m(0, 1) = z(2, 4, 0);
  auto inv = inverse(m);
  auto expect = id;
  expect(0, 1) = -z(2, 4, 0);
  EXPECT_LT(max_diff(inv, expect), 1e-15);

  auto h = id;
  h(0, 0) = one(2, 4) + 0.2 * (z(2, 4, 0) + zb(2, 4, 0));
  auto hinv = inverse(h);
  auto x = z(2, 4, 0) + zb(2, 4, 0);
  EXPECT_LT(max_diff(hinv(0, 0), one(2, 4) - 0.2 * x + 0.04 * (x * x) - 0.008 * (x * x * x) + 0.0016 * (x * x * x * x)), 1e-15);
  EXPECT_LT(max_abs(h * hinv - id), 1e-15);
}

TEST(JetMatrix, SingularConstantTerm) {
  cjet_matrix m(2, 2, 1, 2);
  m(0, 0) = one(1, 2);
  m(0, 1) = one(1, 2);
  m(1, 0) = one(1, 2);
  m(1, 1) = one(1, 2) + z(1, 2, 0);
  try {
    inverse(m);
    FAIL() << "expected singularity";
  } catch (const singularity_error& e) {
    EXPECT_TRUE(std::isinf(e.condition) || e.condition > 1e13);
  }
}

TEST(JetMatrix, RandomInverse) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 5; ++t) {
    cjet_matrix m = cjet_matrix::identity(3, 2, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) += oracle::random_jet(rng, 2, 4, 6, 0.3);
    auto inv = inverse(m);
    EXPECT_LT(max_abs(m * inv - cjet_matrix::identity(3, 2, 4)), 1e-13);
  }
}
