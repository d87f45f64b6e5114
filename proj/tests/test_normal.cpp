#include "oracles.hpp"

#include <acgeom/fixtures.hpp>

#include <gtest/gtest.h>

using namespace acgeom;
using E = exact_complex;

namespace {

cjet_matrix single_B(int order, std::vector<int> alpha, std::vector<int> beta, cplx c) {
  cjet_matrix b(2, 2, 2, order);
  b(0, 0).add_term(alpha, beta, c);
  return b;
}

}  // namespace

TEST(ClosedFormA, SecondOrderTerm) {
  auto b = single_B(2, {0, 1}, {0, 0}, {0.3, 0.1});
  auto a = closed_form_A_coefficient(b, {0, 1}, {0, 1});
  EXPECT_LT(std::abs(a(0, 0) - std::norm(cplx(0.3, 0.1))), 1e-15);
  EXPECT_LT(std::abs(fix_b().A(0, 0).coeff({0, 1}, {0, 1}) - cplx(0, 0.05)), 1e-15);
}

TEST(ClosedFormA, ExactAgreementWithDegreewiseSolve) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 4; ++trial) {
    auto b = oracle::random_exact_normal_B(rng, 2, 4);
    auto closed = A_from_B(b);
    auto solved = oracle::solve_A_degreewise(b);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_TRUE(closed(i, j) == solved(i, j)) << trial << " " << i << j;
  }
}

TEST(ClosedFormA, ExactThroughDegreeFive) {
  std::mt19937_64 rng(99);
  auto b = oracle::random_exact_normal_B(rng, 2, 5);
  auto closed = A_from_B(b);
  auto solved = oracle::solve_A_degreewise(b);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_TRUE(closed(i, j) == solved(i, j));
}

TEST(ClosedFormA, RejectsDegreeSix) {
  cjet_matrix b(2, 2, 2, 6);
  EXPECT_THROW(A_from_B(b), precondition_error);
}

TEST(ClosedFormA, SatisfiesBothConstraintsOnScalarFamilies) {
  for (auto [al, be] : std::vector<std::pair<std::vector<int>, std::vector<int>>>{
           {{0, 1}, {0, 0}}, {{0, 2}, {1, 0}}, {{1, 1}, {0, 0}}, {{0, 1}, {0, 1}}}) {
    auto s = structure_from_B(single_B(4, al, be, {0.2, -0.3}));
    EXPECT_LT(validate_structure(s).value(), 1e-12);
  }
}

TEST(Normalize, StandardIsFixed) {
  auto r = normalize_to_order(fix_j0(), 3);
  EXPECT_TRUE(r.identity);
  EXPECT_EQ(max_abs(r.st.B), 0.0);
}

TEST(Normalize, FixBIsAlreadyNormal) {
  auto r = normalize_to_order(fix_b(), 4);
  EXPECT_TRUE(r.identity);
  EXPECT_EQ(normal_form_violation(r.st, 4), 0.0);
}

TEST(Normalize, RandomStructureReachesPattern) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto s = random_deformation(seed, 2, 4);
    ASSERT_GT(normal_form_violation(s, 3), 1e-3);
    auto r = normalize_to_order(s, 3);
    EXPECT_LT(normal_form_violation(r.st, 3), 1e-11);
    EXPECT_LT(validate_structure(r.st).value(), 1e-11);
    // A is determined by B through the closed formula.
    EXPECT_LT(max_diff(A_from_B(r.st.B), r.st.A), 1e-12);
    // Re-running is the identity.
    auto again = normalize_to_order(r.st, 3);
    EXPECT_TRUE(again.identity);
  }
}

TEST(Normalize, StagesDoNotTouchLowerDegrees) {
  auto s = random_deformation(11, 2, 4);
  auto cur = s;
  for (int m = 1; m <= 3; ++m) {
    auto next = transform_structure(cur, normalizing_change(cur, m));
    EXPECT_LT(max_diff(next.B, cur.B, m - 1), 1e-13);
    EXPECT_LT(normal_form_violation(next, m), 1e-11);
    cur = next;
  }
}

TEST(Normalize, ThreeDimensional) {
  auto r = normalize_to_order(random_deformation(7, 3, 3), 3);
  EXPECT_LT(normal_form_violation(r.st, 3), 1e-11);
}

TEST(Normalize, RejectsNonAdapted) {
  auto s = fix_j0();
  s.B(0, 1) = cjet::constant(2, 4, 0.1);
  EXPECT_THROW(normalize_to_order(s, 3), precondition_error);
}

TEST(TorsionJet, StandardIsZero) {
  auto t = torsion_jet_normal(fix_j0());
  for (auto& m : t) EXPECT_EQ(max_abs(m), 0.0);
}

TEST(TorsionJet, FixB) {
  auto s = fix_b();
  auto t = torsion_jet_normal(s);
  EXPECT_LT(std::abs(t[0](0, 1).constant_term() - cplx(-0.05, 0.15)), 1e-15);
  EXPECT_EQ(max_abs(homogeneous(t[0](0, 1), 1)), 0.0);
  auto g = make_geometry(s);
  auto tt = compute_torsion(*g);
  for (int r = 0; r < 2; ++r) EXPECT_LT(max_diff(t[r], tt.Nbar[r], 1), 1e-14);
}

TEST(TorsionJet, AntiholomorphicLinearTerm) {
  // B^{2, 1bar}_{1,1}: z_2 zbar_1 in B_{1,1}
  const cplx c{0.2, 0.1};
  auto s = structure_from_B(single_B(4, {0, 1}, {1, 0}, c));
  auto t = torsion_jet_normal(s);
  EXPECT_LT(std::abs(t[0](0, 1).coeff({0, 0}, {1, 0}) - cplx(0, 0.5) * c), 1e-15);
  auto tt = compute_torsion(*make_geometry(s));
  EXPECT_LT(max_diff(t[0], tt.Nbar[0], 1), 1e-14);
}

TEST(TorsionJet, RandomNormalCrossCheck) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto s = random_normal(seed, seed == 3 ? 3 : 2, 3);
    auto t = torsion_jet_normal(s);
    auto tt = compute_torsion(*make_geometry(s));
    for (std::size_t r = 0; r < t.size(); ++r) EXPECT_LT(max_diff(t[r], tt.Nbar[r], 1), 1e-11);
  }
}

TEST(TorsionJet, Diagnostic) {
  struct tcase {
    cjet_matrix b;
    int k;
    bool vanish;
  };
  std::vector<tcase> cases{
      {single_B(4, {0, 2}, {0, 0}, 0.3), 0, true},
      {single_B(4, {0, 1}, {0, 0}, {0.3, 0.1}), 0, false},
      {single_B(4, {0, 3}, {0, 0}, 0.3), 1, true},
      {single_B(4, {1, 1}, {0, 0}, 0.3), 1, false},
  };
  for (auto& c : cases) {
    auto d = diagnose_torsion_jet(structure_from_B(c.b), c.k);
    EXPECT_TRUE(d.consistent());
    EXPECT_EQ(d.torsion_vanishes, c.vanish);
  }
}

TEST(HolomorphicInvariance, ZeroChange) {
  std::vector<cjet> c(2, cjet(2, 4));
  auto r = verify_holomorphic_invariance(fix_b(), 3, c);
  EXPECT_EQ(r.deviation, 0.0);
}

TEST(HolomorphicInvariance, FixBDegreeFour) {
  std::vector<cjet> c(2, cjet(2, 4));
  c[1].add_term({4, 0}, {0, 0}, 0.1);
  auto r = verify_holomorphic_invariance(fix_b(), 3, c);
  EXPECT_LT(r.deviation, 1e-11);
  EXPECT_LT(r.violation, 1e-11);
}

TEST(HolomorphicInvariance, StandardStaysStandard) {
  std::vector<cjet> c(2, cjet(2, 4));
  c[0].add_term({1, 3}, {0, 0}, cplx(0.2, 0.4));
  auto r = verify_holomorphic_invariance(fix_j0(), 3, c);
  EXPECT_LT(r.deviation, 1e-14);
  EXPECT_LT(r.violation, 1e-14);
}

TEST(HolomorphicInvariance, RejectsNonHolomorphic) {
  std::vector<cjet> c(2, cjet(2, 4));
  c[0].add_term({3, 0}, {1, 0}, 0.1);
  EXPECT_THROW(verify_holomorphic_invariance(fix_b(), 3, c), precondition_error);
}
