#pragma once

#include "normal_coords.hpp"

#include <random>

namespace acgeom {

inline structure fix_j0(int n = 2, int order = 4) { return standard_structure<cplx>(n, order); }

// n = 2, B_{1,1} = b z_2 (the only non-zero B coefficient), A from the closed formula.
template <class S = cplx>
almost_complex_structure<S> fix_b(int order = 4, cplx b = {0.3, 0.1}) {
  jet_matrix<S> bm(2, 2, 2, order);
  bm(0, 0) = jet<S>::variable(2, order, 1, sfrom<S>(b));
  return structure_from_B(bm);
}

// Random sparse jet with zero constant term and coefficients in [-amp, amp]^2.
inline cjet random_jet(std::mt19937_64& rng, int n, int order, int nterms, double amp, int min_degree = 1) {
  std::uniform_int_distribution<int> deg(min_degree, order);
  std::uniform_int_distribution<int> var(0, 2 * n - 1);
  std::uniform_real_distribution<double> u(-amp, amp);
  cjet f(n, order);
  for (int t = 0; t < nterms; ++t) {
    int d = deg(rng);
    std::vector<int> a(n, 0), b(n, 0);
    for (int i = 0; i < d; ++i) {
      int v = var(rng);
      (v < n ? a[v] : b[v - n])++;
    }
    f.add_term(a, b, cplx(u(rng), u(rng)));
  }
  return f;
}

// (I+P) J0 (I+P)^{-1} for a seeded small P, then adapted at the origin.
inline structure random_deformation(std::uint64_t seed, int n, int order, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  cjet_matrix p(2 * n, 2 * n, n, order);
  const double c0 = 0.4 / (2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) {
      p(i, j) = random_jet(rng, n, order, 2, amp);
      p(i, j).add_term(0, cplx(c0 * u(rng), c0 * u(rng)));
    }
  return adapt_linear(structure_from_deformation(p)).st;
}

// Random structure brought to normal coordinates of the given order.
inline structure random_normal(std::uint64_t seed, int n, int order, double amp = 0.3) {
  return normalize_to_order(random_deformation(seed, n, order, amp), order).st;
}

// I + K + K^*, K a random jet matrix with no terms below min_degree.
inline cjet_matrix random_metric(std::uint64_t seed, int n, int order, double amp = 0.2, int min_degree = 1) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  cjet_matrix k(n, n, n, order);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = random_jet(rng, n, order, 3, amp, min_degree);
  return cjet_matrix::identity(n, n, order) + k + k.adjoint();
}

// I plus c z_p in h_{l,m} and its conjugate in h_{m,l}.
inline cjet_matrix linear_metric(int n, int order, int p, int l, int m, cplx c) {
  auto h = cjet_matrix::identity(n, n, order);
  h(l, m).add_term(mono::unit(p), c);
  h(m, l).add_term(mono::unit(n + p), std::conj(c));
  return h;
}

// Closed omega: H^1_{1,2} = 0.2.
inline cjet_matrix symplectic_metric(int order = 4) { return linear_metric(2, order, 0, 0, 1, 0.2); }

// Non-closed omega: H^2_{1,2} = 0.2.
inline cjet_matrix non_closed_metric(int order = 4) { return linear_metric(2, order, 1, 0, 1, 0.2); }

// h_{l,m} = delta_{l,m} (1 + z_1 zbar_1)
inline cjet_matrix conformal_metric(int n, int order) {
  auto h = cjet_matrix::identity(n, n, order);
  for (int k = 0; k < n; ++k) h(k, k).add_term(mono::unit(0) + mono::unit(n), 1.0);
  return h;
}

// h_{1,1} = 1 - z_1 zbar_1, the other entries from I.
inline cjet_matrix bump_metric(int n, int order) {
  auto h = cjet_matrix::identity(n, n, order);
  h(0, 0).add_term(mono::unit(0) + mono::unit(n), -1.0);
  return h;
}

}  // namespace acgeom
