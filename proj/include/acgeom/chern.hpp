#pragma once

#include "forms.hpp"
#include "normal_coords.hpp"

#include <Eigen/Dense>

#include <random>

namespace acgeom {

using cform_matrix = form_matrix<cplx>;
using cgeometry = geometry<cplx>;

// Coefficient slots of a jet: z_p, zbar_p, the symmetric half of z_p z_h and z_p zbar_h.
namespace slot {
inline cplx lin(const cjet& f, int p) { return f.coeff(mono::unit(p)); }
inline cplx antilin(const cjet& f, int p) { return f.coeff(mono::unit(f.n() + p)); }
inline cplx holo2(const cjet& f, int p, int h) {
  cplx c = f.coeff(mono::unit(p) + mono::unit(h));
  return p == h ? c : 0.5 * c;
}
inline cplx mixed(const cjet& f, int p, int h) { return f.coeff(mono::unit(p) + mono::unit(f.n() + h)); }
}  // namespace slot

// ---------------------------------------------------------------------------
// Hermitian metrics: H(l, m) = h(zeta_l, zeta_m), omega = (i/2) sum h_lm zeta*_l ^ zetabar*_m.

struct hermitian_data {
  cjet_matrix H;
  int n() const { return H.rows(); }
};

inline hermitian_data identity_metric(int n, int order) { return {cjet_matrix::identity(n, n, order)}; }

// Largest deviation from h_lm = conj(h_ml).
inline double hermitian_defect(const cjet_matrix& h) { return max_diff(h, h.adjoint()); }

inline double smallest_eigenvalue_at_origin(const cjet_matrix& h) {
  const int n = h.rows();
  Eigen::MatrixXcd h0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h0(i, j) = h(i, j).constant_term();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h0 + h0.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline void validate_metric(const hermitian_data& hd, int n, int order, double tol = 1e-12) {
  if (hd.H.rows() != n || hd.H.cols() != n) throw structural_error("metric: matrix size does not match n");
  if (hd.H.n() != n || hd.H.order() != order) throw structural_error("metric: jet dimension/order mismatch");
  if (double d = hermitian_defect(hd.H); d > tol) throw validation_error("metric: H is not hermitian", d);
  if (smallest_eigenvalue_at_origin(hd.H) <= tol) throw precondition_error("metric: H(0) is not positive definite");
}

inline double metric_origin_deviation(const cjet_matrix& h) {
  double d = 0;
  for (int i = 0; i < h.rows(); ++i)
    for (int j = 0; j < h.cols(); ++j) d = std::max(d, std::abs(h(i, j).constant_term() - (i == j ? 1.0 : 0.0)));
  return d;
}

// z = 0 and two seeded points of norm 0.05.
inline std::vector<std::vector<cplx>> sample_points(int n, std::uint64_t seed = 2024) {
  std::vector<std::vector<cplx>> pts{std::vector<cplx>(n, cplx(0))};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> u;
  for (int p = 0; p < 2; ++p) {
    std::vector<cplx> z(n);
    double norm = 0;
    for (auto& x : z) x = {u(rng), u(rng)}, norm += std::norm(x);
    for (auto& x : z) x *= 0.05 / std::sqrt(norm);
    pts.push_back(z);
  }
  return pts;
}

inline cform metric_form(const cgeometry& g, const cjet_matrix& h) {
  const int n = g.n();
  cform w(n, g.order(), form_basis::frame, g.fr.id);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m) w.add((form_mask(1) << l) | (form_mask(1) << (n + m)), cplx(0, 0.5) * h(l, m));
  return w;
}

inline cform_matrix function_matrix(const cjet_matrix& m, form_basis basis, std::uint64_t id) {
  cform_matrix r(m.rows(), m.n(), m.order(), basis, id);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = cform::function(m(i, j), basis, id);
  return r;
}

inline cform_matrix apply_entrywise(form_operator op, const cform_matrix& a, const cgeometry& g) {
  return a.map([&](const cform& x) { return apply_operator(op, x, g); });
}

inline cform_matrix frame_d(const cform_matrix& a, const cgeometry& g) {
  return a.map([&](const cform& x) { return frame_d(x, g); });
}

// ---------------------------------------------------------------------------
// Connections on T^{1,0}: D sigma_l = sum_s A(s, l) sigma_s.

struct connection_forms {
  cform_matrix Aprime;
  cform_matrix Asecond;
  cform_matrix full() const { return Aprime + Asecond; }
};

// (A'')(k, j) = -sum_r U^k_{j,r} zetabar*_r
inline cform_matrix canonical_delbar_connection(const cgeometry& g) {
  const int n = g.n();
  cform_matrix a(n, n, g.order(), form_basis::frame, g.fr.id);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r) a(k, j).add(form_mask(1) << (n + r), -g.bc.U[k](j, r));
  return a;
}

// A' = conj(H)^{-1} (del conj(H) - conj(A'')^t conj(H))
inline connection_forms chern_connection(const cgeometry& g, const cjet_matrix& h) {
  connection_forms c;
  c.Asecond = canonical_delbar_connection(g);
  const cjet_matrix hc = h.conj();
  cjet_matrix hcinv;
  try {
    hcinv = inverse(hc);
  } catch (const singularity_error&) {
    throw precondition_error("metric singular at the origin");
  }
  auto dhc = apply_entrywise(form_operator::del, function_matrix(hc, form_basis::frame, g.fr.id), g);
  c.Aprime = hcinv * (dhc - c.Asecond.conj().transpose() * hc);
  return c;
}

// del h_lm - (A'^t H + H conj(A''))_lm
inline double hermitian_compatibility(const cgeometry& g, const cjet_matrix& h, const connection_forms& c) {
  auto lhs = apply_entrywise(form_operator::del, function_matrix(h, form_basis::frame, g.fr.id), g);
  auto rhs = c.Aprime.transpose() * h + h * c.Asecond.conj();
  return max_diff(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Curvature.

struct curvature_blocks {
  int n = 0;
  cform_matrix Theta20, Theta11, Theta02;
  // C^{j,k}_{row,col}: coefficient of zeta*_j ^ zetabar*_k in Theta11(row, col).
  cjet coefficient(int j, int k, int row, int col) const {
    return Theta11(row, col).coeff((form_mask(1) << j) | (form_mask(1) << (n + k)));
  }
  cplx at_origin(int j, int k, int row, int col) const { return coefficient(j, k, row, col).constant_term(); }
};

// Origin values indexed [((j*n + k)*n + row)*n + col].
struct curvature_origin {
  int n = 0;
  std::vector<cplx> c;
  cplx& operator()(int j, int k, int row, int col) { return c[((j * n + k) * n + row) * n + col]; }
  cplx operator()(int j, int k, int row, int col) const { return c[((j * n + k) * n + row) * n + col]; }
};

inline double max_diff(const curvature_origin& a, const curvature_origin& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.c.size(); ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
  return m;
}

inline curvature_blocks curvature(const cgeometry& g, const connection_forms& c) {
  const auto& a1 = c.Aprime;
  const auto& a2 = c.Asecond;
  auto op = [&](form_operator o, const cform_matrix& m) { return apply_entrywise(o, m, g); };
  curvature_blocks k;
  k.n = g.n();
  k.Theta20 = op(form_operator::del, a1) + wedge(a1, a1) - op(form_operator::theta, a2);
  k.Theta11 = op(form_operator::delbar, a1) + op(form_operator::del, a2) + wedge(a1, a2) + wedge(a2, a1);
  k.Theta02 = op(form_operator::delbar, a2) + wedge(a2, a2) - op(form_operator::thetabar, a1);
  return k;
}

// dA + A ^ A minus the sum of the three blocks.
inline double curvature_split_residual(const cgeometry& g, const connection_forms& c, const curvature_blocks& k) {
  auto a = c.full();
  auto total = frame_d(a, g) + wedge(a, a);
  return max_diff(total, k.Theta20 + k.Theta11 + k.Theta02);
}

inline curvature_origin curvature_at_origin(const curvature_blocks& k) {
  const int n = k.n;
  curvature_origin r{n, std::vector<cplx>(std::size_t(n) * n * n * n)};
  for (int j = 0; j < n; ++j)
    for (int q = 0; q < n; ++q)
      for (int m = 0; m < n; ++m)
        for (int l = 0; l < n; ++l) r(j, q, m, l) = k.at_origin(j, q, m, l);
  return r;
}

// max |conj(C^{j,k}_{l,m}) - C^{k,j}_{m,l}| at the origin
inline double curvature_hermitian_defect(const curvature_origin& c) {
  const int n = c.n;
  double d = 0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) d = std::max(d, std::abs(std::conj(c(j, k, l, m)) - c(k, j, m, l)));
  return d;
}

// Value at z of a frame 2-form on vectors with frame components u, v.
inline cplx evaluate_at(const cform& f, const std::vector<cplx>& z, const std::vector<cplx>& u,
                        const std::vector<cplx>& v) {
  cplx s = 0;
  for (auto& [m, c] : f.terms()) {
    if (formbits::degree(m) != 2) continue;
    auto b = formbits::bits(m);
    s += eval(c, z) * (u[b[0]] * v[b[1]] - u[b[1]] * v[b[0]]);
  }
  return s;
}

inline cplx evaluate_at_origin(const cform& f, const std::vector<cplx>& u, const std::vector<cplx>& v) {
  return evaluate_at(f, std::vector<cplx>(f.n(), cplx(0)), u, v);
}

struct curvature_symmetry {
  double hermitian = 0;  // h(i Theta11(xi, eta) s_k, s_l) vs conj(h(i Theta11(xi, eta) s_l, s_k))
  double omega_real = 0; // Im omega(C(xi, J xi) eta, eta)
  double omega_J = 0;    // |omega(C(xi, J xi) eta, J eta)|
};

// Value of a frame 2-form on vectors with constant frame components u, v, as a jet.
inline cjet pair_value(const cform& f, const std::vector<cplx>& u, const std::vector<cplx>& v) {
  cjet s(f.n(), f.order(), f.effective_order());
  for (auto& [m, c] : f.terms()) {
    if (formbits::degree(m) != 2) continue;
    auto b = formbits::bits(m);
    s += (u[b[0]] * v[b[1]] - u[b[1]] * v[b[0]]) * c;
  }
  return s;
}

// Pointwise checks on seeded real vectors.  Each identity is assembled as a
// jet first, so truncation is consistent, then evaluated at the sample points.
inline curvature_symmetry curvature_pointwise_symmetries(const cgeometry& g, const cjet_matrix& h,
                                                        const curvature_blocks& k, std::uint64_t seed = 5) {
  const int n = g.n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  auto real_vector = [&] {
    std::vector<cplx> x(2 * n);
    for (int a = 0; a < n; ++a) x[a] = {u(rng), u(rng)}, x[n + a] = std::conj(x[a]);
    return x;
  };
  auto J = [n](std::vector<cplx> x) {
    for (int a = 0; a < n; ++a) x[a] *= cplx(0, 1), x[n + a] *= cplx(0, -1);
    return x;
  };
  auto value = [&](const cform_matrix& t, const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cjet_matrix m(n, n, n, g.order());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = pair_value(t(i, j), a, b);
    return m;
  };
  const auto points = sample_points(n);
  auto worst = [&](const cjet& f) {
    double m = 0;
    for (auto& z : points) m = std::max(m, std::abs(eval(f, z)));
    return m;
  };
  const auto full = k.Theta20 + k.Theta11 + k.Theta02;
  curvature_symmetry r;
  for (int trial = 0; trial < 3; ++trial) {
    auto xi = real_vector(), eta = real_vector();
    auto t = value(k.Theta11, xi, eta);
    auto a = cplx(0, 1) * (t.transpose() * h);  // a(k, l) = h(i Theta s_k, s_l)
    for (int kk = 0; kk < n; ++kk)
      for (int l = 0; l < n; ++l) r.hermitian = std::max(r.hermitian, worst(a(kk, l) - conj(a(l, kk))));
    auto c = value(full, xi, J(xi));
    auto Jeta = J(eta);
    // omega(C eta, w) with C eta on T^{1,0} and its conjugate on T^{0,1}
    auto omega_with = [&](const std::vector<cplx>& w) {
      cjet s(n, g.order());
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          cjet cl(n, g.order()), cm(n, g.order());
          for (int j = 0; j < n; ++j) cl += eta[j] * c(l, j), cm += eta[j] * c(m, j);
          s += cplx(0, 0.5) * h(l, m) * (cl * std::conj(w[m]) - w[l] * conj(cm));
        }
      return s;
    };
    auto w1 = omega_with(eta);
    r.omega_real = std::max(r.omega_real, worst(cplx(0, 0.5) * (conj(w1) - w1)));
    r.omega_J = std::max(r.omega_J, worst(omega_with(Jeta)));
  }
  return r;
}

// Closed form at 0 for normal coordinates of order >= 2 and H(0) = I:
// C^{j,k}_{m,l}(0) = -H^{j,kbar}_{l,m} + 1/4 sum_r [4 H^j_{l,r} conj(H^k_{m,r})
//   + (conj(B^k_{m,r}) - conj(B^r_{m,k})) B^j_{r,l} + (B^j_{l,r} - B^r_{l,j}) conj(B^k_{r,m})]
inline curvature_origin curvature_origin_formula(const structure& s, const cjet_matrix& h, double tol = 1e-10) {
  const int n = s.n;
  if (s.order < 2) throw precondition_error("curvature formula needs order >= 2");
  require_adapted(s, tol);
  if (normal_form_violation(s, 2) > tol) throw precondition_error("coordinates are not normal of order 2");
  if (metric_origin_deviation(h) > tol) throw precondition_error("frame is not orthonormal at the origin");
  auto B = [&](int k, int l, int p) { return slot::lin(s.B(k, l), p); };
  auto H1 = [&](int l, int m, int p) { return slot::lin(h(l, m), p); };
  curvature_origin c{n, std::vector<cplx>(std::size_t(n) * n * n * n)};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m)
        for (int l = 0; l < n; ++l) {
          cplx sum = 0;
          for (int r = 0; r < n; ++r) {
            sum += 4.0 * H1(l, r, j) * std::conj(H1(m, r, k));
            sum += (std::conj(B(m, r, k)) - std::conj(B(m, k, r))) * B(r, l, j);
            sum += (B(l, r, j) - B(l, j, r)) * std::conj(B(r, m, k));
          }
          c(j, k, m, l) = -slot::mixed(h(l, m), j, k) + 0.25 * sum;
        }
  return c;
}

// At a point where H = I and A'' = 0:
// Theta11 = delbar del conj(H) - delbar conj(H) ^ del conj(H) + del A'' - delbar conj(A'')^t.
inline double pointwise_curvature_check(const cgeometry& g, const cjet_matrix& h, const connection_forms& c,
                                        const curvature_blocks& k, double tol = 1e-10) {
  if (metric_origin_deviation(h) > tol) throw precondition_error("frame is not orthonormal at the origin");
  if (max_abs(c.Asecond, 0) > tol) throw precondition_error("A'' does not vanish at the origin");
  auto op = [&](form_operator o, const cform_matrix& m) { return apply_entrywise(o, m, g); };
  auto hc = function_matrix(h.conj(), form_basis::frame, g.fr.id);
  auto rhs = op(form_operator::delbar, op(form_operator::del, hc)) -
             wedge(op(form_operator::delbar, hc), op(form_operator::del, hc)) + op(form_operator::del, c.Asecond) -
             op(form_operator::delbar, c.Asecond.conj().transpose());
  return max_diff(k.Theta11, rhs, 0);
}

// ---------------------------------------------------------------------------
// Connections in the complexified coordinate basis x_v (z_v for v < n, zbar after):
// D_{d/dx_v} d/dx_a = sum_c G[v](c, a) d/dx_c.

struct coordinate_connection {
  int n = 0;
  std::vector<cjet_matrix> G;

  vector_field<cplx> derivative(const vector_field<cplx>& x, const vector_field<cplx>& y) const {
    vector_field<cplx> r = apply_field_to(x, y);
    for (int v = 0; v < 2 * n; ++v) {
      if (x.c[v].is_zero()) continue;
      for (int a = 0; a < 2 * n; ++a) {
        if (y.c[a].is_zero()) continue;
        cjet xy = x.c[v] * y.c[a];
        for (int c = 0; c < 2 * n; ++c) r.c[c] += xy * G[v](c, a);
      }
    }
    return r;
  }

 private:
  static vector_field<cplx> apply_field_to(const vector_field<cplx>& x, const vector_field<cplx>& y) {
    vector_field<cplx> r;
    for (auto& f : y.c) r.c.push_back(acgeom::apply(x, f));
    return r;
  }
};

inline double max_diff(const coordinate_connection& a, const coordinate_connection& b, int deg = mono::max_order) {
  double m = 0;
  for (std::size_t v = 0; v < a.G.size(); ++v) m = std::max(m, max_diff(a.G[v], b.G[v], deg));
  return m;
}

// Real coordinate components: conj(G[v](c, a)) = G[vbar](cbar, abar).
inline double coordinate_reality_defect(const coordinate_connection& k) {
  const int n = k.n;
  auto bar = [n](int v) { return v < n ? v + n : v - n; };
  double d = 0;
  for (int v = 0; v < 2 * n; ++v)
    for (int c = 0; c < 2 * n; ++c)
      for (int a = 0; a < 2 * n; ++a) d = std::max(d, max_diff(conj(k.G[v](c, a)), k.G[bar(v)](bar(c), bar(a))));
  return d;
}

// omega(d/dx_a, d/dx_b)
inline cjet_matrix coordinate_symplectic_matrix(const cgeometry& g, const cjet_matrix& h) {
  const int n = g.n();
  auto w = to_coordinates(metric_form(g, h), g.fr);
  cjet_matrix W(2 * n, 2 * n, n, g.order());
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) W(a, b) = evaluate(w, {a, b});
  return W;
}

// g_ab = omega(d/dx_a, J d/dx_b)
inline cjet_matrix riemannian_metric(const cgeometry& g, const cjet_matrix& h) {
  return coordinate_symplectic_matrix(g, h) * complexified(g.st);
}

inline coordinate_connection levi_civita(const cgeometry& g, const cjet_matrix& h) {
  const int n = g.n();
  const int d = 2 * n;
  auto G = riemannian_metric(g, h);
  cjet_matrix Ginv;
  try {
    Ginv = inverse(G);
  } catch (const singularity_error&) {
    throw precondition_error("riemannian metric degenerate at the origin");
  }
  std::vector<cjet_matrix> dG;
  for (int v = 0; v < d; ++v) dG.push_back(G.map([v](const cjet& f) { return partial(f, v); }));
  coordinate_connection k{n, std::vector<cjet_matrix>(d, cjet_matrix(d, d, n, g.order()))};
  for (int v = 0; v < d; ++v)
    for (int a = 0; a < d; ++a) {
      std::vector<cjet> low;
      for (int e = 0; e < d; ++e) low.push_back(0.5 * (dG[v](a, e) + dG[a](v, e) - dG[e](v, a)));
      for (int c = 0; c < d; ++c) {
        cjet s(n, g.order());
        for (int e = 0; e < d; ++e) s += Ginv(c, e) * low[e];
        k.G[v](c, a) = s;
      }
    }
  return k;
}

// Frame connection diag(A, conj A) pushed to the coordinate basis: F (dF^{-1} + A_fr F^{-1}).
inline cform_matrix coordinate_connection_matrix(const cgeometry& g, const cform_matrix& a) {
  const int n = g.n();
  const int d = 2 * n;
  cform_matrix afr(d, n, g.order(), form_basis::frame, g.fr.id);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      afr(i, j) = a(i, j);
      afr(n + i, n + j) = conj(a(i, j));
    }
  auto x = (afr * g.fr.Finv).map([&](const cform& f) { return to_coordinates(f, g.fr); });
  auto dfinv = function_matrix(g.fr.Finv, form_basis::coordinate, 0).map([](const cform& f) { return coordinate_d(f); });
  return g.fr.F * (dfinv + x);
}

inline coordinate_connection coordinates_of(const cform_matrix& ac, int n) {
  const int d = 2 * n;
  coordinate_connection k{n, std::vector<cjet_matrix>(d, cjet_matrix(d, d, n, ac(0, 0).order()))};
  for (int v = 0; v < d; ++v)
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a) k.G[v](c, a) = ac(c, a).coeff(form_mask(1) << v);
  return k;
}

inline coordinate_connection chern_coordinate_connection(const cgeometry& g, const connection_forms& c) {
  return coordinates_of(coordinate_connection_matrix(g, c.full()), g.n());
}

// ---------------------------------------------------------------------------
// Chern / Levi-Civita decomposition in the frame e_a (zeta_a for a < n, zetabar after).

// t(a, b, c): e_c component of T(e_a, e_b).
struct frame_tensor {
  int dim = 0;
  std::vector<cjet> t;
  frame_tensor() = default;
  frame_tensor(int dim, int n, int order) : dim(dim), t(std::size_t(dim) * dim * dim, cjet(n, order)) {}
  cjet& operator()(int a, int b, int c) { return t[(std::size_t(a) * dim + b) * dim + c]; }
  const cjet& operator()(int a, int b, int c) const { return t[(std::size_t(a) * dim + b) * dim + c]; }
  friend frame_tensor operator+(frame_tensor x, const frame_tensor& y) {
    for (std::size_t i = 0; i < x.t.size(); ++i) x.t[i] += y.t[i];
    return x;
  }
  friend frame_tensor operator-(frame_tensor x, const frame_tensor& y) {
    for (std::size_t i = 0; i < x.t.size(); ++i) x.t[i] -= y.t[i];
    return x;
  }
  friend frame_tensor operator*(cplx c, frame_tensor x) {
    for (auto& f : x.t) f = c * f;
    return x;
  }
};

inline double max_abs(const frame_tensor& x, int deg = mono::max_order) {
  double m = 0;
  for (auto& f : x.t) m = std::max(m, max_abs(f, deg));
  return m;
}

inline double max_at(const frame_tensor& x, const std::vector<cplx>& z) {
  double m = 0;
  for (auto& f : x.t) m = std::max(m, std::abs(eval(f, z)));
  return m;
}

// Frame components of D_{e_a} e_b for a coordinate-basis connection.
inline frame_tensor frame_components(const cgeometry& g, const coordinate_connection& k) {
  const int d = 2 * g.n();
  frame_tensor t(d, g.n(), g.order());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      auto comps = g.fr.components(k.derivative(g.fr.field(a), g.fr.field(b)));
      for (int c = 0; c < d; ++c) t(a, b, c) = comps[c];
    }
  return t;
}

// D_{e_a} e_b = sum_s A_fr(s, b)(e_a) e_s with A_fr = diag(A, conj A).
inline frame_tensor frame_components(const cgeometry& g, const cform_matrix& a) {
  const int n = g.n();
  const int d = 2 * n;
  frame_tensor t(d, n, g.order());
  for (int b = 0; b < n; ++b)
    for (int s = 0; s < n; ++s) {
      auto f = a(s, b);
      auto fb = conj(f);
      for (int x = 0; x < d; ++x) {
        t(x, b, s) = evaluate(f, {x});
        t(x, n + b, n + s) = evaluate(fb, {x});
      }
    }
  return t;
}

inline frame_tensor frame_brackets(const cgeometry& g) {
  const int d = 2 * g.n();
  frame_tensor t(d, g.n(), g.order());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      auto comps = g.fr.components(bracket(g.fr.field(a), g.fr.field(b)));
      for (int c = 0; c < d; ++c) t(a, b, c) = comps[c];
    }
  return t;
}

struct chern_lc_decomposition {
  frame_tensor gamma, gamma20, gamma11, gamma02;
  frame_tensor delta;    // delta_J omega
  frame_tensor tau;      // tau^omega on (0,1) x (0,1), values in T^{1,0}
  frame_tensor N_omega;  // tau + conj(tau)
  frame_tensor chern, levi_civita;
  double d_omega = 0;              // max |d omega| coefficient
  double residual = 0;             // D - nabla - delta + N, coefficient-wise
  std::vector<double> residual_at; // same at the sample points
  double torsion_residual = 0;          // T_D - (gamma20 + gamma02) + N(a,b) - N(b,a)
  double torsion_residual_opposite = 0; // same with + (gamma20 + gamma02)
  double lc_torsion = 0;           // nabla_a e_b - nabla_b e_a - [e_a, e_b]
  double gamma02_max = 0;
  double delta_max = 0;
  double N_max = 0;
  double delta_reality = 0;        // conj(delta(a,b)) = delta(abar, bbar)
};

inline chern_lc_decomposition decompose_chern_lc(const cgeometry& g, const cjet_matrix& h) {
  const int n = g.n();
  const int d = 2 * n;
  const int order = g.order();
  auto bar = [n](int a) { return a < n ? a + n : a - n; };
  auto eps = [n](int a) { return a < n ? 1.0 : -1.0; };
  auto type10 = [n](int a) { return a < n; };
  chern_lc_decomposition r;

  auto w = metric_form(g, h);
  auto dw = frame_d(w, g);
  r.d_omega = max_abs(dw);
  cjet_matrix W(d, d, n, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) W(a, b) = evaluate(w, {a, b});
  auto Winv = inverse(W);

  // omega(gamma(a, b), e_c) = d omega(e_a, e_b, e_c)
  r.gamma = frame_tensor(d, n, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      std::vector<cjet> rhs;
      for (int c = 0; c < d; ++c) rhs.push_back(evaluate(dw, {a, b, c}));
      for (int e = 0; e < d; ++e) {
        cjet s(n, order);
        for (int c = 0; c < d; ++c) s += rhs[c] * Winv(c, e);
        r.gamma(a, b, e) = s;
      }
    }
  r.gamma20 = r.gamma02 = r.gamma11 = frame_tensor(d, n, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        if (type10(a) != type10(b)) r.gamma11(a, b, c) = r.gamma(a, b, c);
        else if (type10(a) == type10(c)) r.gamma20(a, b, c) = r.gamma(a, b, c);
        else r.gamma02(a, b, c) = r.gamma(a, b, c);
      }
  // delta = 1/2 {(gamma20 + gamma02)(a, b) + J gamma11(a, J b)}
  r.delta = frame_tensor(d, n, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        r.delta(a, b, c) = 0.5 * (r.gamma20(a, b, c) + r.gamma02(a, b, c)) -
                           (0.5 * eps(c) * eps(b)) * r.gamma11(a, b, c);

  // omega(tau(zb_a, zb_b), zb_c) = omega(zb_a, [zb_b, zb_c]^{1,0}) = sum_k N^k_{b,c} omega(zb_a, z_k)
  cjet_matrix Wb = W.block(0, n, n, n);
  auto Wbinv = inverse(Wb);
  r.tau = frame_tensor(d, n, order);
  r.N_omega = frame_tensor(d, n, order);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::vector<cjet> rhs;
      for (int c = 0; c < n; ++c) {
        cjet s(n, order);
        for (int k = 0; k < n; ++k) s += g.bc.N[k](b, c) * W(n + a, k);
        rhs.push_back(s);
      }
      for (int e = 0; e < n; ++e) {
        cjet s(n, order);
        for (int c = 0; c < n; ++c) s += rhs[c] * Wbinv(c, e);
        r.tau(n + a, n + b, e) = s;
        r.N_omega(n + a, n + b, e) = s;
        r.N_omega(a, b, n + e) = conj(s);
      }
    }

  r.chern = frame_components(g, chern_connection(g, h).full());
  r.levi_civita = frame_components(g, levi_civita(g, h));
  auto res = r.chern - r.levi_civita - r.delta + r.N_omega;
  r.residual = max_abs(res);
  for (auto& z : sample_points(n)) r.residual_at.push_back(max_at(res, z));

  auto br = frame_brackets(g);
  frame_tensor tors(d, n, order), tors_lc(d, n, order), gsum = r.gamma20 + r.gamma02, nswap(d, n, order);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        tors(a, b, c) = r.chern(a, b, c) - r.chern(b, a, c) - br(a, b, c);
        tors_lc(a, b, c) = r.levi_civita(a, b, c) - r.levi_civita(b, a, c) - br(a, b, c);
        nswap(a, b, c) = r.N_omega(a, b, c) - r.N_omega(b, a, c);
      }
  r.torsion_residual = max_abs(tors - gsum + nswap);
  r.torsion_residual_opposite = max_abs(tors + gsum + nswap);
  r.lc_torsion = max_abs(tors_lc);
  r.gamma02_max = max_abs(r.gamma02);
  r.delta_max = max_abs(r.delta);
  r.N_max = max_abs(r.N_omega);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        r.delta_reality = std::max(r.delta_reality, max_diff(conj(r.delta(a, b, c)), r.delta(bar(a), bar(b), bar(c))));
  return r;
}

// ---------------------------------------------------------------------------
// Special frames: sigma = e g, A -> g^{-1}(dg + A g), H -> g^t H conj(g).

struct bundle_frame {
  cjet_matrix g;  // accumulated change from the zeta frame
  cform_matrix A;
  cjet_matrix H;
};

inline bundle_frame change_bundle_frame(const cgeometry& geo, const bundle_frame& f, const cjet_matrix& g) {
  auto dg = frame_d(function_matrix(g, form_basis::frame, geo.fr.id), geo);
  auto ginv = inverse(g);
  return {f.g * g, ginv * (dg + f.A * g), g.transpose() * f.H * g.conj()};
}

struct special_frame_result {
  cjet_matrix g0, g1;
  bundle_frame start, stage1, sigma;
  double A_origin = 0;        // max |A_sigma(0)|
  double Asecond_origin = 0;  // max |A''_sigma(0)|
  double dAsecond_origin = 0; // max |del A''_sigma (0)|
  double off_pattern = 0;     // H_sigma - I: constant, linear, zz and zbar zbar slots
};

inline double metric_off_pattern(const cjet_matrix& h) {
  const int n = h.rows();
  double d = metric_origin_deviation(h);
  for (auto& f : h.entries())
    for (auto& [m, c] : f.terms()) {
      const int deg = mono::degree(m);
      if (deg == 1) d = std::max(d, std::abs(c));
      if (deg == 2) {
        int a = 0;
        for (int v = 0; v < n; ++v) a += mono::exponent(m, v);
        if (a != 1) d = std::max(d, std::abs(c));
      }
    }
  return d;
}

inline special_frame_result special_frame(const cgeometry& geo, const cjet_matrix& h, double tol = 1e-10) {
  const int n = geo.n();
  const int order = geo.order();
  require_adapted(geo.st, tol);
  if (metric_origin_deviation(h) > tol) throw precondition_error("special frame needs H(0) = I");
  special_frame_result r;
  r.start = {cjet_matrix::identity(n, n, order), chern_connection(geo, h).full(), h};
  // g0 = I - sum_p a_p(0) z_p - sum_p a'_p(0) zbar_p
  r.g0 = cjet_matrix::identity(n, n, order);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int v = 0; v < 2 * n; ++v) {
        cplx c = r.start.A(i, j).coeff(form_mask(1) << v).constant_term();
        if (c != 0.0) r.g0(i, j).add_term(mono::unit(v), -c);
      }
  r.stage1 = change_bundle_frame(geo, r.start, r.g0);
  // g1(m, l) = delta - H^{j,k}_{l,m} z_j z_k - (del A'')^{j,kbar}_{m,l}(0) z_j zbar_k
  auto dA2 = apply_entrywise(form_operator::del, r.stage1.A.component(0, 1), geo);
  r.g1 = cjet_matrix::identity(n, n, order);
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) {
      for (auto& [mono_key, c] : homogeneous(r.stage1.H(l, m), 2).terms()) {
        int a = 0;
        for (int v = 0; v < n; ++v) a += mono::exponent(mono_key, v);
        if (a == 2) r.g1(m, l).add_term(mono_key, -c);
      }
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          cplx c = dA2(m, l).coeff((form_mask(1) << j) | (form_mask(1) << (n + k))).constant_term();
          if (c != 0.0) r.g1(m, l).add_term(mono::unit(j) + mono::unit(n + k), -c);
        }
    }
  r.sigma = change_bundle_frame(geo, r.stage1, r.g1);
  r.A_origin = max_abs(r.sigma.A, 0);
  r.Asecond_origin = max_abs(r.sigma.A.component(0, 1), 0);
  r.dAsecond_origin = max_abs(apply_entrywise(form_operator::del, r.sigma.A.component(0, 1), geo), 0);
  r.off_pattern = metric_off_pattern(r.sigma.H);
  return r;
}

struct frame_curvature_report {
  double scalar = 0;      // C^h(xi sigma_k, eta sigma_l) vs delbar del h_kl + h(D sigma_k, D sigma_l)
  double plurisub = 0;    // i del delbar |sigma_k|^2 (xi, J xi) = -2 C^h + 2 |D_xi sigma_k|^2
};

// The two identities at 0 for a frame with A''(0) = 0, on seeded vectors.
inline frame_curvature_report frame_curvature_identities(const cgeometry& geo, const bundle_frame& f, std::uint64_t seed = 3,
                                      double tol = 1e-10) {
  const int n = geo.n();
  if (max_abs(f.A.component(0, 1), 0) > tol) throw precondition_error("sections are not holomorphic at 0");
  connection_forms c{f.A.component(1, 0), f.A.component(0, 1)};
  auto k = curvature(geo, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  auto H0 = f.H.constant_part();
  frame_curvature_report r;
  auto dform = [&](form_operator op, const cform& x) { return apply_operator(op, x, geo); };
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<cplx> x(n), y(n);
    for (auto& a : x) a = {u(rng), u(rng)};
    for (auto& a : y) a = {u(rng), u(rng)};
    std::vector<cplx> xi10(2 * n, 0), eta01(2 * n, 0), xr(2 * n), jxr(2 * n);
    for (int a = 0; a < n; ++a) {
      xi10[a] = x[a];
      eta01[n + a] = std::conj(y[a]);
      xr[a] = x[a], xr[n + a] = std::conj(x[a]);
      jxr[a] = cplx(0, 1) * x[a], jxr[n + a] = cplx(0, -1) * std::conj(x[a]);
    }
    // D_v sigma_k at 0 for v of type (1,0), as frame coefficients
    auto Dsec = [&](int kk, const std::vector<cplx>& v) {
      std::vector<cplx> out(n, 0);
      for (int s = 0; s < n; ++s)
        for (int a = 0; a < n; ++a) out[s] += v[a] * f.A(s, kk).coeff(form_mask(1) << a).constant_term();
      return out;
    };
    auto hpair = [&](const std::vector<cplx>& p, const std::vector<cplx>& q) {
      cplx s = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += p[i] * std::conj(q[j]) * H0(i, j);
      return s;
    };
    for (int kk = 0; kk < n; ++kk)
      for (int l = 0; l < n; ++l) {
        cplx lhs = 0;
        for (int m = 0; m < n; ++m) lhs += evaluate_at_origin(k.Theta11(m, kk), xi10, eta01) * H0(m, l);
        auto hkl = cform::function(f.H(kk, l), form_basis::frame, geo.fr.id);
        cplx rhs = evaluate_at_origin(dform(form_operator::delbar, dform(form_operator::del, hkl)), xi10, eta01) +
                   hpair(Dsec(kk, x), Dsec(l, y));
        r.scalar = std::max(r.scalar, std::abs(lhs - rhs));
      }
    for (int kk = 0; kk < n; ++kk) {
      auto hkk = cform::function(f.H(kk, kk), form_basis::frame, geo.fr.id);
      cplx lhs = cplx(0, 1) * evaluate_at_origin(dform(form_operator::del, dform(form_operator::delbar, hkk)), xr, jxr);
      std::vector<cplx> xi01(2 * n, 0);
      for (int a = 0; a < n; ++a) xi01[n + a] = std::conj(x[a]);
      cplx curv = 0;
      for (int m = 0; m < n; ++m) curv += evaluate_at_origin(k.Theta11(m, kk), xi10, xi01) * H0(m, kk);
      auto dx = Dsec(kk, x);
      cplx rhs = -2.0 * curv + 2.0 * hpair(dx, dx);
      r.plurisub = std::max(r.plurisub, std::abs(lhs - rhs));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Order-one expansion of the Chern connection in normal coordinates.

// Families indexed [((p*n + h)*n + k)*n + l].
struct asymptotic_coefficients {
  int n = 0;
  std::vector<cplx> H1;    // H^p_{l,k}: constant term of the dz_p coefficient of E_{k,l}
  std::vector<cplx> S_ph, S_phb, S_pbh, S_pbhb, Shat_ph;

  cplx& at(std::vector<cplx>& f, int p, int h, int k, int l) { return f[((p * n + h) * n + k) * n + l]; }
  cplx at(const std::vector<cplx>& f, int p, int h, int k, int l) const { return f[((p * n + h) * n + k) * n + l]; }
  static asymptotic_coefficients zero(int n) {
    const std::size_t sz = std::size_t(n) * n * n * n;
    return {n, std::vector<cplx>(sz), std::vector<cplx>(sz), std::vector<cplx>(sz), std::vector<cplx>(sz),
            std::vector<cplx>(sz), std::vector<cplx>(sz)};
  }
};

inline void require_normal_orthonormal(const structure& s, const cjet_matrix& h, double tol) {
  if (s.order < 2) throw precondition_error("needs order >= 2");
  require_adapted(s, tol);
  if (normal_form_violation(s, 2) > tol) throw precondition_error("coordinates are not normal of order 2");
  if (metric_origin_deviation(h) > tol) throw precondition_error("frame is not orthonormal at the origin");
}

// The closed forms for the S families.
inline asymptotic_coefficients connection_asymptotics(const structure& s, const cjet_matrix& h, double tol = 1e-10) {
  require_normal_orthonormal(s, h, tol);
  const int n = s.n;
  const cplx ih(0, 0.5);
  auto C = curvature_origin_formula(s, h, tol);
  auto B1 = [&](int k, int l, int p) { return slot::lin(s.B(k, l), p); };
  auto Bc1 = [&](int k, int l, int p) { return std::conj(B1(k, l, p)); };
  auto H1 = [&](int l, int m, int p) { return slot::lin(h(l, m), p); };
  auto r = asymptotic_coefficients::zero(n);
  for (int p = 0; p < n; ++p)
    for (int hh = 0; hh < n; ++hh)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          if (hh == 0) r.at(r.H1, p, 0, k, l) = H1(l, k, p);
          cplx pbh = 0, phb = 0, pbhb = 0, hat = 0, hh2 = 0;
          for (int j = 0; j < n; ++j) {
            pbh += (Bc1(k, p, j) - Bc1(k, j, p)) * B1(j, l, hh);
            phb += Bc1(k, hh, j) * B1(j, l, p);
            pbhb += H1(l, k, j) * Bc1(j, p, hh);
            hat += std::conj(H1(k, l, j)) * B1(j, p, hh);
            hh2 += H1(l, j, p) * H1(j, k, hh);
          }
          r.at(r.S_pbh, p, hh, k, l) = -0.25 * pbh;
          r.at(r.S_phb, p, hh, k, l) = -C(p, hh, k, l) - 0.25 * phb;
          r.at(r.S_pbhb, p, hh, k, l) = -ih * std::conj(slot::mixed(s.B(k, p), hh, l)) - ih * pbhb;
          r.at(r.Shat_ph, p, hh, k, l) = 2.0 * slot::holo2(h(l, k), p, hh) - ih * slot::mixed(s.B(l, p), hh, k) - ih * hat;
          r.at(r.S_ph, p, hh, k, l) = r.at(r.Shat_ph, p, hh, k, l) - hh2;
        }
  return r;
}

// The same families read off the coordinate Chern connection.
inline asymptotic_coefficients connection_expansion(const coordinate_connection& k) {
  const int n = k.n;
  auto r = asymptotic_coefficients::zero(n);
  for (int p = 0; p < n; ++p)
    for (int hh = 0; hh < n; ++hh)
      for (int kk = 0; kk < n; ++kk)
        for (int l = 0; l < n; ++l) {
          const auto& e = k.G[p](kk, l);
          const auto& eb = k.G[n + p](kk, l);
          if (hh == 0) r.at(r.H1, p, 0, kk, l) = e.constant_term();
          r.at(r.S_ph, p, hh, kk, l) = slot::lin(e, hh);
          r.at(r.S_phb, p, hh, kk, l) = slot::antilin(e, hh);
          r.at(r.S_pbh, p, hh, kk, l) = slot::lin(eb, hh);
          r.at(r.S_pbhb, p, hh, kk, l) = slot::antilin(eb, hh);
        }
  return r;
}

struct asymptotic_comparison {
  double H1 = 0, S_ph = 0, S_phb = 0, S_pbh = 0, S_pbhb = 0;
  double max() const { return std::max({H1, S_ph, S_phb, S_pbh, S_pbhb}); }
};

inline asymptotic_comparison compare(const asymptotic_coefficients& a, const asymptotic_coefficients& b) {
  auto d = [](const std::vector<cplx>& x, const std::vector<cplx>& y) {
    double m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
  };
  return {d(a.H1, b.H1), d(a.S_ph, b.S_ph), d(a.S_phb, b.S_phb), d(a.S_pbh, b.S_pbh), d(a.S_pbhb, b.S_pbhb)};
}

// Off-diagonal block of the coordinate connection: D d/dzbar_l has d/dz_k part
// -(i/2) d conj(jet_2 B_{k,l}) through coefficient degree one.
inline double off_diagonal_block_residual(const structure& s, const coordinate_connection& k) {
  const int n = s.n;
  double m = 0;
  for (int kk = 0; kk < n; ++kk)
    for (int l = 0; l < n; ++l) {
      auto bc = conj(truncate(s.B(kk, l), 2));
      for (int v = 0; v < 2 * n; ++v) m = std::max(m, max_diff(k.G[v](kk, n + l), cplx(0, -0.5) * partial(bc, v), 1));
    }
  return m;
}

// omega in the coordinate basis through coefficient degree two:
//   (i/2) sum [h_st - 1/4 sum_{l,m} h_lm conj(B_{l,t}) B_{m,s}] dz_s ^ dzbar_t
//   - 1/4 sum (h B)_{l,s} dz_l ^ dz_s  + conjugate
inline cform metric_in_coordinates(const structure& s, const cjet_matrix& h) {
  const int n = s.n;
  const int order = s.order;
  auto B = s.B.map([](const cjet& f) { return truncate(f, 2); });
  auto hb = (h * B).map([](const cjet& f) { return truncate(f, 2); });
  cform w(n, order, form_basis::coordinate);
  for (int si = 0; si < n; ++si)
    for (int t = 0; t < n; ++t) {
      cjet c(n, order);
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) c += h(l, m) * conj(B(l, t)) * B(m, si);
      w.add((form_mask(1) << si) | (form_mask(1) << (n + t)), cplx(0, 0.5) * (truncate(h(si, t), 2) - 0.25 * truncate(c, 2)));
    }
  cform two(n, order, form_basis::coordinate);
  for (int l = 0; l < n; ++l)
    for (int si = 0; si < n; ++si) {
      if (l == si) continue;
      const form_mask m = (form_mask(1) << l) | (form_mask(1) << si);
      two.add(m, l < si ? -0.25 * hb(l, si) : 0.25 * hb(l, si));
    }
  return w + two + conj(two);
}

// Same with the quadratic B correction weighted by c instead of -1/4.
inline cform metric_in_coordinates_weighted(const structure& s, const cjet_matrix& h, cplx weight) {
  const int n = s.n;
  cform w = metric_in_coordinates(s, h);
  for (int si = 0; si < n; ++si)
    for (int t = 0; t < n; ++t) {
      cjet c(n, s.order);
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) c += h(l, m) * conj(truncate(s.B(l, t), 2)) * truncate(s.B(m, si), 2);
      w.add((form_mask(1) << si) | (form_mask(1) << (n + t)), cplx(0, 0.5) * (weight + 0.25) * truncate(c, 2));
    }
  return w;
}

inline double metric_in_coordinates_residual(const cgeometry& g, const cjet_matrix& h, const cform& formula) {
  return max_diff(to_coordinates(metric_form(g, h), g.fr), formula, 2);
}

// ---------------------------------------------------------------------------
// Removing the linear metric terms when d omega = 0: Z_m = z_m + 1/2 sum H^p_{l,m} z_p z_l.

struct symplectic_normalization {
  std::vector<cjet> phi;
  structure st;
  cjet_matrix H;
  double symmetry_defect = 0;  // max |H^p_{l,m} - H^l_{p,m}|
  double linear_residual = 0;  // max linear coefficient of the new H
  double B_linear_change = 0;  // max change of the linear B coefficients
  bool identity = true;
};

inline double symplectic_symmetry_defect(const cjet_matrix& h) {
  const int n = h.rows();
  double d = 0;
  for (int p = 0; p < n; ++p)
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) d = std::max(d, std::abs(slot::lin(h(l, m), p) - slot::lin(h(p, m), l)));
  return d;
}

inline symplectic_normalization symplectic_normalize(const structure& s, const cjet_matrix& h, double tol = 1e-10) {
  require_normal_orthonormal(s, h, tol);
  const int n = s.n;
  const int order = s.order;
  symplectic_normalization r;
  r.symmetry_defect = symplectic_symmetry_defect(h);
  if (r.symmetry_defect > tol) throw precondition_error("d omega != 0: linear metric terms are not symmetric");
  const int porder = std::min(order + 1, mono::max_order);
  for (int m = 0; m < n; ++m) {
    cjet z = cjet::variable(n, porder, m);
    for (int p = 0; p < n; ++p)
      for (int l = 0; l < n; ++l) {
        cplx c = 0.5 * slot::lin(h(l, m), p);
        if (c != 0.0) z.add_term(mono::unit(p) + mono::unit(l), c), r.identity = false;
      }
    r.phi.push_back(z);
  }
  if (r.identity) {
    r.st = s;
    r.H = h;
    r.linear_residual = 0;
    for (auto& f : h.entries()) r.linear_residual = std::max(r.linear_residual, max_abs(homogeneous(f, 1)));
    return r;
  }
  r.st = transform_structure(s, r.phi);
  auto psi = series_inverse(r.phi, order);
  substitution<cplx> sub(psi, order);
  cjet_matrix G(n, n, n, order);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) G(k, l) = partial(with_order(psi[k], order), l);
  auto hz = compose(h, sub);
  r.H = G.transpose() * hz * G.conj();
  for (auto& f : r.H.entries()) r.linear_residual = std::max(r.linear_residual, max_abs(homogeneous(f, 1)));
  r.B_linear_change = max_diff(r.st.B.map([](const cjet& f) { return homogeneous(f, 1); }),
                               s.B.map([](const cjet& f) { return homogeneous(f, 1); }));
  return r;
}

}  // namespace acgeom
