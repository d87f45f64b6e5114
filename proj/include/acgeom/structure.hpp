#pragma once

#include "jet_matrix.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

namespace acgeom {

// J in the complexified coordinate frame (d/dz, d/dzbar):
//   J(d/dz_l) = sum_k A_{k,l} d/dz_k + B_{k,l} d/dzbar_k.
template <class S>
struct almost_complex_structure {
  int n = 0;
  int order = 0;
  jet_matrix<S> A;
  jet_matrix<S> B;

  int effective_order() const { return std::min(A.effective_order(), B.effective_order()); }
};

using structure = almost_complex_structure<cplx>;

template <class S>
almost_complex_structure<S> standard_structure(int n, int order) {
  almost_complex_structure<S> s{n, order, jet_matrix<S>(n, n, n, order), jet_matrix<S>(n, n, n, order)};
  for (int k = 0; k < n; ++k) s.A(k, k) = jet<S>::constant(n, order, simag<S>());
  return s;
}

// [[A, conj B], [B, conj A]]
template <class S>
jet_matrix<S> complexified(const almost_complex_structure<S>& s) {
  const int n = s.n;
  jet_matrix<S> m(2 * n, 2 * n, n, s.order);
  m.set_block(0, 0, s.A);
  m.set_block(0, n, s.B.conj());
  m.set_block(n, 0, s.B);
  m.set_block(n, n, s.A.conj());
  return m;
}

template <class S>
almost_complex_structure<S> from_complexified(const jet_matrix<S>& m) {
  const int n = m.rows() / 2;
  return {n, m.order(), m.block(0, 0, n, n), m.block(n, 0, n, n)};
}

struct structure_residual {
  double square = 0;   // A^2 + I + conj(B) B
  double commute = 0;  // conj(A) B + B A
  double value() const { return std::max(square, commute); }
};

template <class S>
structure_residual validate_structure(const almost_complex_structure<S>& s) {
  const auto id = jet_matrix<S>::identity(s.n, s.n, s.order);
  structure_residual r;
  r.square = max_abs(s.A * s.A + id + s.B.conj() * s.B);
  r.commute = max_abs(s.A.conj() * s.B + s.B * s.A);
  return r;
}

// Complexified vector field: components on d/dz_1..d/dz_n, d/dzbar_1..d/dzbar_n.
template <class S>
struct vector_field {
  std::vector<jet<S>> c;

  int n() const { return int(c.size()) / 2; }

  static vector_field zero(int n, int order) {
    return {std::vector<jet<S>>(2 * n, jet<S>(n, order))};
  }
  static vector_field coordinate(int n, int order, int a) {
    auto v = zero(n, order);
    v.c[a] = jet<S>::constant(n, order, sint<S>(1));
    return v;
  }
  // Real field sum_k w_k d/dz_k + conj.
  static vector_field real(const std::vector<jet<S>>& w) {
    vector_field v;
    v.c = w;
    for (auto& f : w) v.c.push_back(acgeom::conj(f));
    return v;
  }
  // Checks the conjugate-pair reality constraint.
  bool is_real(double tol = 1e-14) const {
    const int k = n();
    for (int i = 0; i < k; ++i)
      if (max_diff(acgeom::conj(c[i]), c[k + i]) > tol) return false;
    return true;
  }

  friend vector_field operator+(const vector_field& x, const vector_field& y) {
    vector_field r = x;
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = x.c[i] + y.c[i];
    return r;
  }
  friend vector_field operator-(const vector_field& x, const vector_field& y) {
    vector_field r = x;
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = x.c[i] - y.c[i];
    return r;
  }
  friend vector_field operator*(const jet<S>& f, const vector_field& x) {
    vector_field r = x;
    for (auto& g : r.c) g = f * g;
    return r;
  }
  friend vector_field operator*(const S& f, const vector_field& x) {
    vector_field r = x;
    for (auto& g : r.c) g = f * g;
    return r;
  }
};

template <class S>
vector_field<S> conj(const vector_field<S>& x) {
  const int n = x.n();
  vector_field<S> r = x;
  for (int k = 0; k < n; ++k) {
    r.c[k] = conj(x.c[n + k]);
    r.c[n + k] = conj(x.c[k]);
  }
  return r;
}

// Directional derivative X.f
template <class S>
jet<S> apply(const vector_field<S>& x, const jet<S>& f) {
  jet<S> r(f.n(), f.order(), f.effective_order() - 1);
  for (std::size_t v = 0; v < x.c.size(); ++v)
    if (!x.c[v].is_zero()) r += x.c[v] * partial(f, int(v));
  return r;
}

template <class S>
vector_field<S> bracket(const vector_field<S>& x, const vector_field<S>& y) {
  vector_field<S> r = x;
  for (std::size_t v = 0; v < x.c.size(); ++v) r.c[v] = apply(x, y.c[v]) - apply(y, x.c[v]);
  return r;
}

// Image under a 2n x 2n endomorphism in the coordinate frame.
template <class S>
vector_field<S> act(const jet_matrix<S>& m, const vector_field<S>& x) {
  vector_field<S> r = x;
  for (int i = 0; i < m.rows(); ++i) {
    jet<S> s(x.c[0].n(), x.c[0].order());
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x.c[j];
    r.c[i] = std::move(s);
  }
  return r;
}

template <class S>
double max_diff(const vector_field<S>& x, const vector_field<S>& y, int deg = mono::max_order) {
  double m = 0;
  for (std::size_t i = 0; i < x.c.size(); ++i) m = std::max(m, max_diff(x.c[i], y.c[i], deg));
  return m;
}

inline std::uint64_t next_frame_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}

// The (1,0)-frame zeta_k = (d/dz_k)^{1,0} and its conjugates, stored as the
// columns of F; the rows of F^{-1} are the dual coframe (zeta*, zetabar*).
template <class S>
struct frame {
  std::uint64_t id = 0;
  int n = 0;
  jet_matrix<S> F;
  jet_matrix<S> Finv;

  // Index a < n is zeta_{a+1}, a >= n is conj(zeta_{a-n+1}).
  vector_field<S> field(int a) const {
    vector_field<S> v;
    for (int i = 0; i < 2 * n; ++i) v.c.push_back(F(i, a));
    return v;
  }
  // Frame component a of a coordinate field (pairing with the dual coframe).
  jet<S> pair(int a, const vector_field<S>& x) const {
    jet<S> s(F.n(), F.order());
    for (int i = 0; i < 2 * n; ++i) s += Finv(a, i) * x.c[i];
    return s;
  }
  std::vector<jet<S>> components(const vector_field<S>& x) const {
    std::vector<jet<S>> out;
    for (int a = 0; a < 2 * n; ++a) out.push_back(pair(a, x));
    return out;
  }
  vector_field<S> combine(const std::vector<jet<S>>& comps) const {
    vector_field<S> r = vector_field<S>::zero(n, F.order());
    for (int a = 0; a < 2 * n; ++a)
      if (!comps[a].is_zero()) r = r + comps[a] * field(a);
    return r;
  }
  vector_field<S> project10(const vector_field<S>& x) const {
    auto c = components(x);
    for (int a = n; a < 2 * n; ++a) c[a] = jet<S>(F.n(), F.order());
    return combine(c);
  }
  vector_field<S> project01(const vector_field<S>& x) const {
    auto c = components(x);
    for (int a = 0; a < n; ++a) c[a] = jet<S>(F.n(), F.order());
    return combine(c);
  }
  int effective_order() const { return std::min(F.effective_order(), Finv.effective_order()); }
};

template <class S>
frame<S> frame_and_dual(const almost_complex_structure<S>& s) {
  const int n = s.n;
  const auto id = jet_matrix<S>::identity(n, n, s.order);
  const S half = sratio<S>(1, 2);
  const S ihalf = simag<S>() * half;
  jet_matrix<S> p = half * id - ihalf * s.A;  // d/dz part of zeta
  jet_matrix<S> q = (sint<S>(0) - ihalf) * s.B;  // d/dzbar part of zeta
  frame<S> f;
  f.id = next_frame_id();
  f.n = n;
  f.F = jet_matrix<S>(2 * n, 2 * n, n, s.order);
  f.F.set_block(0, 0, p);
  f.F.set_block(n, 0, q);
  f.F.set_block(0, n, q.conj());
  f.F.set_block(n, n, p.conj());
  try {
    f.Finv = inverse(f.F);
  } catch (const singularity_error& e) {
    throw structural_error(std::string("frame matrix singular at 0: ") + e.what());
  }
  return f;
}

// Coefficients of the frame brackets, each family indexed [k](j, r):
//   [zb_j, zb_r] = N^k zeta_k + M^k zb_k,   [z_j, zb_r] = U^k zeta_k + V^k zb_k,
//   [z_j, z_r]   = Mbar^k zeta_k + Nbar^k zb_k.
template <class S>
struct bracket_coefficients {
  std::vector<jet_matrix<S>> M, N, U, V, Mbar, Nbar;
  int effective_order() const {
    int e = mono::max_order;
    for (auto* fam : {&M, &N, &U, &V, &Mbar, &Nbar})
      for (auto& m : *fam) e = std::min(e, m.effective_order());
    return e;
  }
};

template <class S>
bracket_coefficients<S> compute_brackets(const frame<S>& fr) {
  const int n = fr.n;
  const int nv = fr.F.n();
  const int order = fr.F.order();
  bracket_coefficients<S> bc;
  for (auto* fam : {&bc.M, &bc.N, &bc.U, &bc.V, &bc.Mbar, &bc.Nbar})
    fam->assign(n, jet_matrix<S>(n, n, nv, order));
  std::vector<vector_field<S>> z, zb;
  for (int k = 0; k < n; ++k) z.push_back(fr.field(k)), zb.push_back(fr.field(n + k));
  auto zero_like = [&] { return jet<S>(nv, order, order - 1); };
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < n; ++r) {
      if (j < r) {
        auto c = fr.components(bracket(z[j], z[r]));
        auto cb = fr.components(bracket(zb[j], zb[r]));
        for (int k = 0; k < n; ++k) {
          bc.Mbar[k](j, r) = c[k], bc.Mbar[k](r, j) = -c[k];
          bc.Nbar[k](j, r) = c[n + k], bc.Nbar[k](r, j) = -c[n + k];
          bc.N[k](j, r) = cb[k], bc.N[k](r, j) = -cb[k];
          bc.M[k](j, r) = cb[n + k], bc.M[k](r, j) = -cb[n + k];
        }
      } else if (j == r) {
        for (int k = 0; k < n; ++k)
          bc.Mbar[k](j, j) = bc.Nbar[k](j, j) = bc.N[k](j, j) = bc.M[k](j, j) = zero_like();
      }
      auto u = fr.components(bracket(z[j], zb[r]));
      for (int k = 0; k < n; ++k) bc.U[k](j, r) = u[k], bc.V[k](j, r) = u[n + k];
    }
  return bc;
}

// Everything derived from a structure that the operators need.
template <class S>
struct geometry {
  almost_complex_structure<S> st;
  frame<S> fr;
  bracket_coefficients<S> bc;
  int n() const { return st.n; }
  int order() const { return st.order; }
};

template <class S>
std::shared_ptr<const geometry<S>> make_geometry(const almost_complex_structure<S>& s) {
  auto g = std::make_shared<geometry<S>>();
  g->st = s;
  g->fr = frame_and_dual(s);
  g->bc = compute_brackets(g->fr);
  return g;
}

// Components Nbar^r_{k,l} of the torsion tau(zeta_k, zeta_l) = sum_r Nbar^r_{k,l} zb_r.
template <class S>
struct torsion_tensor {
  std::vector<jet_matrix<S>> Nbar;  // [r](k, l)

  double max_coefficient() const {
    double m = 0;
    for (auto& x : Nbar) m = std::max(m, max_abs(x));
    return m;
  }
  double max_coefficient_through(int deg) const {
    double m = 0;
    for (auto& x : Nbar) m = std::max(m, max_abs(x, deg));
    return m;
  }
};

template <class S>
torsion_tensor<S> compute_torsion(const geometry<S>& g) {
  return {g.bc.Nbar};
}

// tau evaluated on two coordinate fields, as a coordinate vector field.
template <class S>
vector_field<S> torsion_on(const geometry<S>& g, const torsion_tensor<S>& t, int a, int b) {
  const int n = g.n();
  std::vector<jet<S>> comps(2 * n, jet<S>(n, g.order()));
  for (int r = 0; r < n; ++r) {
    jet<S> s(n, g.order());
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        if (k != l) s += g.fr.Finv(k, a) * g.fr.Finv(l, b) * t.Nbar[r](k, l);
    comps[n + r] = std::move(s);
  }
  return g.fr.combine(comps);
}

// Max deviation between N_J = tau + conj(tau) and the bracket identity
// 4 N_J(x, y) = [x,y] + J[x,Jy] + J[Jx,y] - [Jx,Jy] on coordinate fields.
template <class S>
double nijenhuis_check(const geometry<S>& g, const torsion_tensor<S>& t) {
  const int n = g.n();
  const int order = g.order();
  const auto m = complexified(g.st);
  auto swap_index = [n](int a) { return a < n ? a + n : a - n; };
  double dev = 0;
  for (int a = 0; a < 2 * n; ++a)
    for (int b = a + 1; b < 2 * n; ++b) {
      auto x = vector_field<S>::coordinate(n, order, a);
      auto y = vector_field<S>::coordinate(n, order, b);
      auto jx = act(m, x);
      auto jy = act(m, y);
      auto rhs = bracket(x, y) + act(m, bracket(x, jy)) + act(m, bracket(jx, y)) - bracket(jx, jy);
      rhs = sratio<S>(1, 4) * rhs;
      auto lhs = torsion_on(g, t, a, b) + conj(torsion_on(g, t, swap_index(a), swap_index(b)));
      dev = std::max(dev, max_diff(lhs, rhs));
    }
  return dev;
}

// Series inverse of a coordinate change z -> Phi(z) (with Phi(0) = 0).
template <class S>
std::vector<jet<S>> series_inverse(const std::vector<jet<S>>& phi, int order) {
  const int n = int(phi.size());
  std::vector<jet<S>> full;
  for (auto& p : phi) full.push_back(with_order(p, order));
  for (int k = 0; k < n; ++k) full.push_back(conj(full[k]));
  dense_matrix<S> d(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a)
    for (int v = 0; v < 2 * n; ++v) d(a, v) = full[a].coeff(mono::unit(v));
  dense_matrix<S> dinv;
  try {
    dinv = inverse(d);
  } catch (const singularity_error&) {
    throw precondition_error("coordinate change has singular Jacobian at 0");
  }
  std::vector<jet<S>> rest;
  for (int a = 0; a < 2 * n; ++a) {
    jet<S> r = full[a];
    for (int v = 0; v < 2 * n; ++v) r.add_term(mono::unit(v), sint<S>(0) - d(a, v));
    rest.push_back(std::move(r));
  }
  std::vector<jet<S>> vars;
  for (int v = 0; v < 2 * n; ++v) vars.push_back(jet<S>::variable(n, order, v));
  auto solve = [&](const std::vector<jet<S>>& rhs) {
    std::vector<jet<S>> out;
    for (int k = 0; k < n; ++k) {
      jet<S> s(n, order);
      for (int b = 0; b < 2 * n; ++b) s += dinv(k, b) * rhs[b];
      out.push_back(std::move(s));
    }
    return out;
  };
  std::vector<jet<S>> psi = solve(vars);
  for (int it = 1; it < order; ++it) {
    substitution<S> sub(psi, order);
    std::vector<jet<S>> rhs;
    for (int b = 0; b < 2 * n; ++b) rhs.push_back(vars[b] - sub.apply(rest[b]));
    psi = solve(rhs);
  }
  return psi;
}

// New structure after Z = Phi(z): M(Z) = dPhi M(z) dPhi^{-1}, re-expressed in Z.
template <class S>
almost_complex_structure<S> transform_structure(const almost_complex_structure<S>& s,
                                                const std::vector<jet<S>>& phi) {
  const int n = s.n;
  const int order = s.order;
  if (int(phi.size()) != n) throw structural_error("transform: need n coordinate jets");
  // Phi is a polynomial map; embedding it one order higher keeps dPhi exact.
  const int porder = std::min(order + 1, mono::max_order);
  std::vector<jet<S>> full;
  for (auto& p : phi) full.push_back(with_order(p, porder, true));
  for (int k = 0; k < n; ++k) full.push_back(conj(full[k]));
  jet_matrix<S> jac(2 * n, 2 * n, n, order);
  for (int a = 0; a < 2 * n; ++a)
    for (int v = 0; v < 2 * n; ++v) jac(a, v) = with_order(partial(full[a], v), order);
  jet_matrix<S> jinv;
  try {
    jinv = inverse(jac);
  } catch (const singularity_error&) {
    throw precondition_error("coordinate change has singular Jacobian at 0");
  }
  jet_matrix<S> mz = jac * complexified(s) * jinv;
  substitution<S> sub(series_inverse(phi, order), order);
  return from_complexified(compose(mz, sub));
}

template <class S>
std::vector<jet<S>> identity_change(int n, int order) {
  std::vector<jet<S>> phi;
  for (int k = 0; k < n; ++k) phi.push_back(jet<S>::variable(n, order, k));
  return phi;
}

template <class S>
struct adapted_structure {
  almost_complex_structure<S> st;
  std::vector<jet<S>> phi;  // the linear change z -> Z
};

// Linear change of coordinates whose d/dZ_k span the +i eigenspace of J(0).
template <class S>
adapted_structure<S> adapt_linear(const almost_complex_structure<S>& s) {
  const int n = s.n;
  dense_matrix<S> m0 = complexified(s).constant_part();
  dense_matrix<S> proj(2 * n, 2 * n);
  const S ihalf = simag<S>() * sratio<S>(1, 2);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j)
      proj(i, j) = (i == j ? sratio<S>(1, 2) : sint<S>(0)) - ihalf * m0(i, j);
  // Gram-Schmidt over the projector columns; division-only so it stays exact.
  std::vector<std::vector<S>> basis;
  auto inner = [&](const std::vector<S>& u, const std::vector<S>& v) {
    S acc = sint<S>(0);
    for (int i = 0; i < 2 * n; ++i) acc += sconj(u[i]) * v[i];
    return acc;
  };
  for (int j = 0; j < 2 * n && int(basis.size()) < n; ++j) {
    std::vector<S> v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v[i] = proj(i, j);
    for (auto& u : basis) {
      S c = inner(u, v) / inner(u, u);
      for (int i = 0; i < 2 * n; ++i) v[i] -= c * u[i];
    }
    double nv = smag(inner(v, v));
    bool keep = scalar_traits<S>::exact ? !scalar_traits<S>::is_zero(inner(v, v)) : nv > 1e-20;
    if (keep) basis.push_back(v);
  }
  if (int(basis.size()) != n) throw structural_error("adapt_linear: +i eigenspace has wrong dimension");
  dense_matrix<S> w(2 * n, 2 * n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < 2 * n; ++i) {
      w(i, k) = basis[k][i];
      w(i < n ? i + n : i - n, n + k) = sconj(basis[k][i]);
    }
  dense_matrix<S> dphi = inverse(w);
  std::vector<jet<S>> phi;
  for (int k = 0; k < n; ++k) {
    jet<S> p(n, s.order);
    for (int v = 0; v < 2 * n; ++v) p.add_term(mono::unit(v), dphi(k, v));
    phi.push_back(std::move(p));
  }
  return {transform_structure(s, phi), phi};
}

// J = (I+P) J0 (I+P)^{-1} with P made real by conjugate symmetrization.
template <class S>
almost_complex_structure<S> structure_from_deformation(const jet_matrix<S>& p) {
  const int n2 = p.rows();
  const int n = n2 / 2;
  if (p.cols() != n2 || n2 % 2 != 0) throw structural_error("deformation must be 2n x 2n");
  auto sigma = [n](int a) { return a < n ? a + n : a - n; };
  jet_matrix<S> ps = p;
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) ps(i, j) = sratio<S>(1, 2) * (p(i, j) + conj(p(sigma(i), sigma(j))));
  auto p0 = ps.constant_part();
  for (int i = 0; i < n2; ++i) {
    double row = 0;
    for (int j = 0; j < n2; ++j) row += smag(p0(i, j));
    if (row >= 1.0) throw precondition_error("deformation too large: I+P may be singular");
  }
  auto ip = jet_matrix<S>::identity(n2, n, p.order()) + ps;
  auto j0 = complexified(standard_structure<S>(n, p.order()));
  return from_complexified(ip * j0 * inverse(ip));
}

}  // namespace acgeom
