#pragma once

#include "structure.hpp"

#include <map>
#include <vector>

namespace acgeom {

// Coefficient matrix of z^alpha zbar^beta in a jet matrix.
template <class S>
dense_matrix<S> coefficient(const jet_matrix<S>& m, monomial key) {
  dense_matrix<S> d(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) d(i, j) = m(i, j).coeff(key);
  return d;
}

template <class S>
dense_matrix<S> coefficient(const jet_matrix<S>& m, const std::vector<int>& alpha, const std::vector<int>& beta) {
  return coefficient(m, mono::make(alpha, beta));
}

namespace detail {

template <class S>
dense_matrix<S> dense_add(dense_matrix<S> a, const dense_matrix<S>& b) {
  for (std::size_t i = 0; i < a.a.size(); ++i) a.a[i] += b.a[i];
  return a;
}

template <class S>
dense_matrix<S> dense_scale(dense_matrix<S> a, const S& c) {
  for (auto& x : a.a) x = c * x;
  return a;
}

template <class S>
bool dense_is_zero(const dense_matrix<S>& a) {
  for (auto& x : a.a)
    if (!scalar_traits<S>::is_zero(x)) return false;
  return true;
}

}  // namespace detail

// Enumerates the ordered products conj(B)^{lambda_r,mu_r} B^{rho_r,gamma_r}
// over k slots.  products(k) maps the total monomial z^alpha zbar^beta to the
// summed matrix; tables are built slot by slot and memoized.
template <class S>
class closed_form_A_enumerator {
 public:
  closed_form_A_enumerator(const jet_matrix<S>& b, int max_degree) : n_(b.rows()), max_degree_(max_degree) {
    std::map<monomial, dense_matrix<S>> fam;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (auto& [m, c] : b(i, j).terms()) {
          if (mono::degree(m) == 0) continue;
          bool holo = false;
          for (int k = 0; k < n_; ++k) holo = holo || mono::exponent(m, k) > 0;
          if (!holo) continue;  // B^{0,beta} := 0
          auto it = fam.try_emplace(m, n_, n_).first;
          it->second(i, j) = c;
        }
    std::map<monomial, dense_matrix<S>> one;
    for (auto& [ml, bl] : fam)
      for (auto& [mr, br] : fam) {
        monomial m = mono::conj(ml, n_) + mr;
        if (mono::degree(m) > max_degree_) continue;
        dense_matrix<S> cb(n_, n_);
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) cb(i, j) = sconj(bl(i, j));
        auto p = cb * br;
        auto it = one.find(m);
        if (it == one.end()) one.emplace(m, p);
        else it->second = detail::dense_add(it->second, p);
      }
    tables_.push_back({});
    tables_.push_back(std::move(one));
  }

  const std::map<monomial, dense_matrix<S>>& products(int k) {
    while (int(tables_.size()) <= k) {
      const auto& prev = tables_.back();
      const auto& one = tables_[1];
      std::map<monomial, dense_matrix<S>> next;
      for (auto& [m1, p1] : one)
        for (auto& [m2, p2] : prev) {
          monomial m = m1 + m2;
          if (mono::degree(m) > max_degree_) continue;
          auto p = p1 * p2;
          auto it = next.find(m);
          if (it == next.end()) next.emplace(m, p);
          else it->second = detail::dense_add(it->second, p);
        }
      tables_.push_back(std::move(next));
    }
    return tables_[k];
  }

  // A^{alpha,beta} = sum_k (-4)^{-(k-1)} products(k)[alpha,beta], k <= [|alpha+beta|/2].
  dense_matrix<S> coefficient(monomial m) {
    dense_matrix<S> a(n_, n_);
    const int d = mono::degree(m);
    S w = sint<S>(1);
    for (int k = 1; k <= d / 2; ++k) {
      auto& t = products(k);
      auto it = t.find(m);
      if (it != t.end()) a = detail::dense_add(a, detail::dense_scale(it->second, w));
      w = w * sratio<S>(-1, 4);
    }
    return a;
  }

 private:
  int n_;
  int max_degree_;
  std::vector<std::map<monomial, dense_matrix<S>>> tables_;
};

template <class S>
dense_matrix<S> closed_form_A_coefficient(const jet_matrix<S>& b, const std::vector<int>& alpha,
                                  const std::vector<int>& beta) {
  monomial m = mono::make(alpha, beta);
  closed_form_A_enumerator<S> e(b, mono::degree(m));
  return e.coefficient(m);
}

// A(z) = iI + (i/2) sum A^{alpha,beta} z^alpha zbar^beta with A^{alpha,beta} from
// the closed formula.  The formula matches the exact solution of
// A^2 = -I - conj(B) B only through total degree 5 (the k = 3 weight differs
// from the true series), so higher orders are rejected.
template <class S>
jet_matrix<S> A_from_B(const jet_matrix<S>& b) {
  const int n = b.rows();
  const int order = b.order();
  const int top = std::min(order, b.effective_order());
  if (top > 5) throw precondition_error("closed formula for A is only valid through degree 5");
  closed_form_A_enumerator<S> e(b, top);
  jet_matrix<S> a(n, n, n, order);
  const S ihalf = simag<S>() * sratio<S>(1, 2);
  for (int i = 0; i < n; ++i) a(i, i) = jet<S>::constant(n, order, simag<S>());
  for (int d = 2; d <= top; ++d)
    for (monomial m : mono::of_degree(n, d)) {
      auto c = e.coefficient(m);
      if (detail::dense_is_zero(c)) continue;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j).add_term(m, ihalf * c(i, j));
    }
  return a.limit(b.effective_order());
}

template <class S>
almost_complex_structure<S> structure_from_B(const jet_matrix<S>& b) {
  return {b.rows(), b.order(), A_from_B(b), b};
}

// Largest |B^{alpha,beta}_{k,l}| that breaks the normal pattern
// (B^{alpha,beta}_{k,l} = 0 for l >= l(alpha)), degrees <= max_degree.
template <class S>
double normal_form_violation(const almost_complex_structure<S>& s, int max_degree) {
  const int n = s.n;
  const int lim = std::min(max_degree, s.B.effective_order());
  double v = 0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (auto& [m, c] : s.B(k, l).terms()) {
        if (mono::degree(m) > lim) continue;
        if (l + 1 >= mono::last_index(mono::alpha(m, n))) v = std::max(v, smag(c));
      }
  return v;
}

template <class S>
void require_adapted(const almost_complex_structure<S>& s, double tol = 1e-12) {
  const int n = s.n;
  double dev = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx a = to_cplx(s.A(i, j).constant_term()) - (i == j ? cplx(0, 1) : cplx(0));
      dev = std::max({dev, std::abs(a), smag(s.B(i, j).constant_term())});
    }
  if (dev > tol) throw precondition_error("structure is not adapted at the origin");
}

// Stage-m coordinate change killing the degree-m non-normal part of B:
//   Z_k = z_k - sum i conj(B^{alpha - delta_l, beta}_{k,l}) / (2 alpha_l) z^beta zbar^alpha,
// l = l(alpha), |alpha + beta| = m + 1.  Built one order above s.order so
// that its top-degree terms survive.
template <class S>
std::vector<jet<S>> normalizing_change(const almost_complex_structure<S>& s, int m) {
  const int n = s.n;
  const int porder = std::min(s.order + 1, mono::max_order);
  std::vector<jet<S>> phi;
  for (int k = 0; k < n; ++k) phi.push_back(jet<S>::variable(n, porder, k));
  const S ihalf = simag<S>() * sratio<S>(1, 2);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (auto& [mb, c] : s.B(k, l).terms()) {
        if (mono::degree(mb) != m) continue;
        auto a = mono::alpha(mb, n);
        auto b = mono::beta(mb, n);
        if (l + 1 < mono::last_index(a)) continue;  // already normal
        a[l] += 1;
        // z^beta zbar^alpha
        phi[k].add_term(mono::make(b, a), (sint<S>(0) - ihalf) * sconj(c) * sratio<S>(1, a[l]));
      }
  return phi;
}

template <class S>
struct normal_coordinate_result {
  std::vector<std::vector<jet<S>>> stages;  // Phi_1 .. Phi_N
  std::vector<jet<S>> phi;                  // Phi_N o ... o Phi_1
  almost_complex_structure<S> st;
  std::vector<double> stage_violation;      // after each stage, degrees <= m
  bool identity = true;                     // every stage was the identity

  jet_matrix<S> B_coeffs() const { return st.B; }
  // (i/2)-normalized A family: (A - iI) / (i/2).
  jet_matrix<S> A_coeffs() const {
    auto a = st.A - simag<S>() * jet_matrix<S>::identity(st.n, st.n, st.order);
    return (sint<S>(0) - simag<S>() * sint<S>(2)) * a;
  }
};

template <class S>
normal_coordinate_result<S> normalize_to_order(const almost_complex_structure<S>& s, int N) {
  require_adapted(s);
  if (N < 1 || N > s.order) throw precondition_error("normalization order out of range");
  normal_coordinate_result<S> r;
  r.st = s;
  const int porder = std::min(s.order + 1, mono::max_order);
  for (int k = 0; k < s.n; ++k) r.phi.push_back(jet<S>::variable(s.n, porder, k));
  for (int m = 1; m <= N; ++m) {
    auto phi = normalizing_change(r.st, m);
    bool ident = true;
    for (int k = 0; k < s.n; ++k) ident = ident && phi[k] == jet<S>::variable(s.n, porder, k);
    if (!ident) {
      r.identity = false;
      r.st = transform_structure(r.st, phi);
      std::vector<jet<S>> acc;
      for (auto& p : phi) acc.push_back(compose(p, r.phi));
      r.phi = std::move(acc);
    }
    r.stages.push_back(std::move(phi));
    r.stage_violation.push_back(normal_form_violation(r.st, m));
  }
  return r;
}

// Closed-form order-1 jet of Nbar^r_{k,l} (k < l) in normal coordinates of
// order >= 3, indexed [r](k, l) and antisymmetric in (k, l).
//   Nbar^r_{k,l} = (i/2) B^l_{r,k} + (i/2) sum_s [2 (B^{l,s}_{r,k} - B^{k,s}_{r,l}) z_s + B^{l,sbar}_{r,k} zbar_s]
// where B^{l,s} is the symmetric half of the z_l z_s coefficient.
template <class S>
std::vector<jet_matrix<S>> torsion_jet_normal(const almost_complex_structure<S>& s, double tol = 1e-10) {
  const int n = s.n;
  if (s.order < 2) throw precondition_error("torsion jet needs order >= 2");
  require_adapted(s);
  if (normal_form_violation(s, std::min(3, s.order)) > tol)
    throw precondition_error("structure is not in normal form");
  auto lin = [&](int r, int k, int l) { return s.B(r, k).coeff(mono::unit(l)); };
  auto quad = [&](int r, int k, int a, int b) {
    S c = s.B(r, k).coeff(mono::unit(a) + mono::unit(b));
    return a == b ? c : sratio<S>(1, 2) * c;
  };
  auto mixed = [&](int r, int k, int a, int b) { return s.B(r, k).coeff(mono::unit(a) + mono::unit(n + b)); };
  const S ihalf = simag<S>() * sratio<S>(1, 2);
  std::vector<jet_matrix<S>> out(n, jet_matrix<S>(n, n, n, s.order));
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        jet<S> f(n, s.order, 1);
        f.add_term(0, ihalf * lin(r, k, l));
        for (int q = 0; q < n; ++q) {
          f.add_term(mono::unit(q), ihalf * sint<S>(2) * (quad(r, k, l, q) - quad(r, l, k, q)));
          f.add_term(mono::unit(n + q), ihalf * mixed(r, k, l, q));
        }
        out[r](k, l) = f;
        out[r](l, k) = -f;
      }
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) out[r](k, k) = jet<S>(n, s.order, 1);
  return out;
}

// "The k-jet of the torsion vanishes iff B vanishes through degree k+1"
// (k = 0, 1), evaluated three ways.
struct torsion_jet_diagnostic {
  int k = 0;
  bool torsion_vanishes = false;  // frame-bracket torsion, degrees <= k
  bool b_vanishes = false;        // B coefficients, degrees <= k+1
  bool argument_vanishes = false; // T^{k,l,s}_r reconstruction
  bool consistent() const { return torsion_vanishes == b_vanishes && b_vanishes == argument_vanishes; }
};

template <class S>
torsion_jet_diagnostic diagnose_torsion_jet(const almost_complex_structure<S>& s, int k, double tol = 1e-12) {
  if (k != 0 && k != 1) throw precondition_error("torsion jet diagnostic only for k = 0, 1");
  const int n = s.n;
  torsion_jet_diagnostic d;
  d.k = k;
  auto g = make_geometry(s);
  d.torsion_vanishes = compute_torsion(*g).max_coefficient_through(k) <= tol;
  double bmax = 0;
  for (auto& f : s.B.entries()) bmax = std::max(bmax, max_abs(f, k + 1));
  d.b_vanishes = bmax <= tol;

  // From the closed-form jet: B^l_{r,k} (k<l) and, for k = 1, the T and
  // B^{l,sbar} coefficients.  Normality then forces the remaining entries.
  auto nb = torsion_jet_normal(s);
  bool zero = true;
  for (int r = 0; r < n; ++r)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) zero = zero && smag(nb[r](a, b).constant_term()) <= tol;
  // B^l_{r,k} = 0 for l <= k by normality, so the k<l family is all of B^l.
  if (zero && k == 1) {
    auto quad = [&](int r, int c, int a, int b) {
      S v = s.B(r, c).coeff(mono::unit(a) + mono::unit(b));
      return a == b ? v : sratio<S>(1, 2) * v;
    };
    // T^{a,b,q}_r := B^{b,q}_{r,a} - B^{a,q}_{r,b}
    for (int r = 0; r < n && zero; ++r)
      for (int a = 0; a < n && zero; ++a)
        for (int b = 0; b < n && zero; ++b)
          for (int q = 0; q < n && zero; ++q) {
            if (a == b) continue;
            S t = quad(r, a, b, q) - quad(r, b, a, q);
            zero = smag(t) <= tol;
          }
    // If all T vanish: when a or b is max{a,b,q} the normal pattern gives
    // B^{b,q}_{r,a} = B^{a,q}_{r,b} = 0; otherwise q is the max and
    // T^{a,q,b}_r = B^{q,b}_{r,a} = B^{b,q}_{r,a}.  Either way B^{b,q}_{r,a} = 0,
    // which the vanishing of every T already encodes.
    for (int r = 0; r < n && zero; ++r)
      for (int a = 0; a < n && zero; ++a)
        for (int b = a + 1; b < n && zero; ++b)
          for (int q = 0; q < n && zero; ++q) zero = smag(s.B(r, a).coeff(mono::unit(b) + mono::unit(n + q))) <= tol;
  }
  d.argument_vanishes = zero;
  return d;
}

struct holomorphic_invariance_report {
  double deviation = 0;  // max change of B coefficients of degree <= N
  double violation = 0;  // normal-pattern violation after the change
};

// Z_k = z_k + sum_{|alpha| = N+1} C^k_alpha z^alpha; `change` holds the
// added degree-(N+1) holomorphic polynomials, one per coordinate.
template <class S>
holomorphic_invariance_report verify_holomorphic_invariance(const almost_complex_structure<S>& s, int N,
                                                            const std::vector<jet<S>>& change) {
  const int n = s.n;
  const int porder = std::min(s.order + 1, mono::max_order);
  std::vector<jet<S>> phi;
  for (int k = 0; k < n; ++k) {
    for (auto& [m, c] : change[k].terms()) {
      for (int v = n; v < 2 * n; ++v)
        if (mono::exponent(m, v) != 0) throw precondition_error("change is not holomorphic");
      if (mono::degree(m) != N + 1) throw precondition_error("change must be homogeneous of degree N+1");
    }
    phi.push_back(jet<S>::variable(n, porder, k) + with_order(change[k], porder, true));
  }
  auto t = transform_structure(s, phi);
  holomorphic_invariance_report rep;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rep.deviation = std::max(rep.deviation, max_diff(t.B(i, j), s.B(i, j), N));
  rep.violation = normal_form_violation(t, N);
  return rep;
}

}  // namespace acgeom
