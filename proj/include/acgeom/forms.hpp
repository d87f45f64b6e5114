#pragma once

#include "structure.hpp"

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <random>

namespace acgeom {

// Basis monomials are bit masks over 2n one-forms: bits 0..n-1 are zeta*_k
// (or dz_k), bits n..2n-1 are zetabar*_k (or dzbar_k).  A mask stands for the
// wedge of its one-forms in increasing bit order, so zeta*_K ^ zetabar*_L.
using form_mask = std::uint32_t;

enum class form_basis { frame, coordinate };

namespace formbits {

inline int degree(form_mask m) { return std::popcount(m); }
inline form_mask low(form_mask m, int n) { return m & ((form_mask(1) << n) - 1); }
inline form_mask high(form_mask m, int n) { return m >> n; }
inline int p_of(form_mask m, int n) { return std::popcount(low(m, n)); }
inline int q_of(form_mask m, int n) { return std::popcount(high(m, n)); }

// Sign of a ^ b re-sorted into increasing order; 0 if they share a factor.
inline int wedge_sign(form_mask a, form_mask b) {
  if (a & b) return 0;
  int swaps = 0;
  for (form_mask x = b; x; x &= x - 1) {
    int j = std::countr_zero(x);
    swaps += std::popcount(a >> (j + 1));  // factors of a standing after j
  }
  return swaps % 2 ? -1 : 1;
}

inline std::vector<int> bits(form_mask m) {
  std::vector<int> v;
  for (; m; m &= m - 1) v.push_back(std::countr_zero(m));
  return v;
}

}  // namespace formbits

template <class S>
class form {
 public:
  form() = default;
  form(int n, int order, form_basis basis = form_basis::frame, std::uint64_t frame_id = 0)
      : n_(n), order_(order), basis_(basis), frame_id_(frame_id) {}

  static form function(const jet<S>& f, form_basis basis = form_basis::frame, std::uint64_t frame_id = 0) {
    form r(f.n(), f.order(), basis, frame_id);
    r.add(0, f);
    return r;
  }
  // The one-form with index a (zeta*_a / dz_a for a < n, conjugates after).
  static form one_form(int n, int order, int a, form_basis basis = form_basis::frame, std::uint64_t frame_id = 0) {
    form r(n, order, basis, frame_id);
    r.add(form_mask(1) << a, jet<S>::constant(n, order, sint<S>(1)));
    return r;
  }
  static form monomial(int n, int order, form_mask m, const jet<S>& f, form_basis basis = form_basis::frame,
                       std::uint64_t frame_id = 0) {
    form r(n, order, basis, frame_id);
    r.add(m, f);
    return r;
  }

  int n() const { return n_; }
  int order() const { return order_; }
  form_basis basis() const { return basis_; }
  std::uint64_t frame_id() const { return frame_id_; }
  const std::map<form_mask, jet<S>>& terms() const { return terms_; }
  bool is_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.second.is_zero(); });
  }

  jet<S> coeff(form_mask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? jet<S>(n_, order_) : it->second;
  }

  void add(form_mask m, const jet<S>& f) {
    if (f.is_zero()) {
      // An explicit zero term carries a lowered effective order.
      auto it = terms_.find(m);
      if (it != terms_.end()) it->second = it->second + f;
      else if (f.effective_order() < order_) terms_.emplace(m, f);
      return;
    }
    auto it = terms_.find(m);
    if (it == terms_.end()) terms_.emplace(m, f);
    else it->second = it->second + f;
  }

  int effective_order() const {
    int e = order_;
    for (auto& [m, f] : terms_) e = std::min(e, f.effective_order());
    return e;
  }

  // Component of bidegree (p, q).
  form component(int p, int q) const {
    form r(n_, order_, basis_, frame_id_);
    for (auto& [m, f] : terms_)
      if (formbits::p_of(m, n_) == p && formbits::q_of(m, n_) == q) r.terms_.emplace(m, f);
    return r;
  }

  template <class F>
  form map(F&& fn) const {
    form r(n_, order_, basis_, frame_id_);
    for (auto& [m, f] : terms_) r.terms_.emplace(m, fn(f));
    return r;
  }

  friend form operator+(const form& a, const form& b) {
    check(a, b);
    form r = a;
    for (auto& [m, f] : b.terms_) r.add(m, f);
    return r;
  }
  friend form operator-(const form& a) {
    return a.map([](const jet<S>& f) { return -f; });
  }
  friend form operator-(const form& a, const form& b) { return a + (-b); }
  friend form operator*(const jet<S>& f, const form& a) {
    return a.map([&](const jet<S>& g) { return f * g; });
  }
  friend form operator*(const S& c, const form& a) {
    return a.map([&](const jet<S>& g) { return c * g; });
  }

  static void check(const form& a, const form& b) {
    if (a.n_ != b.n_ || a.order_ != b.order_) throw structural_error("form dimension/order mismatch");
    if (a.basis_ != b.basis_ || a.frame_id_ != b.frame_id_) throw structural_error("forms expressed in different frames");
  }

 private:
  int n_ = 0;
  int order_ = 0;
  form_basis basis_ = form_basis::frame;
  std::uint64_t frame_id_ = 0;
  std::map<form_mask, jet<S>> terms_;
};

using cform = form<cplx>;

template <class S>
form<S> wedge(const form<S>& a, const form<S>& b) {
  form<S>::check(a, b);
  form<S> r(a.n(), a.order(), a.basis(), a.frame_id());
  for (auto& [ma, fa] : a.terms())
    for (auto& [mb, fb] : b.terms()) {
      int s = formbits::wedge_sign(ma, mb);
      if (s == 0) continue;
      r.add(ma | mb, s > 0 ? fa * fb : -(fa * fb));
    }
  return r;
}

// Max coefficient deviation, each term compared up to its trusted degree.
template <class S>
double max_diff(const form<S>& a, const form<S>& b, int deg = mono::max_order) {
  form<S>::check(a, b);
  deg = std::min({deg, a.effective_order(), b.effective_order()});
  double m = 0;
  for (auto& [k, f] : a.terms()) m = std::max(m, max_diff(f, b.coeff(k), deg));
  for (auto& [k, f] : b.terms())
    if (!a.terms().count(k)) m = std::max(m, max_abs(f, deg));
  return m;
}

template <class S>
double max_abs(const form<S>& a, int deg = mono::max_order) {
  double m = 0;
  for (auto& [k, f] : a.terms()) m = std::max(m, max_abs(f, deg));
  return m;
}

// Conjugation: coefficients conjugated, zeta* <-> zetabar*, factors re-sorted.
template <class S>
form<S> conj(const form<S>& a) {
  const int n = a.n();
  form<S> r(n, a.order(), a.basis(), a.frame_id());
  for (auto& [m, f] : a.terms()) {
    form_mask lo = formbits::low(m, n), hi = formbits::high(m, n);
    // conj(zeta*_K ^ zetabar*_L) = zetabar*_K ^ zeta*_L = sign * zeta*_L ^ zetabar*_K
    form_mask cm = hi | (lo << n);
    int s = formbits::wedge_sign(lo << n, hi);
    r.add(cm, s > 0 ? conj(f) : -conj(f));
  }
  return r;
}

// Value on the basis vectors e_{a_1}, ..., e_{a_k} of the matching frame.
template <class S>
jet<S> evaluate(const form<S>& a, const std::vector<int>& idx) {
  form_mask m = 0;
  for (int i : idx) {
    if (m & (form_mask(1) << i)) return jet<S>(a.n(), a.order());
    m |= form_mask(1) << i;
  }
  // sign of the permutation sorting idx
  int inv = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) inv += idx[i] > idx[j];
  jet<S> c = a.coeff(m);
  return inv % 2 ? -c : c;
}

// Textbook exterior derivative of a coordinate-basis form.
template <class S>
form<S> coordinate_d(const form<S>& a) {
  if (a.basis() != form_basis::coordinate) throw structural_error("coordinate_d needs a coordinate-basis form");
  const int n = a.n();
  form<S> r(n, a.order(), form_basis::coordinate);
  for (auto& [m, f] : a.terms())
    for (int v = 0; v < 2 * n; ++v) {
      if (m & (form_mask(1) << v)) continue;
      int s = formbits::wedge_sign(form_mask(1) << v, m);
      auto df = partial(f, v);
      r.add(m | (form_mask(1) << v), s > 0 ? df : -df);
    }
  return r;
}

namespace detail {

// Pulls forms through a change of coframe: each basis one-form with index a
// becomes sum_b t(b, a) e_b (t's column a).  Wedges of several one-forms are
// expanded and cached by mask.
template <class S>
form<S> change_coframe(const form<S>& a, const jet_matrix<S>& t, form_basis to, std::uint64_t id) {
  const int n = a.n();
  std::map<form_mask, form<S>> cache;
  cache.emplace(0, form<S>::function(jet<S>::constant(n, a.order(), sint<S>(1)), to, id));
  auto expand = [&](auto&& self, form_mask m) -> const form<S>& {
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    int top = 31 - std::countl_zero(m);
    form_mask rest = m & ~(form_mask(1) << top);
    const form<S>& head = self(self, rest);
    form<S> one(n, a.order(), to, id);
    for (int b = 0; b < 2 * n; ++b)
      if (!t(b, top).is_zero()) one.add(form_mask(1) << b, t(b, top));
    return cache.emplace(m, wedge(head, one)).first->second;
  };
  form<S> r(n, a.order(), to, id);
  for (auto& [m, f] : a.terms()) r = r + f * expand(expand, m);
  return r;
}

}  // namespace detail

// zeta*_a = sum_i Finv(a, i) dx_i
template <class S>
form<S> to_coordinates(const form<S>& a, const frame<S>& fr) {
  if (a.basis() != form_basis::frame || a.frame_id() != fr.id) throw structural_error("form is not in this frame");
  return detail::change_coframe(a, fr.Finv.transpose(), form_basis::coordinate, 0);
}

// dx_i = sum_a F(i, a) zeta*_a
template <class S>
form<S> to_frame(const form<S>& a, const frame<S>& fr) {
  if (a.basis() != form_basis::coordinate) throw structural_error("form is not in the coordinate basis");
  return detail::change_coframe(a, fr.F.transpose(), form_basis::frame, fr.id);
}

enum class form_operator { del, delbar, theta, thetabar };

namespace detail {

template <class S>
void require_frame(const form<S>& u, const geometry<S>& g) {
  if (u.basis() != form_basis::frame || u.frame_id() != g.fr.id) throw structural_error("form is not in the frame of this structure");
}

inline int parity(int k) { return k % 2 ? -1 : 1; }

}  // namespace detail

// The local expressions of the four components of d on
// u = sum u_{K,L} zeta*_K ^ zetabar*_L, term by term.
template <class S>
form<S> apply_operator(form_operator op, const form<S>& u, const geometry<S>& g) {
  detail::require_frame(u, g);
  const int n = g.n();
  const auto& bc = g.bc;
  form<S> r(n, u.order(), form_basis::frame, g.fr.id);
  auto bit = [](int a) { return form_mask(1) << a; };
  // Adds c * prefix ^ rest.
  auto put = [&](form_mask prefix, form_mask rest, const jet<S>& c, int sign) {
    int s = formbits::wedge_sign(prefix, rest);
    if (s == 0 || c.is_zero()) {
      if (s != 0) r.add(prefix | rest, c);  // carries effective order
      return;
    }
    r.add(prefix | rest, s * sign > 0 ? c : -c);
  };
  for (auto& [m, coef] : u.terms()) {
    const form_mask K = formbits::low(m, n);
    const form_mask L = formbits::high(m, n) << n;
    const auto kb = formbits::bits(K);
    std::vector<int> lb;
    for (int b : formbits::bits(L)) lb.push_back(b - n);
    const int p = int(kb.size());
    const int q = int(lb.size());
    switch (op) {
      case form_operator::del: {
        for (int rr = 0; rr < n; ++rr) put(bit(rr), m, acgeom::apply(g.fr.field(rr), coef), 1);
        for (int j = 1; j <= p; ++j) {
          const int k = kb[j - 1];
          const form_mask rest = m & ~bit(k);
          for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) put(bit(a) | bit(b), rest, coef * bc.Mbar[k](a, b), detail::parity(j));
        }
        for (int j = 1; j <= q; ++j) {
          const int l = lb[j - 1];
          const form_mask rest = m & ~bit(n + l);
          for (int a = 0; a < n; ++a)
            for (int t = 0; t < n; ++t)
              put(bit(a) | bit(n + t), rest, coef * conj(bc.U[l](t, a)), -detail::parity(p) * detail::parity(j));
        }
        break;
      }
      case form_operator::delbar: {
        for (int rr = 0; rr < n; ++rr) put(bit(n + rr), m, acgeom::apply(g.fr.field(n + rr), coef), 1);
        for (int j = 1; j <= p; ++j) {
          const int k = kb[j - 1];
          const form_mask rest = m & ~bit(k);
          for (int a = 0; a < n; ++a)
            for (int t = 0; t < n; ++t) put(bit(a) | bit(n + t), rest, coef * bc.U[k](a, t), detail::parity(j));
        }
        for (int j = 1; j <= q; ++j) {
          const int l = lb[j - 1];
          const form_mask rest = m & ~bit(n + l);
          for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
              put(bit(n + a) | bit(n + b), rest, coef * bc.M[l](a, b), detail::parity(p) * detail::parity(j));
        }
        break;
      }
      case form_operator::theta: {
        for (int j = 1; j <= q; ++j) {
          const int l = lb[j - 1];
          const form_mask rest = m & ~bit(n + l);
          for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
              put(bit(a) | bit(b), rest, coef * bc.Nbar[l](a, b), -detail::parity(p) * detail::parity(j));
        }
        break;
      }
      case form_operator::thetabar: {
        for (int j = 1; j <= p; ++j) {
          const int k = kb[j - 1];
          const form_mask rest = m & ~bit(k);
          for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) put(bit(n + a) | bit(n + b), rest, coef * bc.N[k](a, b), -detail::parity(j));
        }
        break;
      }
    }
  }
  return r;
}

template <class S>
form<S> del(const form<S>& u, const geometry<S>& g) { return apply_operator(form_operator::del, u, g); }
template <class S>
form<S> delbar(const form<S>& u, const geometry<S>& g) { return apply_operator(form_operator::delbar, u, g); }
template <class S>
form<S> theta(const form<S>& u, const geometry<S>& g) { return apply_operator(form_operator::theta, u, g); }
template <class S>
form<S> thetabar(const form<S>& u, const geometry<S>& g) { return apply_operator(form_operator::thetabar, u, g); }

// d = del + delbar - theta - thetabar
template <class S>
form<S> frame_d(const form<S>& u, const geometry<S>& g) {
  return del(u, g) + delbar(u, g) - theta(u, g) - thetabar(u, g);
}

// Canonical (0,1)-connection on (p,0)-forms: (-1)^p delbar.
template <class S>
form<S> canonical_delbar(const form<S>& u, const geometry<S>& g) {
  detail::require_frame(u, g);
  form<S> r(u.n(), u.order(), form_basis::frame, g.fr.id);
  for (auto& [m, f] : u.terms()) {
    if (formbits::q_of(m, u.n()) != 0) throw precondition_error("canonical delbar acts on (p,0)-forms");
    auto t = delbar(form<S>::monomial(u.n(), u.order(), m, f, form_basis::frame, g.fr.id), g);
    r = r + (formbits::p_of(m, u.n()) % 2 ? -t : t);
  }
  return r;
}

// d u computed in the frame and converted, against the coordinate d of u.
template <class S>
double exterior_derivative_check(const form<S>& u, const geometry<S>& g) {
  auto lhs = coordinate_d(to_coordinates(u, g.fr));
  auto rhs = to_coordinates(frame_d(u, g), g.fr);
  return max_diff(lhs, rhs);
}

struct identity_row {
  std::string name;
  double residual = 0;
  int order_checked = 0;
};

// The seven identities of the components of d, over the test forms
// f * zeta*_K ^ zetabar*_L (|K| + |L| <= 2) with seeded random jets f.
template <class S>
std::vector<identity_row> fundamental_identities_check(const geometry<S>& g, std::uint64_t seed = 1) {
  const int n = g.n();
  const int order = g.order();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> var(0, 2 * n - 1);
  std::uniform_int_distribution<int> deg(0, order);
  std::uniform_real_distribution<double> u(-1, 1);
  auto D = [&](const form<S>& x) { return del(x, g); };
  auto Db = [&](const form<S>& x) { return delbar(x, g); };
  auto T = [&](const form<S>& x) { return theta(x, g); };
  auto Tb = [&](const form<S>& x) { return thetabar(x, g); };
  std::vector<identity_row> rows{{"del^2 = delbar theta + theta delbar"},
                                 {"delbar^2 = del thetabar + thetabar del"},
                                 {"del delbar + delbar del = -(theta thetabar + thetabar theta)"},
                                 {"del theta = -theta del"},
                                 {"delbar thetabar = -thetabar delbar"},
                                 {"theta^2 = 0"},
                                 {"thetabar^2 = 0"}};
  int checked = order;
  for (form_mask m = 0; m < (form_mask(1) << (2 * n)); ++m) {
    if (formbits::degree(m) > 2) continue;
    jet<S> f(n, order);
    for (int t = 0; t < 6; ++t) {
      std::vector<int> e(2 * n, 0);
      int d = deg(rng);
      for (int i = 0; i < d; ++i) ++e[var(rng)];
      f.add_term(mono::make(std::vector<int>(e.begin(), e.begin() + n), std::vector<int>(e.begin() + n, e.end())),
                 sfrom<S>(cplx(u(rng), u(rng))));
    }
    auto x = form<S>::monomial(n, order, m, f, form_basis::frame, g.fr.id);
    const auto dx = D(x), dbx = Db(x), tx = T(x), tbx = Tb(x);
    std::vector<std::pair<form<S>, form<S>>> sides{
        {D(dx), Db(tx) + T(dbx)},
        {Db(dbx), D(tbx) + Tb(dx)},
        {D(dbx) + Db(dx), -(T(tbx) + Tb(tx))},
        {D(tx), -T(dx)},
        {Db(tbx), -Tb(dbx)},
        {T(tx), form<S>(n, order, form_basis::frame, g.fr.id)},
        {Tb(tbx), form<S>(n, order, form_basis::frame, g.fr.id)}};
    for (std::size_t i = 0; i < sides.size(); ++i) {
      rows[i].residual = std::max(rows[i].residual, max_diff(sides[i].first, sides[i].second));
      checked = std::min(checked, std::min(sides[i].first.effective_order(), sides[i].second.effective_order()));
    }
  }
  for (auto& r : rows) r.order_checked = std::max(checked, 0);
  return rows;
}

// Square matrix whose entries are forms (connection and curvature matrices).
template <class S>
class form_matrix {
 public:
  form_matrix() = default;
  form_matrix(int size, int n, int order, form_basis basis, std::uint64_t id)
      : size_(size), e_(std::size_t(size) * size, form<S>(n, order, basis, id)) {}

  int size() const { return size_; }
  form<S>& operator()(int i, int j) { return e_[std::size_t(i) * size_ + j]; }
  const form<S>& operator()(int i, int j) const { return e_[std::size_t(i) * size_ + j]; }

  template <class F>
  form_matrix map(F&& fn) const {
    form_matrix r = *this;
    for (auto& x : r.e_) x = fn(x);
    return r;
  }
  friend form_matrix operator+(const form_matrix& a, const form_matrix& b) {
    form_matrix r = a;
    for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = a.e_[i] + b.e_[i];
    return r;
  }
  friend form_matrix operator-(const form_matrix& a, const form_matrix& b) {
    form_matrix r = a;
    for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = a.e_[i] - b.e_[i];
    return r;
  }
  friend form_matrix operator-(const form_matrix& a) {
    return a.map([](const form<S>& x) { return -x; });
  }
  form_matrix transpose() const {
    form_matrix r = *this;
    for (int i = 0; i < size_; ++i)
      for (int j = 0; j < size_; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
  form_matrix conj() const {
    return map([](const form<S>& x) { return acgeom::conj(x); });
  }
  form_matrix component(int p, int q) const {
    return map([&](const form<S>& x) { return x.component(p, q); });
  }
  const std::vector<form<S>>& entries() const { return e_; }

 private:
  int size_ = 0;
  std::vector<form<S>> e_;
};

// (a ^ b)_{ij} = sum_k a_{ik} ^ b_{kj}
template <class S>
form_matrix<S> wedge(const form_matrix<S>& a, const form_matrix<S>& b) {
  form_matrix<S> r = a;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) {
      form<S> s(a(0, 0).n(), a(0, 0).order(), a(0, 0).basis(), a(0, 0).frame_id());
      for (int k = 0; k < a.size(); ++k) s = s + wedge(a(i, k), b(k, j));
      r(i, j) = s;
    }
  return r;
}

// Function matrix times form matrix, and the other way round.
template <class S>
form_matrix<S> operator*(const jet_matrix<S>& m, const form_matrix<S>& a) {
  form_matrix<S> r = a;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) {
      form<S> s(a(0, 0).n(), a(0, 0).order(), a(0, 0).basis(), a(0, 0).frame_id());
      for (int k = 0; k < a.size(); ++k) s = s + m(i, k) * a(k, j);
      r(i, j) = s;
    }
  return r;
}

template <class S>
form_matrix<S> operator*(const form_matrix<S>& a, const jet_matrix<S>& m) {
  form_matrix<S> r = a;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) {
      form<S> s(a(0, 0).n(), a(0, 0).order(), a(0, 0).basis(), a(0, 0).frame_id());
      for (int k = 0; k < a.size(); ++k) s = s + m(k, j) * a(i, k);
      r(i, j) = s;
    }
  return r;
}

template <class S>
double max_diff(const form_matrix<S>& a, const form_matrix<S>& b, int deg = mono::max_order) {
  double m = 0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) m = std::max(m, max_diff(a.entries()[i], b.entries()[i], deg));
  return m;
}

template <class S>
double max_abs(const form_matrix<S>& a, int deg = mono::max_order) {
  double m = 0;
  for (auto& x : a.entries()) m = std::max(m, max_abs(x, deg));
  return m;
}

}  // namespace acgeom
