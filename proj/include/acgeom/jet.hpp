#pragma once

#include "errors.hpp"
#include "scalar.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace acgeom {

// A monomial z^alpha zbar^beta packed into 64 bits: total degree in the top
// byte, then one nibble per variable (z_1..z_n, then zbar_1..zbar_n).  With
// this layout integer comparison is graded-lexicographic and multiplication
// of monomials is integer addition.
using monomial = std::uint64_t;

namespace mono {

inline constexpr int max_vars = 12;
inline constexpr int max_order = 15;

inline constexpr int shift(int v) { return 52 - 4 * v; }
inline constexpr int degree(monomial m) { return int(m >> 56); }
inline constexpr int exponent(monomial m, int v) { return int((m >> shift(v)) & 0xFu); }
inline constexpr monomial unit(int v) { return (monomial(1) << 56) | (monomial(1) << shift(v)); }

inline monomial make(const std::vector<int>& alpha, const std::vector<int>& beta) {
  const int n = int(alpha.size());
  if (int(beta.size()) != n || 2 * n > max_vars) throw structural_error("bad multi-index size");
  monomial m = 0;
  int d = 0;
  for (int v = 0; v < 2 * n; ++v) {
    int e = v < n ? alpha[v] : beta[v - n];
    if (e < 0 || e > max_order) throw structural_error("exponent out of range");
    m |= monomial(e) << shift(v);
    d += e;
  }
  if (d > max_order) throw structural_error("degree out of range");
  return m | (monomial(d) << 56);
}

inline std::vector<int> alpha(monomial m, int n) {
  std::vector<int> a(n);
  for (int k = 0; k < n; ++k) a[k] = exponent(m, k);
  return a;
}

inline std::vector<int> beta(monomial m, int n) {
  std::vector<int> b(n);
  for (int k = 0; k < n; ++k) b[k] = exponent(m, n + k);
  return b;
}

inline monomial conj(monomial m, int n) {
  monomial r = m & (monomial(0xFF) << 56);
  for (int k = 0; k < n; ++k) {
    r |= monomial(exponent(m, k)) << shift(n + k);
    r |= monomial(exponent(m, n + k)) << shift(k);
  }
  return r;
}

// l(alpha) = max{r : alpha_r != 0}, 1-based, 0 for alpha = 0.
inline int last_index(const std::vector<int>& alpha) {
  for (int r = int(alpha.size()); r >= 1; --r)
    if (alpha[r - 1] != 0) return r;
  return 0;
}

// All monomials in 2n variables of total degree exactly d.
inline std::vector<monomial> of_degree(int n, int d) {
  std::vector<monomial> out;
  std::vector<int> e(2 * n, 0);
  auto rec = [&](auto&& self, int v, int left) -> void {
    if (v == 2 * n - 1) {
      e[v] = left;
      out.push_back(make(std::vector<int>(e.begin(), e.begin() + n),
                         std::vector<int>(e.begin() + n, e.end())));
      return;
    }
    for (int x = left; x >= 0; --x) {
      e[v] = x;
      self(self, v + 1, left - x);
    }
  };
  if (n > 0) rec(rec, 0, d);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mono

template <class S>
class jet {
 public:
  using scalar = S;
  using term = std::pair<monomial, S>;

  jet() = default;
  jet(int n, int order) : jet(n, order, order) {}
  jet(int n, int order, int eff) : n_(n), order_(order), eff_(std::min(eff, order)) {
    if (n < 0 || 2 * n > mono::max_vars) throw structural_error("jet dimension out of range");
    if (order < 0 || order > mono::max_order) throw structural_error("jet order out of range");
    if (eff_ < -1) eff_ = -1;
  }

  static jet constant(int n, int order, const S& c) {
    jet f(n, order);
    f.add_term(0, c);
    return f;
  }

  // Variable v: z_{v+1} for v < n, zbar_{v-n+1} otherwise.
  static jet variable(int n, int order, int v, const S& c = sint<S>(1)) {
    if (v < 0 || v >= 2 * n) throw structural_error("variable index out of range");
    jet f(n, order);
    f.add_term(mono::unit(v), c);
    return f;
  }

  static jet from_terms(int n, int order, int eff, std::vector<term> ts) {
    jet f(n, order, eff);
    std::sort(ts.begin(), ts.end(),
              [](const term& a, const term& b) { return a.first < b.first; });
    f.terms_.reserve(ts.size());
    for (auto& t : ts) {
      if (mono::degree(t.first) > f.eff_) continue;
      if (!f.terms_.empty() && f.terms_.back().first == t.first)
        f.terms_.back().second += t.second;
      else
        f.terms_.push_back(std::move(t));
    }
    f.prune();
    return f;
  }

  int n() const { return n_; }
  int order() const { return order_; }
  int effective_order() const { return eff_; }
  const std::vector<term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  S coeff(monomial m) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                               [](const term& t, monomial k) { return t.first < k; });
    if (it != terms_.end() && it->first == m) return it->second;
    return sint<S>(0);
  }
  S coeff(const std::vector<int>& alpha, const std::vector<int>& beta) const {
    return coeff(mono::make(alpha, beta));
  }
  S constant_term() const { return coeff(0); }

  // Adds c to the coefficient of m; terms above the effective order are dropped.
  void add_term(monomial m, const S& c) {
    if (mono::degree(m) > eff_) return;
    auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                               [](const term& t, monomial k) { return t.first < k; });
    if (it != terms_.end() && it->first == m) {
      it->second += c;
      if (scalar_traits<S>::negligible(it->second)) terms_.erase(it);
    } else if (!scalar_traits<S>::negligible(c)) {
      terms_.insert(it, term{m, c});
    }
  }
  void add_term(const std::vector<int>& alpha, const std::vector<int>& beta, const S& c) {
    add_term(mono::make(alpha, beta), c);
  }

  // Lowers the trusted degree, discarding the terms above it.
  jet& limit(int eff) {
    if (eff < eff_) {
      eff_ = std::max(eff, -1);
      while (!terms_.empty() && mono::degree(terms_.back().first) > eff_) terms_.pop_back();
    }
    return *this;
  }

  jet& operator+=(const jet& g) { return *this = *this + g; }
  jet& operator-=(const jet& g) { return *this = *this - g; }
  jet& operator*=(const jet& g) { return *this = *this * g; }

  friend jet operator+(const jet& f, const jet& g) { return combine(f, g, sint<S>(1)); }
  friend jet operator-(const jet& f, const jet& g) { return combine(f, g, sint<S>(-1)); }
  friend jet operator-(const jet& f) {
    jet r = f;
    for (auto& t : r.terms_) t.second = -t.second;
    return r;
  }
  friend jet operator*(const S& c, const jet& f) {
    jet r(f.n_, f.order_, f.eff_);
    if (scalar_traits<S>::is_zero(c)) return r;
    r.terms_.reserve(f.terms_.size());
    for (auto& t : f.terms_) r.terms_.push_back({t.first, c * t.second});
    r.prune();
    return r;
  }
  friend jet operator*(const jet& f, const S& c) { return c * f; }

  friend jet operator*(const jet& f, const jet& g) {
    check_compatible(f, g);
    const int lim = std::min(f.eff_, g.eff_);
    jet r(f.n_, f.order_, lim);
    if (f.terms_.empty() || g.terms_.empty()) return r;
    std::vector<term> acc;
    acc.reserve(f.terms_.size() * 4);
    for (auto& a : f.terms_) {
      const int da = mono::degree(a.first);
      if (da > lim) break;
      for (auto& b : g.terms_) {
        if (da + mono::degree(b.first) > lim) break;
        acc.push_back({a.first + b.first, a.second * b.second});
      }
    }
    return from_terms(f.n_, f.order_, lim, std::move(acc));
  }

  friend bool operator==(const jet& f, const jet& g) {
    return f.n_ == g.n_ && f.order_ == g.order_ && f.eff_ == g.eff_ && f.terms_ == g.terms_;
  }

  static void check_compatible(const jet& f, const jet& g) {
    if (f.n_ != g.n_ || f.order_ != g.order_)
      throw structural_error("jet dimension/order mismatch");
  }

 private:
  static jet combine(const jet& f, const jet& g, const S& sign) {
    check_compatible(f, g);
    const int lim = std::min(f.eff_, g.eff_);
    jet r(f.n_, f.order_, lim);
    r.terms_.reserve(f.terms_.size() + g.terms_.size());
    auto i = f.terms_.begin();
    auto j = g.terms_.begin();
    auto push = [&](monomial m, S c) {
      if (mono::degree(m) <= lim && !scalar_traits<S>::negligible(c)) r.terms_.push_back({m, c});
    };
    while (i != f.terms_.end() || j != g.terms_.end()) {
      if (j == g.terms_.end() || (i != f.terms_.end() && i->first < j->first)) {
        push(i->first, i->second);
        ++i;
      } else if (i == f.terms_.end() || j->first < i->first) {
        push(j->first, sign * j->second);
        ++j;
      } else {
        push(i->first, i->second + sign * j->second);
        ++i;
        ++j;
      }
    }
    return r;
  }

  void prune() {
    terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                [](const term& t) { return scalar_traits<S>::negligible(t.second); }),
                 terms_.end());
  }

  int n_ = 0;
  int order_ = 0;
  int eff_ = 0;
  std::vector<term> terms_;

  template <class T>
  friend jet<T> conj(const jet<T>&);
};

using cjet = jet<cplx>;

template <class S>
jet<S> conj(const jet<S>& f) {
  std::vector<typename jet<S>::term> ts;
  ts.reserve(f.terms().size());
  for (auto& t : f.terms()) ts.push_back({mono::conj(t.first, f.n()), sconj(t.second)});
  return jet<S>::from_terms(f.n(), f.order(), f.effective_order(), std::move(ts));
}

// Formal partial derivative in variable v (z_k for v < n, zbar_k otherwise).
template <class S>
jet<S> partial(const jet<S>& f, int v) {
  if (v < 0 || v >= 2 * f.n()) throw structural_error("partial: variable index out of range");
  jet<S> r(f.n(), f.order(), f.effective_order() - 1);
  std::vector<typename jet<S>::term> ts;
  const monomial u = mono::unit(v);
  for (auto& t : f.terms()) {
    int e = mono::exponent(t.first, v);
    if (e == 0) continue;
    ts.push_back({t.first - u, sint<S>(e) * t.second});
  }
  return jet<S>::from_terms(f.n(), f.order(), r.effective_order(), std::move(ts));
}

// Homogeneous part of degree d.
template <class S>
jet<S> homogeneous(const jet<S>& f, int d) {
  std::vector<typename jet<S>::term> ts;
  for (auto& t : f.terms())
    if (mono::degree(t.first) == d) ts.push_back(t);
  return jet<S>::from_terms(f.n(), f.order(), f.effective_order(), std::move(ts));
}

template <class S>
jet<S> truncate(jet<S> f, int d) {
  return f.limit(d);
}

// Re-embeds f at another truncation order; raising the order keeps the
// effective order, so the new high-degree slots are untrusted.
template <class S>
jet<S> with_order(const jet<S>& f, int order, bool exact_polynomial = false) {
  int eff = exact_polynomial ? order : std::min(f.effective_order(), order);
  std::vector<typename jet<S>::term> ts;
  for (auto& t : f.terms())
    if (mono::degree(t.first) <= order) ts.push_back(t);
  return jet<S>::from_terms(f.n(), order, eff, std::move(ts));
}

template <class S>
jet<S> with_effective_order(const jet<S>& f, int eff) {
  std::vector<typename jet<S>::term> ts(f.terms().begin(), f.terms().end());
  return jet<S>::from_terms(f.n(), f.order(), eff, std::move(ts));
}

// Evaluation with zbar_k = conj(z_k).
template <class S>
cplx eval(const jet<S>& f, const std::vector<cplx>& z) {
  const int n = f.n();
  if (int(z.size()) != n) throw structural_error("eval: point dimension mismatch");
  std::vector<std::vector<cplx>> pw(2 * n, std::vector<cplx>(mono::max_order + 1, cplx(1.0)));
  for (int v = 0; v < 2 * n; ++v) {
    cplx x = v < n ? z[v] : std::conj(z[v - n]);
    for (int e = 1; e <= mono::max_order; ++e) pw[v][e] = pw[v][e - 1] * x;
  }
  cplx s(0.0);
  for (auto& t : f.terms()) {
    cplx m = to_cplx(t.second);
    for (int v = 0; v < 2 * n; ++v) m *= pw[v][mono::exponent(t.first, v)];
    s += m;
  }
  return s;
}

// Max coefficient deviation over degrees <= min(deg, both effective orders).
template <class S>
double max_diff(const jet<S>& f, const jet<S>& g, int deg = mono::max_order) {
  const int lim = std::min({deg, f.effective_order(), g.effective_order()});
  double m = 0.0;
  auto i = f.terms().begin();
  auto j = g.terms().begin();
  while (i != f.terms().end() || j != g.terms().end()) {
    if (j == g.terms().end() || (i != f.terms().end() && i->first < j->first)) {
      if (mono::degree(i->first) <= lim) m = std::max(m, smag(i->second));
      ++i;
    } else if (i == f.terms().end() || j->first < i->first) {
      if (mono::degree(j->first) <= lim) m = std::max(m, smag(j->second));
      ++j;
    } else {
      if (mono::degree(i->first) <= lim) m = std::max(m, smag(S(i->second - j->second)));
      ++i;
      ++j;
    }
  }
  return m;
}

template <class S>
double max_abs(const jet<S>& f, int deg = mono::max_order) {
  double m = 0.0;
  for (auto& t : f.terms())
    if (mono::degree(t.first) <= std::min(deg, f.effective_order())) m = std::max(m, smag(t.second));
  return m;
}

template <class T, class S>
jet<T> convert(const jet<S>& f) {
  std::vector<typename jet<T>::term> ts;
  for (auto& t : f.terms()) ts.push_back({t.first, sfrom<T>(to_cplx(t.second))});
  return jet<T>::from_terms(f.n(), f.order(), f.effective_order(), std::move(ts));
}

template <class S>
jet<cplx> to_double(const jet<S>& f) {
  std::vector<typename jet<cplx>::term> ts;
  for (auto& t : f.terms()) ts.push_back({t.first, to_cplx(t.second)});
  return jet<cplx>::from_terms(f.n(), f.order(), f.effective_order(), std::move(ts));
}

// Substitution z_k -> psi_k, zbar_k -> conj(psi_k).  Powers of the
// substituted variables are cached, so applying it to many jets costs one
// scaled addition per term.
template <class S>
class substitution {
 public:
  substitution(std::vector<jet<S>> psi, int order, bool affine = false) : order_(order) {
    if (psi.empty()) throw structural_error("substitution: empty");
    n_ = psi[0].n();
    if (int(psi.size()) != n_) throw structural_error("substitution: need one jet per coordinate");
    vars_.resize(2 * n_);
    for (int k = 0; k < n_; ++k) {
      if (psi[k].n() != n_) throw structural_error("substitution: dimension mismatch");
      jet<S> p = with_order(psi[k], order);
      if (!affine && !scalar_traits<S>::is_zero(p.constant_term()))
        throw precondition_error("substitution: non-zero constant term without affine flag");
      vars_[n_ + k] = conj(p);
      vars_[k] = std::move(p);
    }
    cache_.emplace(monomial(0), jet<S>::constant(n_, order_, sint<S>(1)));
  }

  // Checks conjugate-pair consistency of an explicit 2n-jet substitution.
  static substitution from_pairs(const std::vector<jet<S>>& pairs, int order, bool affine = false) {
    if (pairs.size() % 2 != 0) throw structural_error("substitution: odd number of jets");
    const int n = int(pairs.size() / 2);
    for (int k = 0; k < n; ++k)
      if (max_diff(conj(pairs[k]), pairs[n + k]) > 1e-14)
        throw precondition_error("substitution: conjugate-pair inconsistency at " + std::to_string(k));
    return substitution(std::vector<jet<S>>(pairs.begin(), pairs.begin() + n), order, affine);
  }

  jet<S> apply(const jet<S>& f) {
    if (f.n() != n_) throw structural_error("substitution: dimension mismatch");
    int eff = std::min(order_, f.effective_order());
    std::vector<typename jet<S>::term> acc;
    for (auto& t : f.terms()) {
      const jet<S>& p = power(t.first);
      eff = std::min(eff, p.effective_order());
      for (auto& u : p.terms()) acc.push_back({u.first, t.second * u.second});
    }
    return jet<S>::from_terms(n_, order_, eff, std::move(acc));
  }

  int n() const { return n_; }
  int order() const { return order_; }

 private:
  const jet<S>& power(monomial m) {
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    int v = 2 * n_ - 1;
    while (mono::exponent(m, v) == 0) --v;
    jet<S> r = power(m - mono::unit(v)) * vars_[v];
    return cache_.emplace(m, std::move(r)).first->second;
  }

  int n_ = 0;
  int order_ = 0;
  std::vector<jet<S>> vars_;
  std::map<monomial, jet<S>> cache_;
};

template <class S>
jet<S> compose(const jet<S>& f, const std::vector<jet<S>>& psi, bool affine = false) {
  substitution<S> sub(psi, f.order(), affine);
  return sub.apply(f);
}

}  // namespace acgeom
