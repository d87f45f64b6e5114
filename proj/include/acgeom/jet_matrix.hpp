#pragma once

#include "jet.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace acgeom {

// Small dense matrix over the scalar type; used for constant terms.
template <class S>
struct dense_matrix {
  int rows = 0;
  int cols = 0;
  std::vector<S> a;

  dense_matrix() = default;
  dense_matrix(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, sint<S>(0)) {}
  static dense_matrix identity(int n) {
    dense_matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = sint<S>(1);
    return m;
  }
  S& operator()(int i, int j) { return a[std::size_t(i) * cols + j]; }
  const S& operator()(int i, int j) const { return a[std::size_t(i) * cols + j]; }

  friend dense_matrix operator*(const dense_matrix& x, const dense_matrix& y) {
    if (x.cols != y.rows) throw structural_error("dense product: shape mismatch");
    dense_matrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int k = 0; k < x.cols; ++k)
        for (int j = 0; j < y.cols; ++j) r(i, j) += x(i, k) * y(k, j);
    return r;
  }
  friend dense_matrix operator-(const dense_matrix& x, const dense_matrix& y) {
    dense_matrix r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
  }

  double norm1() const {
    double m = 0;
    for (int j = 0; j < cols; ++j) {
      double s = 0;
      for (int i = 0; i < rows; ++i) s += smag((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }
};

// Gauss-Jordan with partial pivoting.  Throws singularity_error carrying a
// 1-norm condition estimate (infinite when a pivot vanishes).
template <class S>
dense_matrix<S> inverse(const dense_matrix<S>& m) {
  if (m.rows != m.cols) throw structural_error("inverse: matrix not square");
  const int n = m.rows;
  dense_matrix<S> w = m;
  dense_matrix<S> r = dense_matrix<S>::identity(n);
  const double scale = std::max(m.norm1(), 1e-300);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = smag(w(c, c));
    for (int i = c + 1; i < n; ++i)
      if (smag(w(i, c)) > best) best = smag(w(i, c)), piv = i;
    const bool tiny = scalar_traits<S>::exact ? best == 0.0 && scalar_traits<S>::is_zero(w(piv, c))
                                              : best <= 1e-13 * scale;
    if (tiny) throw singularity_error("singular constant term", std::numeric_limits<double>::infinity());
    if (piv != c)
      for (int j = 0; j < n; ++j) std::swap(w(c, j), w(piv, j)), std::swap(r(c, j), r(piv, j));
    S inv = sint<S>(1) / w(c, c);
    for (int j = 0; j < n; ++j) w(c, j) = w(c, j) * inv, r(c, j) = r(c, j) * inv;
    for (int i = 0; i < n; ++i) {
      if (i == c || scalar_traits<S>::is_zero(w(i, c))) continue;
      S f = w(i, c);
      for (int j = 0; j < n; ++j) w(i, j) -= f * w(c, j), r(i, j) -= f * r(c, j);
    }
  }
  if (!scalar_traits<S>::exact) {
    double cond = m.norm1() * r.norm1();
    if (cond > 1e13) throw singularity_error("ill-conditioned constant term", cond);
  }
  return r;
}

template <class S>
class jet_matrix {
 public:
  using jet_type = jet<S>;

  jet_matrix() = default;
  jet_matrix(int rows, int cols, int n, int order)
      : rows_(rows), cols_(cols), e_(std::size_t(rows) * cols, jet<S>(n, order)) {}

  static jet_matrix identity(int size, int n, int order) {
    jet_matrix m(size, size, n, order);
    for (int i = 0; i < size; ++i) m(i, i) = jet<S>::constant(n, order, sint<S>(1));
    return m;
  }
  static jet_matrix constant(const dense_matrix<S>& d, int n, int order) {
    jet_matrix m(d.rows, d.cols, n, order);
    for (int i = 0; i < d.rows; ++i)
      for (int j = 0; j < d.cols; ++j) m(i, j) = jet<S>::constant(n, order, d(i, j));
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int n() const { return e_.empty() ? 0 : e_[0].n(); }
  int order() const { return e_.empty() ? 0 : e_[0].order(); }
  int effective_order() const {
    int m = order();
    for (auto& x : e_) m = std::min(m, x.effective_order());
    return m;
  }

  jet<S>& operator()(int i, int j) { return e_[std::size_t(i) * cols_ + j]; }
  const jet<S>& operator()(int i, int j) const { return e_[std::size_t(i) * cols_ + j]; }

  dense_matrix<S> constant_part() const {
    dense_matrix<S> d(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) d(i, j) = (*this)(i, j).constant_term();
    return d;
  }

  friend jet_matrix operator+(const jet_matrix& x, const jet_matrix& y) {
    check_shape(x, y);
    jet_matrix r = x;
    for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = x.e_[i] + y.e_[i];
    return r;
  }
  friend jet_matrix operator-(const jet_matrix& x, const jet_matrix& y) {
    check_shape(x, y);
    jet_matrix r = x;
    for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = x.e_[i] - y.e_[i];
    return r;
  }
  friend jet_matrix operator-(const jet_matrix& x) {
    jet_matrix r = x;
    for (auto& f : r.e_) f = -f;
    return r;
  }
  friend jet_matrix operator*(const S& c, const jet_matrix& x) {
    jet_matrix r = x;
    for (auto& f : r.e_) f = c * f;
    return r;
  }
  friend jet_matrix operator*(const jet<S>& c, const jet_matrix& x) {
    jet_matrix r = x;
    for (auto& f : r.e_) f = c * f;
    return r;
  }
  friend jet_matrix operator*(const jet_matrix& x, const jet_matrix& y) {
    if (x.cols_ != y.rows_) throw structural_error("jet matrix product: shape mismatch");
    jet_matrix r(x.rows_, y.cols_, x.n(), x.order());
    for (int i = 0; i < x.rows_; ++i)
      for (int j = 0; j < y.cols_; ++j) {
        jet<S> s(x.n(), x.order());
        for (int k = 0; k < x.cols_; ++k) s += x(i, k) * y(k, j);
        r(i, j) = std::move(s);
      }
    return r;
  }

  jet_matrix transpose() const {
    jet_matrix r(cols_, rows_, n(), order());
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }
  // Entrywise conjugation of the jets.
  jet_matrix conj() const {
    jet_matrix r = *this;
    for (auto& f : r.e_) f = acgeom::conj(f);
    return r;
  }
  jet_matrix adjoint() const { return conj().transpose(); }

  jet_matrix block(int r0, int c0, int nr, int nc) const {
    jet_matrix r(nr, nc, n(), order());
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) r(i, j) = (*this)(r0 + i, c0 + j);
    return r;
  }
  void set_block(int r0, int c0, const jet_matrix& b) {
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  jet_matrix limit(int eff) const {
    jet_matrix r = *this;
    for (auto& f : r.e_) f.limit(eff);
    return r;
  }

  template <class F>
  jet_matrix map(F&& fn) const {
    jet_matrix r = *this;
    for (auto& f : r.e_) f = fn(f);
    return r;
  }

  std::vector<std::vector<cplx>> eval(const std::vector<cplx>& z) const {
    std::vector<std::vector<cplx>> v(rows_, std::vector<cplx>(cols_));
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) v[i][j] = acgeom::eval((*this)(i, j), z);
    return v;
  }

  const std::vector<jet<S>>& entries() const { return e_; }

 private:
  static void check_shape(const jet_matrix& x, const jet_matrix& y) {
    if (x.rows_ != y.rows_ || x.cols_ != y.cols_) throw structural_error("jet matrix shape mismatch");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<jet<S>> e_;
};

using cjet_matrix = jet_matrix<cplx>;

template <class S>
double max_diff(const jet_matrix<S>& x, const jet_matrix<S>& y, int deg = mono::max_order) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw structural_error("shape mismatch");
  double m = 0;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) m = std::max(m, max_diff(x(i, j), y(i, j), deg));
  return m;
}

template <class S>
double max_abs(const jet_matrix<S>& x, int deg = mono::max_order) {
  double m = 0;
  for (auto& f : x.entries()) m = std::max(m, max_abs(f, deg));
  return m;
}

// M^{-1} = sum_k (-X)^k M0^{-1} with X = M0^{-1}(M - M0); X has no constant
// term so the series stops after `order` steps.
template <class S>
jet_matrix<S> inverse(const jet_matrix<S>& m) {
  if (m.rows() != m.cols()) throw structural_error("inverse: matrix not square");
  const int size = m.rows();
  const int n = m.n();
  const int order = m.order();
  dense_matrix<S> m0 = m.constant_part();
  jet_matrix<S> m0inv = jet_matrix<S>::constant(inverse(m0), n, order);
  jet_matrix<S> x = m0inv * (m - jet_matrix<S>::constant(m0, n, order));
  jet_matrix<S> result = jet_matrix<S>::identity(size, n, order);
  jet_matrix<S> p = result;
  const int eff = m.effective_order();
  for (int k = 1; k <= eff; ++k) {
    p = -(p * x);
    if (max_abs(p) == 0.0) break;
    result = result + p;
  }
  return (result * m0inv).limit(eff);
}

template <class S>
jet_matrix<S> compose(const jet_matrix<S>& m, substitution<S>& sub) {
  return m.map([&](const jet<S>& f) { return sub.apply(f); });
}

template <class T, class S>
jet_matrix<T> convert(const jet_matrix<S>& m) {
  jet_matrix<T> r(m.rows(), m.cols(), m.n(), m.order());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = convert<T>(m(i, j));
  return r;
}

}  // namespace acgeom
