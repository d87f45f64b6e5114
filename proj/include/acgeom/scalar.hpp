#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <ostream>
#include <type_traits>

namespace acgeom {

using cplx = std::complex<double>;
using rational = boost::multiprecision::cpp_rational;

// Gaussian rational: exact complex arithmetic for oracle computations.
struct exact_complex {
  rational re{0};
  rational im{0};

  exact_complex() = default;
  exact_complex(rational r, rational i = 0) : re(std::move(r)), im(std::move(i)) {}
  exact_complex(int r) : re(r), im(0) {}

  friend exact_complex operator+(const exact_complex& a, const exact_complex& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend exact_complex operator-(const exact_complex& a, const exact_complex& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend exact_complex operator-(const exact_complex& a) { return {-a.re, -a.im}; }
  friend exact_complex operator*(const exact_complex& a, const exact_complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend exact_complex operator/(const exact_complex& a, const exact_complex& b) {
    rational d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }
  exact_complex& operator+=(const exact_complex& b) { re += b.re; im += b.im; return *this; }
  exact_complex& operator-=(const exact_complex& b) { re -= b.re; im -= b.im; return *this; }
  exact_complex& operator*=(const exact_complex& b) { return *this = *this * b; }
  friend bool operator==(const exact_complex& a, const exact_complex& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend std::ostream& operator<<(std::ostream& os, const exact_complex& z) {
    return os << '(' << z.re << ',' << z.im << ')';
  }
};

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<cplx> {
  static constexpr bool exact = false;
  static constexpr double prune = 1e-14;
  static cplx from(cplx c) { return c; }
  static cplx from_int(long v) { return cplx(double(v), 0.0); }
  static cplx from_ratio(long p, long q) { return cplx(double(p) / double(q), 0.0); }
  static cplx to_cplx(const cplx& c) { return c; }
  static cplx conj(const cplx& c) { return std::conj(c); }
  static double magnitude(const cplx& c) { return std::abs(c); }
  static bool negligible(const cplx& c) { return std::abs(c) < prune; }
  static bool is_zero(const cplx& c) { return c == cplx(0.0, 0.0); }
  static cplx imag_unit() { return cplx(0.0, 1.0); }
};

template <>
struct scalar_traits<exact_complex> {
  static constexpr bool exact = true;
  // Doubles are dyadic rationals, so this conversion is exact.
  static exact_complex from(cplx c) { return {rational(c.real()), rational(c.imag())}; }
  static exact_complex from_int(long v) { return {rational(v), rational(0)}; }
  static exact_complex from_ratio(long p, long q) { return {rational(p, q), rational(0)}; }
  static cplx to_cplx(const exact_complex& c) {
    return {c.re.convert_to<double>(), c.im.convert_to<double>()};
  }
  static exact_complex conj(const exact_complex& c) { return {c.re, -c.im}; }
  static double magnitude(const exact_complex& c) { return std::abs(to_cplx(c)); }
  static bool negligible(const exact_complex& c) { return is_zero(c); }
  static bool is_zero(const exact_complex& c) { return c.re == 0 && c.im == 0; }
  static exact_complex imag_unit() { return {rational(0), rational(1)}; }
};

template <class S>
inline S sconj(const S& s) { return scalar_traits<S>::conj(s); }

template <class S>
inline S sfrom(cplx c) { return scalar_traits<S>::from(c); }

template <class S>
inline S sint(long v) { return scalar_traits<S>::from_int(v); }

template <class S>
inline S sratio(long p, long q) { return scalar_traits<S>::from_ratio(p, q); }

template <class S>
inline S simag() { return scalar_traits<S>::imag_unit(); }

template <class S>
inline double smag(const S& s) { return scalar_traits<S>::magnitude(s); }

template <class S>
inline cplx to_cplx(const S& s) { return scalar_traits<S>::to_cplx(s); }

}  // namespace acgeom
