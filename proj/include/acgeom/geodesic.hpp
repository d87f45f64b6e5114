#pragma once

#include "chern.hpp"

#include <algorithm>
#include <array>
#include <future>
#include <limits>

namespace acgeom {

// ---------------------------------------------------------------------------
// Asymptotic exponential map of the Chern connection in normal coordinates.

enum class exp_terms {
  complete,  // every O(|z| |v|^2) term of -1/2 D_u u
  displayed  // without the v_p conj(v_l) terms coming from the dz part of d conj(jet_2 B)
};

// max |H^p_{l,k} + H^l_{p,k}|
inline double linear_metric_symmetry(const cjet_matrix& h) {
  const int n = h.rows();
  double d = 0;
  for (int p = 0; p < n; ++p)
    for (int l = 0; l < n; ++l)
      for (int k = 0; k < n; ++k) d = std::max(d, std::abs(slot::lin(h(l, k), p) + slot::lin(h(p, k), l)));
  return d;
}

struct exp_coefficients {
  int n = 0;
  asymptotic_coefficients S;
  std::vector<cjet> Bc;  // conj(jet_2 B_{k,l}) at [k * n + l]
};

inline exp_coefficients exp_asymptotic_coefficients(const structure& s, const cjet_matrix& h, double tol = 1e-10) {
  require_normal_orthonormal(s, h, tol);
  if (linear_metric_symmetry(h) > tol) throw precondition_error("linear metric terms are not antisymmetric in (p, l)");
  exp_coefficients e{s.n, connection_asymptotics(s, h, tol), {}};
  for (int k = 0; k < s.n; ++k)
    for (int l = 0; l < s.n; ++l) e.Bc.push_back(conj(truncate(s.B(k, l), 2)));
  return e;
}

// zbar_p zbar_h coefficient, halved when p != h
inline cplx antiholo2(const cjet& f, int p, int h) {
  const cplx c = f.coeff(mono::unit(f.n() + p) + mono::unit(f.n() + h));
  return p == h ? c : 0.5 * c;
}

inline std::vector<cplx> exp_asymptotic(const exp_coefficients& e, const std::vector<cplx>& z,
                                        const std::vector<cplx>& v, exp_terms terms = exp_terms::complete) {
  const int n = e.n;
  const auto& S = e.S;
  const cplx iq(0, 0.25);
  std::vector<cplx> r(n);
  for (int k = 0; k < n; ++k) {
    cplx quad = 0, anti = 0, mixed_extra = 0;
    for (int l = 0; l < n; ++l)
      for (int p = 0; p < n; ++p) {
        const auto& bc = e.Bc[k * n + l];
        cplx bar = slot::antilin(bc, p);
        for (int hh = 0; hh < n; ++hh) {
          const cplx zh = z[hh], zbh = std::conj(z[hh]);
          quad += (S.at(S.Shat_ph, p, hh, k, l) * zh + S.at(S.S_phb, p, hh, k, l) * zbh) * v[p] * v[l];
          quad += (S.at(S.S_pbh, p, hh, k, l) * zh + S.at(S.S_pbhb, p, hh, k, l) * zbh) * std::conj(v[p]) * v[l];
          // d/dzbar_p conj(jet_2 B): conj(B^{p,hbar}) z_h + 2 conj(B^{p,h}) zbar_h
          bar += slot::mixed(bc, hh, p) * zh + 2.0 * antiholo2(bc, p, hh) * zbh;
          // d/dz_p conj(jet_2 B): conj(B^{h,pbar}) zbar_h
          mixed_extra += slot::mixed(bc, p, hh) * zbh * v[p] * std::conj(v[l]);
        }
        anti += bar * std::conj(v[p]) * std::conj(v[l]);
      }
    r[k] = z[k] + v[k] - 0.5 * quad + iq * anti;
    if (terms == exp_terms::complete) r[k] += iq * mixed_extra;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Numeric geodesics of a coordinate connection.

// All G[v](c, a) flattened for repeated evaluation at one point.
class connection_field {
 public:
  explicit connection_field(const coordinate_connection& k) : n_(k.n) {
    if (n_ > 8) throw structural_error("geodesic: dimension above 8");
    const int d = 2 * n_;
    for (int v = 0; v < d; ++v)
      for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a) {
          const auto& f = k.G[v](c, a);
          const int eff = f.effective_order();
          for (auto& [m, coeff] : f.terms()) {
            if (mono::degree(m) > eff) continue;
            term t{(v * d + c) * d + a, {}, coeff};
            for (int x = 0; x < d; ++x) t.exps[x] = mono::exponent(m, x);
            max_deg_ = std::max(max_deg_, mono::degree(m));
            terms_.push_back(t);
          }
        }
  }

  int n() const { return n_; }

  // values[(v * 2n + c) * 2n + a] at z; safe to call concurrently.
  void evaluate(const std::vector<cplx>& z, std::vector<cplx>& values) const {
    const int d = 2 * n_;
    values.assign(std::size_t(d) * d * d, cplx(0));
    std::vector<cplx> pw(std::size_t(d) * (max_deg_ + 1), cplx(1));
    for (int x = 0; x < d; ++x) {
      const cplx base = x < n_ ? z[x] : std::conj(z[x - n_]);
      for (int e = 1; e <= max_deg_; ++e) pw[x * (max_deg_ + 1) + e] = pw[x * (max_deg_ + 1) + e - 1] * base;
    }
    for (auto& t : terms_) {
      cplx m = t.coeff;
      for (int x = 0; x < d; ++x)
        if (t.exps[x]) m *= pw[x * (max_deg_ + 1) + t.exps[x]];
      values[t.slot] += m;
    }
  }

 private:
  struct term {
    int slot;
    std::array<int, 2 * 8> exps;
    cplx coeff;
  };
  int n_;
  int max_deg_ = 0;
  std::vector<term> terms_;
};

struct geodesic_state {
  std::vector<cplx> x;  // 2n complexified position, x[n + k] tracks conj(x[k])
  std::vector<cplx> u;  // 2n complexified velocity
};

inline double trust_radius() { return 0.2; }

struct integration_result {
  geodesic_state end;
  int steps = 0;
  double reality_defect = 0;  // max |x[n+k] - conj(x[k])|, same for u
};

// Classical RK4 for x' = u, u'_c = -sum G[v](c, a)(x) u_v u_a on [0, t1].
inline integration_result integrate_geodesic_state(const connection_field& field, geodesic_state s, int steps,
                                                   double t1 = 1.0, double radius = trust_radius()) {
  const int n = field.n();
  const int d = 2 * n;
  if (steps < 1) throw precondition_error("geodesic: steps must be positive");
  std::vector<cplx> g;
  auto accel = [&](const geodesic_state& y) {
    field.evaluate(std::vector<cplx>(y.x.begin(), y.x.begin() + n), g);
    std::vector<cplx> acc(d);
    for (int v = 0; v < d; ++v)
      for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a) acc[c] -= g[(v * d + c) * d + a] * y.u[v] * y.u[a];
    return acc;
  };
  auto axpy = [d](const geodesic_state& y, double h, const std::vector<cplx>& dx, const std::vector<cplx>& du) {
    geodesic_state r = y;
    for (int i = 0; i < d; ++i) r.x[i] += h * dx[i], r.u[i] += h * du[i];
    return r;
  };
  auto norm = [n](const std::vector<cplx>& x) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += std::norm(x[i]);
    return std::sqrt(s);
  };
  const double h = t1 / steps;
  for (int i = 0; i < steps; ++i) {
    auto a1 = accel(s);
    auto s2 = axpy(s, h / 2, s.u, a1);
    auto a2 = accel(s2);
    auto s3 = axpy(s, h / 2, s2.u, a2);
    auto a3 = accel(s3);
    auto s4 = axpy(s, h, s3.u, a3);
    auto a4 = accel(s4);
    for (int c = 0; c < d; ++c) {
      s.x[c] += h / 6 * (s.u[c] + 2.0 * s2.u[c] + 2.0 * s3.u[c] + s4.u[c]);
      s.u[c] += h / 6 * (a1[c] + 2.0 * a2[c] + 2.0 * a3[c] + a4[c]);
    }
    if (norm(s.x) > radius) throw trust_radius_error("geodesic left the trust radius", (i + 1) * h);
  }
  integration_result r{s, steps, 0};
  for (int k = 0; k < n; ++k) {
    r.reality_defect = std::max(r.reality_defect, std::abs(s.x[n + k] - std::conj(s.x[k])));
    r.reality_defect = std::max(r.reality_defect, std::abs(s.u[n + k] - std::conj(s.u[k])));
  }
  return r;
}

inline geodesic_state initial_state(const std::vector<cplx>& z, const std::vector<cplx>& v) {
  const int n = int(z.size());
  geodesic_state s{std::vector<cplx>(2 * n), std::vector<cplx>(2 * n)};
  for (int k = 0; k < n; ++k) {
    s.x[k] = z[k], s.x[n + k] = std::conj(z[k]);
    s.u[k] = v[k], s.u[n + k] = std::conj(v[k]);
  }
  return s;
}

struct numeric_endpoint {
  std::vector<cplx> endpoint;
  std::vector<cplx> velocity;
  int steps = 0;
  double richardson = 0;  // endpoint change between the last two step counts
  double reality_defect = 0;
};

// Doubles the step count from `steps` until the endpoint moves by less than `tol`.
inline numeric_endpoint integrate_geodesic(const connection_field& field, const std::vector<cplx>& z,
                                           const std::vector<cplx>& v, int steps = 256, double tol = 1e-12,
                                           int max_steps = 1 << 14) {
  const int n = field.n();
  if (int(z.size()) != n || int(v.size()) != n) throw structural_error("geodesic: point dimension mismatch");
  auto run = [&](int m) { return integrate_geodesic_state(field, initial_state(z, v), m); };
  auto prev = run(steps);
  numeric_endpoint r;
  for (;;) {
    auto next = run(2 * prev.steps);
    double diff = 0;
    for (int k = 0; k < n; ++k) diff = std::max(diff, std::abs(next.end.x[k] - prev.end.x[k]));
    r.richardson = diff;
    prev = next;
    if (diff < tol || prev.steps >= max_steps) break;
  }
  r.endpoint.assign(prev.end.x.begin(), prev.end.x.begin() + n);
  r.velocity.assign(prev.end.u.begin(), prev.end.u.begin() + n);
  r.steps = prev.steps;
  r.reality_defect = prev.reality_defect;
  return r;
}

struct geodesic_result {
  std::vector<cplx> z, v;
  std::vector<cplx> endpoint_asymptotic, endpoint_numeric;
  double error = 0;
  int steps = 0;
  double richardson = 0;
};

inline double max_deviation(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline geodesic_result compare_exp(const exp_coefficients& e, const connection_field& field, const std::vector<cplx>& z,
                                   const std::vector<cplx>& v, int steps = 256,
                                   exp_terms terms = exp_terms::complete) {
  geodesic_result r{z, v, exp_asymptotic(e, z, v, terms), {}, 0, 0, 0};
  auto num = integrate_geodesic(field, z, v, steps);
  r.endpoint_numeric = num.endpoint;
  r.steps = num.steps;
  r.richardson = num.richardson;
  r.error = max_deviation(r.endpoint_asymptotic, r.endpoint_numeric);
  return r;
}

// Everything needed to compare the two exponential maps for one germ.
struct exp_setup {
  exp_coefficients coeffs;
  connection_field field;
};

inline exp_setup make_exp_setup(const structure& s, const cjet_matrix& h, double tol = 1e-10) {
  auto g = make_geometry(s);
  auto k = chern_coordinate_connection(*g, chern_connection(*g, h));
  return {exp_asymptotic_coefficients(s, h, tol), connection_field(k)};
}

// ---------------------------------------------------------------------------
// Error scaling of the asymptotic formula.

struct scaling_row {
  double s = 0;
  double e = 0;
  double slope_partial = std::numeric_limits<double>::quiet_NaN();  // against the previous scale
};

struct scaling_probe {
  std::vector<scaling_row> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // least-squares fit of log e on log s
  bool exact = false;                                       // every e at the integrator floor
};

inline double noise_floor() { return 1e-13; }

inline scaling_probe error_scaling_probe(const exp_setup& setup, const std::vector<cplx>& z, const std::vector<cplx>& v,
                                         const std::vector<double>& scales = {1, 0.5, 0.25, 0.125}, int steps = 256,
                                         exp_terms terms = exp_terms::complete) {
  std::vector<std::future<double>> jobs;
  for (double s : scales)
    jobs.push_back(std::async(std::launch::async, [&, s] {
      std::vector<cplx> zs(z), vs(v);
      for (auto& x : zs) x *= s;
      for (auto& x : vs) x *= s;
      return compare_exp(setup.coeffs, setup.field, zs, vs, steps, terms).error;
    }));
  scaling_probe p;
  for (std::size_t i = 0; i < scales.size(); ++i) p.rows.push_back({scales[i], jobs[i].get()});
  p.exact = std::all_of(p.rows.begin(), p.rows.end(), [](const scaling_row& r) { return r.e < noise_floor(); });
  if (p.exact) return p;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const double x = std::log(p.rows[i].s), y = std::log(p.rows[i].e);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    if (i > 0) p.rows[i].slope_partial = (y - std::log(p.rows[i - 1].e)) / (x - std::log(p.rows[i - 1].s));
  }
  const double m = double(p.rows.size());
  p.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return p;
}

// ---------------------------------------------------------------------------
// Integrator self-checks.

// |x_N - x_2N| / |x_2N - x_4N|; about 16 for a fourth-order method.
inline double convergence_ratio(const connection_field& field, const std::vector<cplx>& z, const std::vector<cplx>& v,
                                int steps = 4) {
  auto end = [&](int m) { return integrate_geodesic_state(field, initial_state(z, v), m).end.x; };
  auto a = end(steps), b = end(2 * steps), c = end(4 * steps);
  return max_deviation(a, b) / max_deviation(b, c);
}

// Integrates forward, then back from the endpoint with the reversed velocity.
inline double reversibility_defect(const connection_field& field, const std::vector<cplx>& z,
                                   const std::vector<cplx>& v, int steps = 256) {
  auto fwd = integrate_geodesic(field, z, v, steps);
  std::vector<cplx> back_v(fwd.velocity);
  for (auto& x : back_v) x = -x;
  auto back = integrate_geodesic(field, fwd.endpoint, back_v, steps);
  return max_deviation(back.endpoint, z);
}

// Quadratic part of the asymptotic formula against -1/2 sum G[v](k, a)(z) u_v u_a,
// both through first order in z, on seeded (z, v).
inline double quadratic_consistency(const exp_coefficients& e, const coordinate_connection& k, std::uint64_t seed = 11,
                                    exp_terms terms = exp_terms::complete) {
  const int n = e.n;
  const int d = 2 * n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<cplx> z(n), v(n), zero(n, cplx(0));
    for (auto& x : z) x = {u(rng), u(rng)};
    for (auto& x : v) x = {u(rng), u(rng)};
    // the formula is affine in z for fixed v; compare its z-linear part and constant part
    auto at = exp_asymptotic(e, z, v, terms), at0 = exp_asymptotic(e, zero, v, terms);
    std::vector<cplx> uu(d);
    for (int i = 0; i < n; ++i) uu[i] = v[i], uu[n + i] = std::conj(v[i]);
    for (int c = 0; c < n; ++c) {
      cplx lin = 0, cst = 0;
      for (int x = 0; x < d; ++x)
        for (int a = 0; a < d; ++a) {
          const auto& f = k.G[x](c, a);
          cplx l1 = 0;
          for (int h = 0; h < n; ++h) l1 += slot::lin(f, h) * z[h] + slot::antilin(f, h) * std::conj(z[h]);
          lin += -0.5 * l1 * uu[x] * uu[a];
          cst += -0.5 * f.constant_term() * uu[x] * uu[a];
        }
      worst = std::max(worst, std::abs((at[c] - at0[c]) - (lin + z[c])));
      worst = std::max(worst, std::abs(at0[c] - v[c] - cst));
    }
  }
  return worst;
}

}  // namespace acgeom
