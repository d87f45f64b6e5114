#pragma once

#include "geodesic.hpp"
#include "manifold_spec.hpp"
#include "report.hpp"

#include <filesystem>

namespace acgeom {

struct command_options {
  double tol = 1e-10;
  std::optional<std::uint64_t> seed;
  bool exact = false;
  // geodesic
  std::vector<cplx> z, v;
  std::vector<double> scales{1, 0.5, 0.25, 0.125};
  int steps = 256;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"validate",  "torsion",   "normalize",   "identities",
                                              "curvature", "decompose", "asymptotics", "geodesic"};
  return names;
}

namespace cmd_detail {

inline std::string complex_text(cplx c) {
  std::ostringstream os;
  os << std::setprecision(6) << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i";
  return os.str();
}

inline std::string idx(int i) { return std::to_string(i + 1); }

inline bool is_normal_orthonormal(const structure& s, const cjet_matrix& h, double tol) {
  try {
    require_normal_orthonormal(s, h, tol);
    return true;
  } catch (const precondition_error&) {
    return false;
  }
}

inline double adaptation_defect(const structure& s) {
  double d = 0;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      d = std::max(d, std::abs(s.B(i, j).constant_term()));
      d = std::max(d, std::abs(s.A(i, j).constant_term() - (i == j ? cplx(0, 1) : cplx(0))));
    }
  return d;
}

inline bool has_linear_terms(const cjet_matrix& h) {
  for (auto& f : h.entries())
    if (max_abs(homogeneous(f, 1)) > 0) return true;
  return false;
}

inline void validate(report& r, const manifold_spec& spec, const structure& s, const cjet_matrix& h,
                     const command_options& o) {
  auto res = validate_structure(s);
  r.check("A^2 + I + conj(B) B", res.square, o.tol);
  r.check("conj(A) B + B A", res.commute, o.tol);
  r.check("adapted at the origin", adaptation_defect(s), o.tol);
  r.check("metric hermitian defect", hermitian_defect(h), o.tol);
  r.at_least("smallest eigenvalue of H(0)", smallest_eigenvalue_at_origin(h), o.tol);
  r.info("normal form violation through order " + std::to_string(s.order), normal_form_violation(s, s.order));
  if (o.exact) {
    if (spec.kind == structure_kind::deformation) {
      r.info("exact structure residual", std::nullopt, "not supported for deformation specs");
    } else {
      auto ex = build_structure<exact_complex>(spec);
      r.check("exact structure residual", validate_structure(ex).value(), 0.0, "rational arithmetic");
    }
  }
}

inline void torsion(report& r, const structure& s, const command_options& o) {
  auto g = make_geometry(s);
  auto t = compute_torsion(*g);
  r.check("bracket torsion vs 4 N_J identity", nijenhuis_check(*g, t), o.tol);
  r.info("max torsion coefficient", t.max_coefficient());
  const int n = s.n;
  for (int q = 0; q < n; ++q)
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        const cplx c = t.Nbar[q](k, l).constant_term();
        if (std::abs(c) > 0) r.info("Nbar^" + idx(q) + "_{" + idx(k) + "," + idx(l) + "}(0)", std::abs(c), complex_text(c));
      }
  if (s.order >= 2 && normal_form_violation(s, std::min(3, s.order)) <= o.tol) {
    auto jet1 = torsion_jet_normal(s, o.tol);
    double d = 0;
    for (int q = 0; q < n; ++q) d = std::max(d, max_diff(jet1[q], t.Nbar[q], 1));
    r.check("torsion 1-jet closed form vs brackets", d, o.tol);
    for (int k = 0; k <= 1; ++k) {
      auto dg = diagnose_torsion_jet(s, k);
      r.check("torsion " + std::to_string(k) + "-jet vanishing criterion", dg.consistent() ? 0.0 : 1.0, 0.0,
              dg.torsion_vanishes ? "vanishes" : "does not vanish");
    }
  } else {
    r.info("torsion 1-jet closed form vs brackets", std::nullopt, "coordinates not normal");
  }
}

inline void normalize(report& r, const structure& s, const command_options& o) {
  auto res = normalize_to_order(s, s.order);
  for (std::size_t m = 0; m < res.stage_violation.size(); ++m)
    r.info("violation after stage " + std::to_string(m + 1), res.stage_violation[m]);
  r.check("normal form violation", normal_form_violation(res.st, s.order), o.tol);
  r.check("structure residual after change", validate_structure(res.st).value(), o.tol);
  if (s.order <= 5) r.check("A from B closed form", max_diff(A_from_B(res.st.B), res.st.A), o.tol);
  r.check("second run is the identity", normalize_to_order(res.st, s.order).identity ? 0.0 : 1.0, 0.0);
  r.info("input already normal", res.identity ? 1.0 : 0.0);
}

inline void identities(report& r, const structure& s, std::uint64_t seed, const command_options& o) {
  auto g = make_geometry(s);
  for (auto& row : fundamental_identities_check(*g, seed))
    r.check(row.name, row.residual, o.tol, "through degree " + std::to_string(row.order_checked));
}

inline void curvature(report& r, const structure& s, const cjet_matrix& h, std::uint64_t seed,
                      const command_options& o) {
  auto g = make_geometry(s);
  auto c = chern_connection(*g, h);
  auto k = acgeom::curvature(*g, c);
  r.check("hermitian compatibility", hermitian_compatibility(*g, h, c), o.tol);
  r.check("dA + A^A split into blocks", curvature_split_residual(*g, c, k), o.tol);
  auto sym = curvature_pointwise_symmetries(*g, h, k, seed);
  r.check("h(i Theta x, y) hermitian at sample points", sym.hermitian, o.tol);
  r.check("omega(C eta, eta) real at sample points", sym.omega_real, o.tol);
  r.check("omega(C eta, J eta) = 0 at sample points", sym.omega_J, o.tol);
  auto c0 = curvature_at_origin(k);
  if (is_normal_orthonormal(s, h, o.tol)) {
    r.check("C(0) closed form vs blocks", max_diff(curvature_origin_formula(s, h, o.tol), c0), o.tol);
    r.check("conj(C^{j,k}_{l,m}) = C^{k,j}_{m,l} at 0", curvature_hermitian_defect(c0), o.tol);
    r.check("Theta11(0) from H and A''", pointwise_curvature_check(*g, h, c, k, o.tol), o.tol);
  } else {
    r.info("C(0) closed form vs blocks", std::nullopt, "needs normal coordinates and H(0) = I");
  }
  const int n = s.n;
  for (int j = 0; j < n; ++j)
    for (int q = 0; q < n; ++q)
      for (int m = 0; m < n; ++m)
        for (int l = 0; l < n; ++l) {
          const cplx v = c0(j, q, m, l);
          if (std::abs(v) > 1e-14)
            r.info("C^{" + idx(j) + "," + idx(q) + "}_{" + idx(m) + "," + idx(l) + "}(0)", v.real(), complex_text(v));
        }
}

inline void decompose(report& r, const structure& s, const cjet_matrix& h, const command_options& o) {
  auto d = decompose_chern_lc(*make_geometry(s), h);
  r.check("D - nabla - delta + N (coefficients)", d.residual, o.tol);
  for (std::size_t i = 0; i < d.residual_at.size(); ++i)
    r.check("D - nabla - delta + N at sample point " + std::to_string(i), d.residual_at[i], o.tol);
  r.check("torsion = gamma20 + gamma02 - N(x,y) + N(y,x)", d.torsion_residual, o.tol);
  r.info("torsion with -(gamma20 + gamma02)", d.torsion_residual_opposite, "printed sign");
  r.check("Levi-Civita torsion", d.lc_torsion, o.tol);
  r.check("delta real", d.delta_reality, o.tol);
  r.info("max |d omega|", d.d_omega);
  r.info("max |delta|", d.delta_max);
  r.info("max |N^omega|", d.N_max);
  r.info("max |gamma02|", d.gamma02_max);
}

inline void asymptotics(report& r, const structure& s, const cjet_matrix& h, const command_options& o) {
  auto g = make_geometry(s);
  auto c = chern_connection(*g, h);
  auto k = chern_coordinate_connection(*g, c);
  auto cmp = compare(connection_asymptotics(s, h, o.tol), connection_expansion(k));
  r.check("H^p constant terms", cmp.H1, o.tol);
  r.check("S^{p,h}", cmp.S_ph, o.tol);
  r.check("S^{p,hbar}", cmp.S_phb, o.tol);
  r.check("S^{pbar,h}", cmp.S_pbh, o.tol, "sign-corrected closed form");
  r.check("S^{pbar,hbar}", cmp.S_pbhb, o.tol, "sign-corrected closed form");
  r.check("metric in coordinates", metric_in_coordinates_residual(*g, h, metric_in_coordinates(s, h)), o.tol);
  r.info("metric in coordinates with (i/4) weight",
         metric_in_coordinates_residual(*g, h, metric_in_coordinates_weighted(s, h, cplx(0, 0.25))), "printed weight");
  const double off = off_diagonal_block_residual(s, k);
  if (has_linear_terms(h)) r.info("off-diagonal block -(i/2) d conj(jet2 B)", off, "H has linear terms");
  else r.check("off-diagonal block -(i/2) d conj(jet2 B)", off, o.tol);
  auto sf = special_frame(*g, h, o.tol);
  r.check("special frame A(0)", sf.A_origin, o.tol);
  r.check("special frame A''(0)", sf.Asecond_origin, o.tol);
  r.check("special frame del A''(0)", sf.dAsecond_origin, o.tol);
  r.check("special frame H off-pattern", sf.off_pattern, o.tol);
  auto lc = frame_curvature_identities(*g, sf.sigma, 3, o.tol);
  r.check("curvature vs delbar del h at 0", lc.scalar, o.tol);
  r.check("i del delbar |sigma|^2 at 0", lc.plurisub, o.tol);
  const double sd = symplectic_symmetry_defect(h);
  if (sd <= o.tol) {
    auto sn = symplectic_normalize(s, h, o.tol);
    r.check("symplectic normalization linear residual", sn.linear_residual, o.tol);
    r.check("symplectic normalization keeps linear B", sn.B_linear_change, o.tol);
  } else {
    r.info("symplectic normalization", sd, "linear metric terms not symmetric");
  }
}

inline std::vector<cplx> default_velocity(int n) {
  std::vector<cplx> v(n);
  for (int k = 0; k < n; ++k) v[k] = 0.04 / double(1 << k);
  return v;
}

inline void geodesic(report& r, const structure& s, const cjet_matrix& h, const command_options& o) {
  const int n = s.n;
  auto z = o.z.empty() ? std::vector<cplx>(n, cplx(0)) : o.z;
  auto v = o.v.empty() ? default_velocity(n) : o.v;
  if (int(z.size()) != n || int(v.size()) != n) throw precondition_error("--z and --v need n complex values");
  auto setup = make_exp_setup(s, h, o.tol);
  auto probe = error_scaling_probe(setup, z, v, o.scales, o.steps);
  for (auto& row : probe.rows)
    r.ladder.push_back({row.s, row.e, std::isnan(row.slope_partial) ? std::nullopt : std::optional(row.slope_partial)});
  if (probe.exact) {
    double e = 0;
    for (auto& row : probe.rows) e = std::max(e, row.e);
    r.check("flat: exp_z(v) = z + v", e, 1e-12);
  } else {
    r.at_least("fitted error slope", probe.slope, 2.8);
  }
  auto g = make_geometry(s);
  auto k = chern_coordinate_connection(*g, chern_connection(*g, h));
  r.check("quadratic part vs connection", quadratic_consistency(setup.coeffs, k), std::min(o.tol, 1e-11));
  r.info("quadratic part vs connection, printed terms",
         quadratic_consistency(setup.coeffs, k, 11, exp_terms::displayed));
  auto num = integrate_geodesic(setup.field, z, v, o.steps);
  r.check("Richardson endpoint change", num.richardson, 1e-12, std::to_string(num.steps) + " steps");
  r.check("endpoint conjugate pairs", num.reality_defect, 1e-12);
  r.check("reversibility", reversibility_defect(setup.field, z, v, o.steps), 1e-10);
  if (!probe.exact) {
    std::vector<cplx> v3(v);
    for (auto& x : v3) x *= 3.0;
    const double ratio = convergence_ratio(setup.field, z, v3);
    r.check("RK4 step-halving ratio / 16 - 1", std::abs(ratio / 16 - 1), 0.2, format_number(ratio));
  }
}

}  // namespace cmd_detail

// Module errors become failed rows; the report is deterministic for fixed (spec, options).
inline report run_command(const std::string& command, const manifold_spec& spec, const command_options& o = {}) {
  report r{command, spec.id, {}, {}};
  const std::uint64_t seed = o.seed ? *o.seed : spec.seed;
  try {
    auto s = build_structure(spec);
    auto h = build_metric(spec);
    if (command == "validate") cmd_detail::validate(r, spec, s, h, o);
    else if (command == "torsion") cmd_detail::torsion(r, s, o);
    else if (command == "normalize") cmd_detail::normalize(r, s, o);
    else if (command == "identities") cmd_detail::identities(r, s, seed, o);
    else if (command == "curvature") cmd_detail::curvature(r, s, h, seed, o);
    else if (command == "decompose") cmd_detail::decompose(r, s, h, o);
    else if (command == "asymptotics") cmd_detail::asymptotics(r, s, h, o);
    else if (command == "geodesic") cmd_detail::geodesic(r, s, h, o);
    else throw structural_error("unknown command " + command);
  } catch (const trust_radius_error& e) {
    r.failure("error", std::string(e.what()) + " at t=" + format_number(e.exit_time));
  } catch (const validation_error& e) {
    r.failure("error", std::string(e.what()) + " (residual " + format_number(e.residual) + ")");
  } catch (const precondition_error& e) {
    r.failure("error", std::string("precondition: ") + e.what());
  } catch (const singularity_error& e) {
    r.failure("error", e.what());
  } catch (const structural_error& e) {
    r.failure("error", e.what());
  }
  return r;
}

// Every *.json file of a directory, sorted by name, run in parallel.
inline std::vector<std::string> spec_files(const std::filesystem::path& dir) {
  std::vector<std::string> files;
  for (auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<report> run_batch(const std::string& command, const std::vector<manifold_spec>& specs,
                                     const command_options& o = {}) {
  std::vector<std::future<report>> jobs;
  for (auto& s : specs) jobs.push_back(std::async(std::launch::async, [&, s] { return run_command(command, s, o); }));
  std::vector<report> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace acgeom
