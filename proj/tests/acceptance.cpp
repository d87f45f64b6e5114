// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "oracles.hpp"

#include <acgeom/commands.hpp>
#include <acgeom/fixtures.hpp>

#include <array>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sys/wait.h>

using namespace acgeom;

namespace {

struct outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      details.push_back("FAILED " + what);
    }
  }
  void at_most(double value, double bound, const std::string& what) {
    require(value <= bound, what + " = " + format_number(value) + " (bound " + format_number(bound) + ")");
  }
  void note(const std::string& s) { details.push_back(s); }
};

struct item {
  std::string name;
  structure st;
  cjet_matrix h;
};

std::vector<item> normal_fixtures() {
  return {{"fix-b", fix_b(), cjet_matrix::identity(2, 2, 4)},
          {"fix-b/random metric", fix_b(), random_metric(1, 2, 4)},
          {"normal n=2", random_normal(2, 2, 3), random_metric(2, 2, 3)},
          {"normal n=3", random_normal(3, 3, 3), random_metric(3, 3, 3)},
          {"normal n=2 N=4", random_normal(6, 2, 4), random_metric(6, 2, 4)}};
}

std::vector<item> all_fixtures() {
  auto v = normal_fixtures();
  v.push_back({"fix-j0", fix_j0(), cjet_matrix::identity(2, 2, 4)});
  v.push_back({"symplectic", fix_j0(), symplectic_metric()});
  v.push_back({"non-closed", fix_j0(), non_closed_metric()});
  v.push_back({"fix-b/non-closed", fix_b(), non_closed_metric()});
  v.push_back({"conformal", fix_j0(), conformal_metric(2, 4)});
  v.push_back({"deformation", random_deformation(4, 2, 3), random_metric(4, 2, 3)});
  return v;
}

cjet_matrix single_B(int order, std::vector<int> alpha, cplx c) {
  cjet_matrix b(2, 2, 2, order);
  b(0, 0).add_term(alpha, {0, 0}, c);
  return b;
}

outcome fundamental_identities() {
  outcome o;
  std::vector<std::pair<std::string, structure>> cases{{"fix-j0", fix_j0()}, {"fix-b", fix_b()}};
  const std::array<int, 5> dims{2, 2, 2, 3, 3};
  for (int seed = 1; seed <= 5; ++seed)
    cases.push_back({"deformation seed " + std::to_string(seed), random_deformation(seed, dims[seed - 1], 4)});
  double worst = 0;
  for (auto& [name, s] : cases) {
    for (auto& r : fundamental_identities_check(*make_geometry(s))) {
      o.at_most(r.residual, 1e-10, name + ": " + r.name);
      if (name == "fix-j0") o.require(r.residual == 0.0, "fix-j0 not exactly 0: " + r.name);
      worst = std::max(worst, r.residual);
    }
  }
  o.note("7 identities on " + std::to_string(cases.size()) + " structures, max residual " + format_number(worst) +
         ", fix-j0 exactly 0");
  return o;
}

outcome structure_constraint() {
  outcome o;
  double worst = 0;
  std::vector<std::pair<std::string, structure>> cases{{"fix-b", fix_b()}, {"fix-b N=5", fix_b(5)}};
  for (int seed = 1; seed <= 4; ++seed) {
    cases.push_back({"deformation " + std::to_string(seed), random_deformation(seed, 2 + seed % 2, 4)});
    cases.push_back({"normal " + std::to_string(seed), random_normal(seed, 2 + seed % 2, 3)});
  }
  for (auto& f : spec_files(ACGEOM_SPECS)) cases.push_back({f, build_structure(load_manifold_spec(f))});
  for (auto& [name, s] : cases) {
    const double r = validate_structure(s).value();
    o.at_most(r, 1e-11, name);
    worst = std::max(worst, r);
  }
  std::mt19937_64 rng(2024);
  int exact_cases = 0;
  for (int trial = 0; trial < 6; ++trial, ++exact_cases) {
    auto b = oracle::random_exact_normal_B(rng, 2, 4);
    auto closed = A_from_B(b);
    auto solved = oracle::solve_A_degreewise(b);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) o.require(closed(i, j) == solved(i, j), "exact closed form vs degreewise solve");
  }
  auto fb = fix_b<exact_complex>();
  o.require(validate_structure(fb).value() == 0.0, "exact fix-b residual");
  o.note("max residual " + format_number(worst) + " over " + std::to_string(cases.size()) + " structures; " +
         std::to_string(exact_cases) + " rational B jets (n=2, degree <= 4) give zero discrepancy");
  return o;
}

outcome normal_form() {
  outcome o;
  double worst = 0;
  for (int seed = 1; seed <= 4; ++seed) {
    auto s = random_deformation(seed, 2 + seed % 2, 3);
    auto r = normalize_to_order(s, 3);
    const double v = normal_form_violation(r.st, 3);
    o.at_most(v, 1e-11, "violation seed " + std::to_string(seed));
    o.require(normalize_to_order(r.st, 3).identity, "rerun not identity, seed " + std::to_string(seed));
    worst = std::max(worst, v);
  }
  double dev = 0;
  std::vector<std::pair<structure, std::vector<cjet>>> changes;
  {
    std::vector<cjet> c(2, cjet(2, 4));
    c[1].add_term({4, 0}, {0, 0}, 0.1);
    changes.push_back({fix_b(), c});
  }
  {
    std::vector<cjet> c(2, cjet(2, 4));
    c[0].add_term({1, 3}, {0, 0}, cplx(0.2, -0.1));
    c[1].add_term({2, 2}, {0, 0}, cplx(-0.05, 0.15));
    changes.push_back({normalize_to_order(random_deformation(7, 2, 4), 3).st, c});
  }
  for (auto& [s, c] : changes) {
    auto r = verify_holomorphic_invariance(s, 3, c);
    o.at_most(r.deviation, 1e-11, "holomorphic invariance deviation");
    o.at_most(r.violation, 1e-11, "holomorphic invariance violation");
    dev = std::max(dev, r.deviation);
  }
  o.note("N=3 violation " + format_number(worst) + ", reruns are identities, degree-4 holomorphic change deviation " +
         format_number(dev));
  return o;
}

outcome torsion() {
  outcome o;
  double worst = 0;
  for (auto& c : all_fixtures()) {
    auto g = make_geometry(c.st);
    const double r = nijenhuis_check(*g, compute_torsion(*g));
    o.at_most(r, 1e-11, c.name + " bracket vs 4 N_J");
    worst = std::max(worst, r);
  }
  const cplx nb = compute_torsion(*make_geometry(fix_b())).Nbar[0](0, 1).constant_term();
  o.at_most(std::abs(nb - cplx(-0.05, 0.15)), 1e-12, "fix-b Nbar^1_{1,2}(0)");
  struct diag_case {
    std::string name;
    structure s;
    int k;
    bool vanishes;
  };
  const cplx b{0.3, 0.1};
  std::vector<diag_case> cases{{"k=0, B = b z2^2", structure_from_B(single_B(4, {0, 2}, b)), 0, true},
                               {"k=0, B = b z2", fix_b(), 0, false},
                               {"k=1, B = b z2^3", structure_from_B(single_B(4, {0, 3}, b)), 1, true},
                               {"k=1, B = b z2^2", structure_from_B(single_B(4, {0, 2}, b)), 1, false}};
  for (auto& c : cases) {
    auto d = diagnose_torsion_jet(c.s, c.k);
    o.require(d.consistent() && d.torsion_vanishes == c.vanishes, "diagnostic " + c.name);
  }
  o.note("bracket vs 4 N_J max " + format_number(worst) + "; fix-b Nbar^1_{1,2}(0) = " + format_number(nb.real()) +
         (nb.imag() < 0 ? "" : "+") + format_number(nb.imag()) + "i; 4 diagnostic cases correct");
  return o;
}

outcome chern_levi_civita() {
  outcome o;
  double worst = 0, tors = 0, opposite = 0;
  for (auto& c : all_fixtures()) {
    auto d = decompose_chern_lc(*make_geometry(c.st), c.h);
    o.require(d.residual_at.size() == 3, "3 evaluation points");
    o.at_most(d.residual, 1e-10, c.name + " coefficient residual");
    for (double r : d.residual_at) o.at_most(r, 1e-10, c.name + " pointwise residual"), worst = std::max(worst, r);
    o.at_most(d.torsion_residual, 1e-10, c.name + " torsion form");
    tors = std::max(tors, d.torsion_residual);
    opposite = std::max(opposite, d.torsion_residual_opposite);
    if (c.st.B.entries().end() == std::find_if(c.st.B.entries().begin(), c.st.B.entries().end(),
                                               [](const cjet& f) { return !f.is_zero(); }))
      o.require(d.N_max == 0.0, c.name + " integrable but N^omega != 0");
  }
  auto sym = decompose_chern_lc(*make_geometry(fix_j0()), symplectic_metric());
  o.at_most(sym.delta_max, 1e-14, "symplectic delta");
  auto nc = decompose_chern_lc(*make_geometry(fix_j0()), non_closed_metric());
  o.require(nc.delta_max > 1e-3, "non-closed delta max " + format_number(nc.delta_max));
  o.note("pointwise max " + format_number(worst) + ", torsion form max " + format_number(tors) +
         " with +(gamma20 + gamma02) (literal sign misses by up to " + format_number(opposite) +
         "); symplectic delta " + format_number(sym.delta_max) + ", non-closed delta " + format_number(nc.delta_max) +
         "; N^omega = 0 exactly on integrable fixtures");
  return o;
}

outcome curvature_suite() {
  outcome o;
  double formula = 0, herm = 0, point = 0;
  for (auto& c : normal_fixtures()) {
    auto g = make_geometry(c.st);
    auto conn = chern_connection(*g, c.h);
    auto k = curvature(*g, conn);
    auto c0 = curvature_at_origin(k);
    formula = std::max(formula, max_diff(curvature_origin_formula(c.st, c.h), c0));
    herm = std::max(herm, curvature_hermitian_defect(c0));
    point = std::max(point, pointwise_curvature_check(*g, c.h, conn, k));
  }
  o.at_most(formula, 1e-11, "closed form vs curvature at 0");
  o.at_most(herm, 1e-11, "hermitian symmetry");
  o.at_most(point, 1e-10, "pointwise cross-check");
  auto g = make_geometry(fix_b());
  auto c0 = curvature_at_origin(curvature(*g, chern_connection(*g, cjet_matrix::identity(2, 2, 4))));
  double others = 0;
  for (int j = 0; j < 2; ++j)
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          if (!(j == 1 && q == 1 && r == 0 && s == 0)) others = std::max(others, std::abs(c0(j, q, r, s)));
  o.at_most(std::abs(c0(1, 1, 0, 0) - 0.05), 1e-12, "fix-b C^{2,2}_{1,1}(0) - 0.05");
  o.at_most(others, 1e-12, "fix-b other components");
  o.note("closed form " + format_number(formula) + ", hermitian " + format_number(herm) + ", pointwise " +
         format_number(point) + " on " + std::to_string(normal_fixtures().size()) +
         " normal fixtures; fix-b C^{2,2}_{1,1}(0) = " + format_number(c0(1, 1, 0, 0).real()));
  return o;
}

outcome special_frame_suite() {
  outcome o;
  double frame = 0, lem = 0;
  for (auto& c : normal_fixtures()) {
    auto g = make_geometry(c.st);
    auto r = special_frame(*g, c.h);
    frame = std::max({frame, r.Asecond_origin, r.dAsecond_origin, r.off_pattern});
    auto l = frame_curvature_identities(*g, r.sigma);
    lem = std::max({lem, l.scalar, l.plurisub});
  }
  o.at_most(frame, 1e-12, "A''(0), del A''(0), off-pattern");
  o.at_most(lem, 1e-10, "curvature identities at 0");
  o.note("frame normalization max " + format_number(frame) + ", identities at 0 max " + format_number(lem));
  return o;
}

outcome asymptotics_suite() {
  outcome o;
  double s_coeff = 0, metric = 0, literal = 0;
  std::vector<item> cases{normal_fixtures()[0], normal_fixtures()[2], normal_fixtures()[3], normal_fixtures()[4]};
  for (auto& c : cases) {
    auto g = make_geometry(c.st);
    auto k = chern_coordinate_connection(*g, chern_connection(*g, c.h));
    s_coeff = std::max(s_coeff, compare(connection_asymptotics(c.st, c.h), connection_expansion(k)).max());
  }
  for (auto& c : normal_fixtures()) {
    auto g = make_geometry(c.st);
    metric = std::max(metric, metric_in_coordinates_residual(*g, c.h, metric_in_coordinates(c.st, c.h)));
    literal = std::max(literal, metric_in_coordinates_residual(
                                    *g, c.h, metric_in_coordinates_weighted(c.st, c.h, cplx(0, 0.25))));
  }
  o.at_most(s_coeff, 1e-11, "S coefficients vs full jet");
  o.at_most(metric, 1e-11, "metric in coordinates");
  o.note("S families " + format_number(s_coeff) + " on fix-b and 3 random normal fixtures (sign-corrected pbar " +
         "families); metric in coordinates " + format_number(metric) + " with weight -1/4 (literal i/4 misses by " +
         format_number(literal) + ")");
  return o;
}

outcome geodesic_suite() {
  outcome o;
  auto flat = make_exp_setup(fix_j0(), cjet_matrix::identity(2, 2, 4));
  const std::vector<cplx> z{cplx(0.03, -0.01), cplx(0.01, 0.02)}, w{cplx(0.04, 0.01), cplx(-0.02, 0.03)};
  auto r = integrate_geodesic(flat.field, z, w);
  const double flat_err = std::max(std::abs(r.endpoint[0] - z[0] - w[0]), std::abs(r.endpoint[1] - z[1] - w[1]));
  o.at_most(flat_err, 1e-12, "flat exp_z(v) - z - v");
  auto fb = make_exp_setup(fix_b(), cjet_matrix::identity(2, 2, 4));
  const double a = 0.04 / std::sqrt(5.0);
  auto probe = error_scaling_probe(fb, {0.0, 0.0}, {2 * a, a}, {1, 0.5, 0.25, 0.125});
  o.require(probe.slope >= 2.8, "fix-b slope " + format_number(probe.slope));
  const double ratio = convergence_ratio(fb.field, {0.0, 0.0}, {cplx(0.12, 0.03), cplx(0.06, -0.05)});
  o.require(std::abs(ratio / 16 - 1) <= 0.2, "RK4 ratio " + format_number(ratio));
  o.note("flat error " + format_number(flat_err) + "; fix-b slope " + format_number(probe.slope) +
         " at |v| = 0.04; RK4 halving ratio " + format_number(ratio));
  return o;
}

struct run_result {
  int code;
  std::string out;
};

run_result run_cli(const std::string& args) {
  FILE* p = popen((std::string(ACGEOM_CLI) + " " + args + " 2>/dev/null").c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t k = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), k);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

outcome cli_suite() {
  outcome o;
  const std::string dir = ACGEOM_SPECS;
  for (const std::string args : {"geodesic " + dir + "/fix-b.json --json", "decompose " + dir + " --json"}) {
    auto x = run_cli(args), y = run_cli(args);
    o.require(!x.out.empty() && x.out == y.out, "byte-identical json for " + args);
  }
  int round_trips = 0;
  for (auto& f : spec_files(dir)) {
    auto s = load_manifold_spec(f);
    o.require(parse_manifold_spec(to_json(s).dump()) == s, "round trip " + f);
    ++round_trips;
  }
  const int pass_code = run_cli("curvature " + dir + "/fix-b.json").code;
  const int fail_code = run_cli("geodesic " + dir + "/symplectic.json").code;
  const int error_code = run_cli("validate " + dir + "/missing.json").code;
  o.require(pass_code == 0 && fail_code == 1 && error_code == 2, "exit codes " + std::to_string(pass_code) + "/" +
                                                                     std::to_string(fail_code) + "/" +
                                                                     std::to_string(error_code));
  o.note("json byte-identical over two runs; " + std::to_string(round_trips) +
         " specs round-trip; exit codes pass/fail/error = " + std::to_string(pass_code) + "/" +
         std::to_string(fail_code) + "/" + std::to_string(error_code));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<outcome()>>> criteria{
      {"fundamental identities", fundamental_identities},
      {"structure constraint", structure_constraint},
      {"normal form", normal_form},
      {"torsion", torsion},
      {"Chern and Levi-Civita", chern_levi_civita},
      {"curvature", curvature_suite},
      {"special frame", special_frame_suite},
      {"connection asymptotics", asymptotics_suite},
      {"geodesics", geodesic_suite},
      {"command line", cli_suite}};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details.push_back(std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ":";
    for (auto& d : o.details) std::cout << " " << d << ";";
    std::cout << "\n";
  }
  return all ? 0 : 1;
}
