#include <acgeom/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace acgeom;

namespace {

std::vector<cplx> complex_pairs(const std::vector<double>& xs, const std::string& flag) {
  if (xs.size() % 2 != 0) throw parse_error(flag, "expected re,im pairs");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < xs.size(); i += 2) out.emplace_back(xs[i], xs[i + 1]);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checks for almost complex germs with a hermitian metric"};
  app.require_subcommand(1, 1);

  std::string path;
  double tol = 1e-10;
  std::optional<int> order;
  std::optional<std::uint64_t> seed;
  bool json = false, exact = false;
  std::vector<double> z, v, scales;
  int steps = 256;

  for (auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("spec", path, "spec file or directory of *.json specs")->required();
    sub->add_option("--tol", tol, "tolerance for residual checks")->check(CLI::PositiveNumber);
    sub->add_option("--order", order, "truncation order override")->check(CLI::Range(1, 8));
    sub->add_option("--seed", seed, "seed for sampled vectors");
    sub->add_flag("--json", json, "emit acgeom-report/1 JSON");
    sub->add_flag("--exact", exact, "also run rational arithmetic where supported");
    if (name == "geodesic") {
      sub->add_option("--z", z, "base point as re,im pairs")->delimiter(',');
      sub->add_option("--v", v, "velocity as re,im pairs")->delimiter(',');
      sub->add_option("--scales", scales, "velocity scales")->delimiter(',');
      sub->add_option("--steps", steps, "initial RK4 steps")->check(CLI::Range(4, 1 << 14));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  command_options opts;
  opts.tol = tol;
  opts.seed = seed;
  opts.exact = exact;
  opts.steps = steps;
  if (!scales.empty()) opts.scales = scales;

  std::vector<manifold_spec> specs;
  try {
    opts.z = complex_pairs(z, "--z");
    opts.v = complex_pairs(v, "--v");
    if (std::filesystem::is_directory(path)) {
      for (auto& f : spec_files(path)) specs.push_back(load_manifold_spec(f, order));
    } else {
      specs.push_back(load_manifold_spec(path, order));
    }
  } catch (const parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const auto reports = run_batch(command, specs, opts);
  bool ok = true;
  for (auto& r : reports) ok = ok && r.pass();
  if (json) {
    nlohmann::json out;
    if (std::filesystem::is_directory(path)) {
      out = nlohmann::json::array();
      for (auto& r : reports) out.push_back(to_json(r));
    } else {
      out = to_json(reports.front());
    }
    std::cout << out.dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) std::cout << (i ? "\n" : "") << to_text(reports[i]);
  }
  return ok ? 0 : 1;
}
