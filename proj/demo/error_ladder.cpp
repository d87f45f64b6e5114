// Error of the cubic exponential-map expansion against RK4 geodesics as |v| halves.
#include <acgeom/fixtures.hpp>
#include <acgeom/geodesic.hpp>

#include <iomanip>
#include <iostream>

using namespace acgeom;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 2;
  struct named {
    const char* name;
    structure s;
    cjet_matrix h;
  };
  for (auto& c : {named{"B = b z_2, flat metric", fix_b(), cjet_matrix::identity(2, 2, 4)},
                  named{"random normal germ", random_normal(seed, 2, 4), random_metric(seed, 2, 4, 0.2, 2)}}) {
    auto p = error_scaling_probe(make_exp_setup(c.s, c.h), {cplx(0.01, 0.0), cplx(0.0, -0.01)}, {0.04, 0.02},
                                 {1, 0.5, 0.25, 0.125, 0.0625});
    std::cout << c.name << "\n  scale     error         slope\n";
    for (auto& row : p.rows)
      std::cout << "  " << std::left << std::setw(10) << row.s << std::setw(14) << row.e
                << (std::isnan(row.slope_partial) ? std::string("-") : std::to_string(row.slope_partial)) << "\n";
    std::cout << "  fitted slope " << p.slope << "\n";
  }
}
