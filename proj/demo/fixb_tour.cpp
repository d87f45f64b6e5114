// Torsion, curvature and the exponential map of the germ B_{1,1} = b z_2 with the flat metric.
#include <acgeom/fixtures.hpp>
#include <acgeom/geodesic.hpp>

#include <iostream>

using namespace acgeom;

int main() {
  auto s = fix_b();
  auto h = cjet_matrix::identity(2, 2, 4);
  auto g = make_geometry(s);

  std::cout << "J^2 + I residual: " << validate_structure(s).value() << "\n";
  std::cout << "Nbar^1_{1,2}(0) = " << compute_torsion(*g).Nbar[0](0, 1).constant_term() << "\n";

  auto c0 = curvature_at_origin(curvature(*g, chern_connection(*g, h)));
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          if (std::abs(c0(j, k, r, c)) > 1e-14)
            std::cout << "C^{" << j + 1 << "," << k + 1 << "}_{" << r + 1 << "," << c + 1 << "}(0) = " << c0(j, k, r, c)
                      << "\n";

  auto setup = make_exp_setup(s, h);
  const std::vector<cplx> z{0.0, 0.0}, v{cplx(0.04, 0.01), cplx(-0.02, 0.03)};
  auto r = compare_exp(setup.coeffs, setup.field, z, v);
  for (int k = 0; k < 2; ++k)
    std::cout << "exp_0(v)_" << k + 1 << ": series " << r.endpoint_asymptotic[k] << ", integrated "
              << r.endpoint_numeric[k] << "\n";
  std::cout << "difference: " << r.error << "\n";
}
