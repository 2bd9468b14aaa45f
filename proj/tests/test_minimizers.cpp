#include <doctest.h>

#include <cmath>

#include "escobar/functional.hpp"
#include "escobar/minimizers.hpp"

using namespace escobar;

TEST_CASE("bubbles attain the sharp constant and solve the boundary equation") {
  const double y0[3] = {0.1, 0.5, -1.1};
  const Bubble b(BubbleParams::from_pole(1.0, y0));
  CHECK(bubble_Qtilde(b) == doctest::Approx(8.0 * std::sqrt(M_PI)).epsilon(1e-10));
  CHECK(std::abs(residual_YPB_pointwise(flat_ball(3), b.nodal(), b.ypb_constant(), b.resolving_degree())) < 1e-8);
  const double y4[4] = {0.3, -1.1, 0.2, 0.5};
  const Bubble b4(BubbleParams::from_pole(1.3, y4));
  CHECK(bubble_Qtilde(b4) == doctest::Approx(6.0 * std::cbrt(2.0 * M_PI * M_PI)).epsilon(1e-10));
}

TEST_CASE("bubble parameters are validated") {
  const double inside[3] = {0.2, 0.1, 0.0};
  CHECK_THROWS_AS(BubbleParams::from_pole(1.0, inside), ConfigError);
  BubbleParams p = BubbleParams::constant(3, 1.0);
  p.amplitude = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("bubble trace matches the pointwise values") {
  const double y0[3] = {0.0, 1.8, 0.6};
  const Bubble b(BubbleParams::from_pole(2.0, y0));
  const BoundaryField t = b.trace(b.resolving_degree());
  const BasisDescriptor basis = build_basis(3, t.L);
  const double y[3] = {0.0, 0.6, 0.8};
  const auto vals = basis.evaluate(y);
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) s += vals[i] * t.coeffs[static_cast<Eigen::Index>(i)];
  CHECK(s == doctest::Approx(b.boundary(y).first).epsilon(1e-10));
}

TEST_CASE("distance to the family") {
  const BasisDescriptor basis = build_basis(3, 6);
  BoundaryField v = BoundaryField::zero(basis);
  v.coeffs[0] = 1.0;
  CHECK(distance_to_family(v, NormTag::Hhalf).value < 1e-8);
  BoundaryField w = v;
  w.coeffs[static_cast<Eigen::Index>(basis.flat_index(2, 0))] = 0.01;
  const DistanceReport d = distance_to_family(w, NormTag::Hhalf);
  CHECK(d.value > 0.0);
  CHECK(d.value <= 0.01 * std::sqrt(3.0) / h_half_norm(v) + 1e-12);
  const double y0[3] = {0.0, 0.0, 3.0};
  const Bubble b(BubbleParams::from_pole(1.0, y0));
  CHECK(distance_to_family(b.trace(b.resolving_degree()), NormTag::H1).value < 1e-8);
}

TEST_CASE("norm tags round-trip through strings") {
  for (NormTag t : {NormTag::H1, NormTag::Hhalf, NormTag::LpConformal, NormTag::EnergyConformal})
    CHECK(norm_tag_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(norm_tag_from_string("L7"), ConfigError);
}

TEST_CASE("Nelder-Mead finds the minimum of a shifted quadratic") {
  const auto f = [](const std::vector<double>& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 4.0 * (x[1] + 0.5) * (x[1] + 0.5);
  };
  const SimplexResult r = nelder_mead(f, {0.0, 0.0}, 0.5, 1e-14, 2000);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-5));
}
