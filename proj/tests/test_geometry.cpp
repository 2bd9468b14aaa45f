#include <doctest.h>

#include <cmath>

#include "escobar/geometry.hpp"

using namespace escobar;

TEST_CASE("exponents for n = 3 and n = 4") {
  const Exponents e3 = Exponents::of(3);
  CHECK(e3.c_n == 8.0);
  CHECK(e3.c_hat == 4.0);
  CHECK(e3.p == 4.0);
  CHECK(e3.crit == 3.0);
  const Exponents e4 = Exponents::of(4);
  CHECK(e4.c_n == 6.0);
  CHECK(e4.c_hat == 6.0);
  CHECK(e4.p == 3.0);
  CHECK(e4.interior_p == 4.0);
}

TEST_CASE("unsupported dimension lists the supported set") {
  try {
    Exponents::of(5);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("{3, 4}") != std::string::npos);
  }
}

TEST_CASE("flat ball has unit factor") {
  const ModelGeometry g = flat_ball(3);
  CHECK(g.is_flat());
  const double y[3] = {0.1, 0.2, 0.3};
  CHECK(g.factor<double>(y) == 1.0);
  CHECK(g.conformal_factor() == nullptr);
}

TEST_CASE("conformal factor evaluates its harmonic expansion") {
  BoundaryField w = BoundaryField::zero(build_basis(3, 1));
  w.coeffs[0] = std::sqrt(4.0 * M_PI);  // constant 1
  w.coeffs[2] = 0.2;                    // multiple of y_3
  const ModelGeometry g = conformal_ball(3, w);
  CHECK(!g.is_flat());
  const double y[3] = {0.0, 0.0, 0.5};
  const double y3 = std::sqrt(3.0 / (4.0 * M_PI));
  CHECK(g.factor<double>(y) == doctest::Approx(1.0 + 0.2 * y3 * 0.5));
}

TEST_CASE("a factor that changes sign is rejected") {
  BoundaryField w = BoundaryField::zero(build_basis(3, 1));
  w.coeffs[0] = 0.1;
  w.coeffs[2] = 2.0;
  CHECK_THROWS(conformal_ball(3, w));
}
