#include <doctest.h>

#include <cmath>
#include <random>

#include "escobar/functional.hpp"
#include "escobar/harness.hpp"

using namespace escobar;

namespace {
BoundaryField constant(const BoundaryFunctional& f) {
  BoundaryField c = BoundaryField::zero(f.basis());
  c.coeffs[0] = 1.0;
  return c;
}
}  // namespace

TEST_CASE("constant attains 2(n-1) |S|^(1/(n-1))") {
  const BoundaryFunctional f3(flat_ball(3), 4);
  CHECK(f3.value(constant(f3).coeffs) == doctest::Approx(8.0 * std::sqrt(M_PI)).epsilon(1e-13));
  const BoundaryFunctional f4(flat_ball(4), 3);
  CHECK(f4.value(constant(f4).coeffs) == doctest::Approx(6.0 * std::cbrt(2.0 * M_PI * M_PI)).epsilon(1e-13));
}

TEST_CASE("quotient is scale invariant and matches the ball quotient") {
  const ModelGeometry g = flat_ball(3);
  const BoundaryFunctional f(g, 6);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const BoundaryField v = random_positive_field(f, s);
    CHECK(f.value(2.5 * v.coeffs) == doctest::Approx(f.value(v.coeffs)).epsilon(1e-13));
    CHECK(std::abs(f.value(v.coeffs) - eval_Q(g, InteriorField::from_boundary(v))) < 1e-10);
    CHECK(std::abs(f.value(v.coeffs) - eval_Q_intrinsic(g, InteriorField::from_boundary(v))) < 1e-10);
  }
}

TEST_CASE("gradient and Hessian agree with finite differences") {
  for (int n : {3, 4}) {
    const BoundaryFunctional f(flat_ball(n), 4);
    const BoundaryField v = random_positive_field(f, 17);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Eigen::VectorXd d(v.coeffs.size());
    for (auto& x : d) x = nd(rng);
    const double h = 1e-5;
    const double fd = (f.value(v.coeffs + h * d) - f.value(v.coeffs - h * d)) / (2.0 * h);
    CHECK(f.gradient(v.coeffs).dot(d) == doctest::Approx(fd).epsilon(1e-6));
    const Eigen::VectorXd gfd = (f.gradient(v.coeffs + h * d) - f.gradient(v.coeffs - h * d)) / (2.0 * h);
    CHECK((f.hessian(v.coeffs) * d - gfd).norm() < 1e-5 * gfd.norm());
  }
}

TEST_CASE("value_change equals the difference of values") {
  const BoundaryFunctional f(flat_ball(3), 6);
  const BoundaryField a = random_positive_field(f, 1);
  BoundaryField b = a;
  b.coeffs[5] += 0.05;
  CHECK(f.value_change(a.coeffs, b.coeffs) ==
        doctest::Approx(f.value(b.coeffs) - f.value(a.coeffs)).epsilon(1e-9));
}

TEST_CASE("constant is critical and the projected gradient is tangent") {
  const BoundaryFunctional f(flat_ball(3), 6);
  CHECK(grad_Qtilde(f, normalize_p(f, constant(f))).coeffs.norm() < 1e-12);
  const ConstraintState s = normalize_p(f, random_positive_field(f, 4));
  CHECK(s.p_mass == doctest::Approx(1.0));
  CHECK(std::abs(grad_Qtilde(f, s).coeffs.dot(f.mass_direction(s.v.coeffs))) < 1e-12);
}

TEST_CASE("n = 4 second variation has a four-dimensional kernel and law c_n (l - 1)") {
  const BoundaryFunctional f(flat_ball(4), 3);
  const HessianData h = hessian_Qtilde(f, normalize_p(f, constant(f)));
  const BasisDescriptor& b = f.basis();
  Eigen::Index i = 0;
  for (int l = 1; l <= 3; ++l)
    for (std::size_t m = 0; m < BasisDescriptor::multiplicity(4, l); ++m, ++i)
      CHECK(std::abs(h.eigenvalues[i] - 6.0 * (l - 1)) < 1e-9);
  CHECK(static_cast<std::size_t>(i) == b.size() - 1);
}

TEST_CASE("non-positive fields are rejected") {
  const BoundaryFunctional f(flat_ball(3), 2);
  BoundaryField v = constant(f);
  v.coeffs[0] = -1.0;
  CHECK_THROWS_AS(f.require_positive(v.coeffs), NumericalError);
}

TEST_CASE("conformal pullback and intrinsic routes agree") {
  BoundaryField w = BoundaryField::zero(build_basis(3, 2));
  w.coeffs[0] = std::sqrt(4.0 * M_PI);
  w.coeffs[3] = 0.4;
  w.coeffs[6] = 0.3;
  const ModelGeometry g = conformal_ball(3, w);
  const BoundaryFunctional f(g, 4);
  const BoundaryField v = random_positive_field(f, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(v.coeffs.size() * 2);
  for (auto& x : c) x = 0.02 * nd(rng);
  const InteriorField u(v, 2, c);
  CHECK(eval_Q(g, u) == doctest::Approx(eval_Q_intrinsic(g, u)).epsilon(1e-9));
  // the flat extension is only a competitor for the conformal energy
  CHECK(f.value(v.coeffs) < eval_Q(g, InteriorField::from_boundary(v)));
}
