#include <doctest.h>

#include <cmath>
#include <random>

#include "escobar/operators.hpp"

using namespace escobar;

TEST_CASE("DtN matrix is diagonal with c_n * l") {
  for (auto [n, L] : {std::pair{3, 6}, std::pair{4, 4}}) {
    const BasisDescriptor b = build_basis(n, L);
    const SpectralOperator op = dtn_matrix(flat_ball(n), b);
    const double cn = Exponents::of(n).c_n;
    for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
      for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
        const double expect = i == j ? cn * b.degree(static_cast<std::size_t>(i)) : 0.0;
        CHECK(std::abs(op.matrix(i, j) - expect) < 1e-10);
      }
    CHECK(op.symmetry_defect() < 1e-10);
  }
}

TEST_CASE("H^1/2 norm weights are 1 + l") {
  const BasisDescriptor b = build_basis(3, 4);
  BoundaryField v = BoundaryField::zero(b);
  v.coeffs[static_cast<Eigen::Index>(b.flat_index(3, 1))] = 1.0;
  CHECK(h_half_norm(v) == doctest::Approx(2.0));
}

TEST_CASE("Dirichlet energy of a harmonic extension is l") {
  const BasisDescriptor b = build_basis(3, 5);
  BoundaryField v = BoundaryField::zero(b);
  v.coeffs[static_cast<Eigen::Index>(b.flat_index(4, -2))] = 1.0;
  CHECK(dirichlet_integral(InteriorField::from_boundary(v)) == doctest::Approx(4.0).epsilon(1e-12));
}

// Ball quadrature of |grad u|^2 with centered differences.
double dirichlet_by_quadrature(const InteriorField& u) {
  const BasisDescriptor b = build_basis(u.harmonic.n, u.harmonic.L);
  const BallQuadrature q = ball_quadrature(u.harmonic.n, 24, 2 * u.harmonic.L + 12);
  const double h = 1e-5;
  double s = 0.0;
  for (std::size_t k = 0; k < q.count; ++k) {
    const auto y = q.point(k);
    std::vector<double> p(y.begin(), y.end());
    double g2 = 0.0;
    for (int d = 0; d < q.n; ++d) {
      auto a = p, c = p;
      a[static_cast<std::size_t>(d)] += h;
      c[static_cast<std::size_t>(d)] -= h;
      const double g = (u.evaluate<double>(b, a) - u.evaluate<double>(b, c)) / (2.0 * h);
      g2 += g * g;
    }
    s += q.weights[k] * g2;
  }
  return s;
}

TEST_CASE("closed-form Dirichlet integral matches ball quadrature") {
  for (int n : {3, 4}) {
    const BasisDescriptor b = build_basis(n, 3);
    std::mt19937_64 rng(static_cast<std::uint64_t>(n));
    std::normal_distribution<double> nd;
    BoundaryField v = BoundaryField::zero(b);
    for (auto& x : v.coeffs) x = nd(rng);
    Eigen::VectorXd c(v.coeffs.size() * 2);
    for (auto& x : c) x = 0.3 * nd(rng);
    const InteriorField u(v, 2, c);
    CHECK(dirichlet_integral(u) == doctest::Approx(dirichlet_by_quadrature(u)).epsilon(1e-7));
    // u0 vanishes on the sphere and Ev is harmonic, so they are Dirichlet-orthogonal
    CHECK(std::abs(dirichlet_inner(u.harmonic_part(), u.interior_part())) < 1e-10);
  }
}

TEST_CASE("interior field size is validated") {
  const BasisDescriptor b = build_basis(3, 2);
  CHECK_THROWS_AS(InteriorField(BoundaryField::zero(b), 2, Eigen::VectorXd::Zero(3)), ConfigError);
}
