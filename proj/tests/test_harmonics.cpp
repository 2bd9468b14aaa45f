#include <doctest.h>

#include <cmath>
#include <random>

#include "escobar/harmonics.hpp"

using namespace escobar;

TEST_CASE("basis sizes follow the harmonic multiplicities") {
  CHECK(build_basis(3, 6).size() == 49);
  CHECK(BasisDescriptor::multiplicity(3, 4) == 9);
  CHECK(BasisDescriptor::multiplicity(4, 3) == 16);
  CHECK(build_basis(4, 3).size() == 1 + 4 + 9 + 16);
  CHECK_THROWS_AS(build_basis(5, 2), ConfigError);
}

TEST_CASE("sphere areas") {
  CHECK(build_basis(3, 1).sphere_area() == doctest::Approx(4.0 * M_PI).epsilon(1e-14));
  CHECK(build_basis(4, 1).sphere_area() == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-14));
}

TEST_CASE("basis is orthonormal under the quadrature grid") {
  for (auto [n, L] : {std::pair{3, 6}, std::pair{4, 4}}) {
    const SphereTransform t(n, L);
    const Eigen::MatrixXd gram = t.synthesis().transpose() * t.weights().asDiagonal() * t.synthesis();
    const auto N = static_cast<Eigen::Index>(t.basis().size());
    CHECK((gram - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("analysis inverts synthesis") {
  const SphereTransform t(3, 7);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(static_cast<Eigen::Index>(t.basis().size()));
  for (auto& x : c) x = nd(rng);
  CHECK((t.analyze(t.synthesize(c)) - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degree-zero harmonic is the normalized constant") {
  const BasisDescriptor b = build_basis(3, 2);
  const double y[3] = {0.6, 0.0, 0.8};
  CHECK(b.evaluate(y)[0] == doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)));
}

TEST_CASE("solid harmonics are homogeneous and harmonic") {
  for (int n : {3, 4}) {
    const BasisDescriptor b = build_basis(n, 5);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] = 0.2 + 0.1 * k;
    std::vector<double> ys = y;
    for (auto& v : ys) v *= 0.7;
    const auto a = b.evaluate(y), s = b.evaluate(ys);
    const double h = 1e-3;
    std::vector<double> lap(b.size(), 0.0);
    for (int k = 0; k < n; ++k) {
      auto p = y, m = y;
      p[static_cast<std::size_t>(k)] += h;
      m[static_cast<std::size_t>(k)] -= h;
      const auto fp = b.evaluate(p), fm = b.evaluate(m);
      for (std::size_t i = 0; i < b.size(); ++i) lap[i] += (fp[i] - 2.0 * a[i] + fm[i]) / (h * h);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK(s[i] == doctest::Approx(std::pow(0.7, b.degree(i)) * a[i]).epsilon(1e-12));
      CHECK(std::abs(lap[i]) < 1e-4);
    }
  }
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(6, x, w);
  double s = 0.0, s10 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i];
    s10 += w[i] * std::pow(x[i], 10);
  }
  CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s10 == doctest::Approx(2.0 / 11.0).epsilon(1e-13));
}

TEST_CASE("field compatibility is checked") {
  const BasisDescriptor b = build_basis(3, 2);
  BoundaryField f(3, 2, Eigen::VectorXd::Zero(5));
  CHECK_THROWS_AS(check_compatible(b, f), ConfigError);
}
