#include <doctest.h>

#include <cmath>

#include "escobar/reduction.hpp"

using namespace escobar;

namespace {
struct Setup {
  std::shared_ptr<BoundaryFunctional> obj = std::make_shared<BoundaryFunctional>(flat_ball(3), 6);
  ConstraintState state;
  Setup() {
    BoundaryField c = BoundaryField::zero(obj->basis());
    c.coeffs[0] = 1.0;
    state = normalize_p(*obj, c);
  }
};
}  // namespace

TEST_CASE("kernel at the constant spans the degree-one harmonics") {
  Setup s;
  const Reduction red(s.obj, s.state);
  CHECK(red.kernel_dim() == 3);
  const Eigen::MatrixXd& K = red.kernel();
  CHECK((K.transpose() * K - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  // all kernel weight sits on l = 1
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    if (s.obj->basis().degree(static_cast<std::size_t>(i)) != 1) CHECK(K.row(i).norm() < 1e-10);
  CHECK(red.critical_value() == doctest::Approx(8.0 * std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("graph map solves the complement equation and q stays constant") {
  Setup s;
  const Reduction red(s.obj, s.state);
  const GraphSolution z = red.solve_graph(Eigen::VectorXd::Zero(3));
  CHECK(z.residual < 1e-12);
  CHECK(z.b.norm() < 1e-12);
  for (double r : {0.01, 0.03}) {
    const Eigen::VectorXd a = r * Eigen::Vector3d(1.0, -2.0, 0.5).normalized();
    const GraphSolution g = red.solve_graph(a);
    CHECK(g.residual < 1e-11);
    CHECK(std::abs(g.q - red.critical_value()) < 1e-10);
    CHECK(std::abs(red.solve_graph(-a).q - g.q) < 1e-10);
    const GraphSolution p = project_to_variety(red, g.point);
    CHECK((p.point - g.point).norm() < 1e-10);
  }
}

TEST_CASE("planted form names round-trip") {
  for (PlantedForm f : {PlantedForm::Cubic, PlantedForm::Quartic, PlantedForm::NegativeQuartic})
    CHECK(planted_form_from_string(to_string(f)) == f);
  CHECK(planted_degree(PlantedForm::Cubic) == 3);
  CHECK(planted_degree(PlantedForm::NegativeQuartic) == 4);
  CHECK_THROWS_AS(planted_form_from_string("quintic"), ConfigError);
}

TEST_CASE("planted term vanishes at the reference and is cubic along its direction") {
  Setup s;
  const Reduction red(s.obj, s.state);
  PlantedSpec sp;
  sp.form = PlantedForm::Cubic;
  sp.direction = Eigen::Vector3d(0.0, 0.0, 1.0);
  const PlantedFunctional pl(s.obj, red.kernel(), s.state.v.coeffs, sp);
  CHECK(pl.value(s.state.v.coeffs) == doctest::Approx(s.obj->value(s.state.v.coeffs)).epsilon(1e-14));
  const Reduction rp(std::make_shared<PlantedFunctional>(s.obj, red.kernel(), s.state.v.coeffs, sp), s.state);
  const double q1 = rp.reduced_q(0.01 * sp.direction) - rp.critical_value();
  const double q2 = rp.reduced_q(0.02 * sp.direction) - rp.critical_value();
  CHECK(q2 / q1 == doctest::Approx(8.0).epsilon(1e-2));
}

TEST_CASE("fitted monomials evaluate as polynomials") {
  const std::vector<Monomial> terms = {{{2, 0, 1}, 1.5}, {{0, 1, 0}, -2.0}};
  const Eigen::Vector3d a(2.0, 3.0, -1.0);
  CHECK(evaluate_terms(terms, a) == doctest::Approx(1.5 * 4.0 * -1.0 - 2.0 * 3.0));
}

TEST_CASE("synthetic operator with trivial kernel takes the nondegenerate branch") {
  FunctionalOptions fo;
  fo.boundary_curvature = -1.0;
  auto obj = std::make_shared<BoundaryFunctional>(flat_ball(3), 4, fo);
  BoundaryField c = BoundaryField::zero(obj->basis());
  c.coeffs[0] = 1.0;
  const Reduction red(obj, normalize_p(*obj, c));
  CHECK(red.kernel_dim() == 0);
  const ReductionResult r = run_reduction(red);
  CHECK(r.l0 == 0);
  CHECK(r.lojasiewicz.note.find("trivial kernel") != std::string::npos);
}
