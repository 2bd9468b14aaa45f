#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "escobar/harness.hpp"

using namespace escobar;

namespace {
ConstraintState constant_state(const Objective& f) {
  BoundaryField c = BoundaryField::zero(f.basis());
  c.coeffs[0] = 1.0;
  return normalize_p(f, c);
}
}  // namespace

TEST_CASE("positivity repair keeps min >= 0.05 mean") {
  const BoundaryFunctional f(flat_ball(3), 6);
  BoundaryField v = BoundaryField::zero(f.basis());
  v.coeffs[0] = 0.1;
  v.coeffs[6] = 1.0;
  const double shift = repair_positivity(f, v);
  CHECK(shift > 0.0);
  const double mean = v.coeffs[0] / std::sqrt(4.0 * M_PI);
  CHECK(f.min_nodal_value(v.coeffs) == doctest::Approx(0.05 * mean).epsilon(1e-9));
}

TEST_CASE("random positive fields are seeded") {
  const BoundaryFunctional f(flat_ball(3), 4);
  CHECK(random_positive_field(f, 9).coeffs == random_positive_field(f, 9).coeffs);
  CHECK(random_positive_field(f, 9).coeffs != random_positive_field(f, 10).coeffs);
  CHECK(f.min_nodal_value(random_positive_field(f, 9).coeffs) > 0.0);
}

TEST_CASE("minimization descends monotonically to the sharp constant") {
  const BoundaryFunctional f(flat_ball(3), 6);
  BoundaryField v = constant_state(f).v;
  v.coeffs[6] += 0.3;
  repair_positivity(f, v);
  const FlowTrajectory t = minimize_Q(f, v);
  CHECK(t.converged);
  for (std::size_t i = 1; i < t.steps.size(); ++i) CHECK(t.steps[i].q <= t.steps[i - 1].q);
  CHECK(std::abs(t.final_q - 8.0 * std::sqrt(M_PI)) < 1e-6);
  CHECK(t.final_distance < 1e-3);
  const FlowTrajectory at = minimize_Q(f, constant_state(f).v);
  CHECK(at.converged);
  CHECK(at.steps.size() <= 1);
}

TEST_CASE("power-law fit recovers a planted exponent") {
  std::vector<SweepRecord> rs;
  for (int i = 0; i < 8; ++i) {
    SweepRecord r;
    r.d_h1 = std::pow(2.0, -i);
    r.deficit = 3.0 * std::pow(r.d_h1, 2.5);
    rs.push_back(r);
  }
  const PowerFit fit = fit_power_law(rs, true);
  CHECK(fit.slope == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(fit.c_hat == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.used == 8);
}

TEST_CASE("sweep records satisfy invariants and do not depend on the worker count") {
  const BoundaryFunctional f(flat_ball(3), 6);
  SweepOptions so;
  so.count = 6;
  so.seed = 5;
  setenv("ESCOBAR_LAB_THREADS", "1", 1);
  const SweepResult a = stability_sweep(f, constant_state(f), so);
  setenv("ESCOBAR_LAB_THREADS", "3", 1);
  const SweepResult b = stability_sweep(f, constant_state(f), so);
  unsetenv("ESCOBAR_LAB_THREADS");
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const SweepRecord& r = a.records[i];
    CHECK(r.index == i);
    CHECK(r.deficit == b.records[i].deficit);
    CHECK(r.d_h1 == b.records[i].d_h1);
    CHECK(r.deficit >= -1e-9);
    CHECK(r.d_hhalf >= 0.0);
    CHECK(r.d_hhalf <= 1.0 + 1e-9);
    CHECK(r.d_h1 <= 1.0 + 1e-9);
    CHECK(r.ratio_h1 > 0.0);
  }
}

TEST_CASE("interior sweep without interior part reduces to boundary samples") {
  const ModelGeometry g = flat_ball(3);
  const BoundaryFunctional f(g, 6);
  InteriorSweepOptions io;
  io.count = 4;
  io.pure_boundary_fraction = 1.0;
  io.pure_interior_fraction = 0.0;
  const InteriorSweepResult r = interior_sweep(g, f, constant_state(f), io);
  for (const auto& rec : r.records) {
    CHECK(rec.interior_term == 0.0);
    CHECK(std::abs(rec.q_composite - rec.q_boundary) < 1e-10);
  }
}

TEST_CASE("pure interior perturbation matches the closed-form assembly") {
  const ModelGeometry g = flat_ball(3);
  const BoundaryFunctional f(g, 6);
  InteriorSweepOptions io;
  io.count = 4;
  io.pure_boundary_fraction = 0.0;
  io.pure_interior_fraction = 1.0;
  const InteriorSweepResult r = interior_sweep(g, f, constant_state(f), io);
  for (const auto& rec : r.records) {
    CHECK(rec.base.deficit > 0.0);
    CHECK(std::abs(rec.base.deficit - rec.interior_term) < 1e-10);
    CHECK(rec.decomposition_error < 1e-10);
  }
}

TEST_CASE("composite minimization agrees with boundary minimization") {
  const ModelGeometry g = flat_ball(3);
  const BoundaryFunctional f(g, 4);
  const BoundaryField v = random_positive_field(f, 2);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(v.coeffs.size() * 2, 0.05);
  const CompositeMinimum cm = minimize_composite(g, f, InteriorField(v, 2, c));
  CHECK(std::abs(cm.value - minimize_Q(f, v).final_q) < 1e-6);
  CHECK(cm.point.interior.norm() < 1e-3);
}
