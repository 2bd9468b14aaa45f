#pragma once

// Constrained minimization of Qtilde and perturbation ensembles around a
// minimizer.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "escobar/functional.hpp"
#include "escobar/minimizers.hpp"
#include "escobar/reduction.hpp"

namespace escobar {

struct MinimizeOptions {
  double grad_tol = 1e-9;
  int max_iterations = 10000;
  double initial_step = 0.02;
  double armijo = 1e-4;
  double min_step = 1e-16;
  /// Below this gradient norm the direction becomes a tangent Newton step.
  double newton_switch = 1e-5;
  double newton_max_step = 0.1;
  /// Distance to the family (Hhalf) every k accepted steps; 0 records it only at the end.
  int distance_every = 0;
};

struct FlowStep {
  int iteration = 0;
  double q = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  std::optional<double> distance;
};

struct FlowTrajectory {
  std::vector<FlowStep> steps;
  bool converged = false;
  std::string status;
  BoundaryField final_point;
  double final_q = 0.0;
  double final_grad_norm = 0.0;
  double final_distance = 0.0;
  int positivity_rejections = 0;
};

/// Projected gradient descent on the unit p-mass sphere with Armijo backtracking.
FlowTrajectory minimize_Q(const Objective& obj, const BoundaryField& v0, const MinimizeOptions& opt = {});

/// Minimization of Q over composites u = u0 + Ev (flat ball), by projected
/// gradient descent on the joint coefficient vector (v, interior coefficients).
struct CompositeMinimum {
  InteriorField point;
  double value = 0.0;             // closed-form energy route
  double value_quadrature = 0.0;  // ball quadrature route
  int iterations = 0;
  double grad_norm = 0.0;
  std::string status;
};
CompositeMinimum minimize_composite(const ModelGeometry& geom, const Objective& obj, const InteriorField& u0,
                                    const MinimizeOptions& opt = {});

/// Adds the smallest constant keeping min >= 0.05 * mean on the objective's
/// grid; returns the constant (0 if none was needed).
double repair_positivity(const Objective& obj, BoundaryField& v, double fraction = 0.05);

/// Random field with uniform coefficients in [-1, 1], made positive by repair_positivity.
BoundaryField random_positive_field(const Objective& obj, std::uint64_t seed);

struct SamplerSpec {
  double eps_min = 1e-3;
  double eps_max = 0.3;
  /// If >= 0, directions are drawn from this harmonic degree only.
  int degree = -1;
  /// If set, every sample uses this direction (projected to the tangent space).
  std::optional<BoundaryField> direction;
};

struct SweepRecord {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::string descriptor;
  double epsilon = 0.0;
  double shift = 0.0;           // positivity repair constant
  double interior_size = 0.0;   // ||u0||_{H^1}, interior sweeps only
  double deficit = 0.0;
  double d_hhalf = 0.0;
  double d_h1 = 0.0;
  double ratio_hhalf = 0.0;     // deficit / d^2
  double ratio_h1 = 0.0;
  bool distance_ok = true;
  double wall_time = 0.0;       // seconds, not part of the CSV table
};

struct PowerFit {
  double slope = 0.0;       // 2 + gamma_hat
  double intercept = 0.0;   // log C_hat
  double c_hat = 0.0;
  double r2 = 0.0;
  int used = 0;
};

/// Least squares of log(deficit) against log(distance) over records with both positive.
PowerFit fit_power_law(const std::vector<SweepRecord>& records, bool h1_tag, double floor = 1e-12);

struct SweepResult {
  std::vector<SweepRecord> records;  // sorted by index
  int excluded = 0;                   // distance optimizer failures
  double q_min = 0.0;
  double min_q_sampled = 0.0;
  double min_ratio_h1 = 0.0;
  double min_ratio_hhalf = 0.0;
  PowerFit fit_h1;
  PowerFit fit_hhalf;
  double wall_time = 0.0;
};

struct SweepOptions {
  int count = 200;
  std::uint64_t seed = 42;
  SamplerSpec sampler;
  DistanceOptions distance;
};

/// u = normalize(v* + eps phi) with phi a random unit tangent direction.
SweepResult stability_sweep(const Objective& obj, const ConstraintState& minimizer, const SweepOptions& opt);

/// deficit / eps^2 and distances for u = v* + eps phi with phi projected to the tangent space.
struct DirectionalSample {
  double epsilon = 0.0;
  double deficit = 0.0;
  double deficit_over_eps2 = 0.0;
  double d_hhalf = 0.0;
  double ratio_hhalf = 0.0;
};
std::vector<DirectionalSample> directional_probe(const Objective& obj, const ConstraintState& minimizer,
                                                 const BoundaryField& phi, const std::vector<double>& eps);

struct InteriorSweepOptions {
  int count = 200;
  std::uint64_t seed = 42;
  int radial_order = 2;
  double interior_min = 1e-3;
  double interior_max = 0.3;
  /// Fraction of samples with v = v* (pure interior) and with u0 = 0.
  double pure_interior_fraction = 0.2;
  double pure_boundary_fraction = 0.2;
  SamplerSpec sampler;
  DistanceOptions distance;
};

struct InteriorRecord {
  SweepRecord base;
  double q_composite = 0.0;      // Q(u) by ball quadrature
  double q_boundary = 0.0;
  double interior_term = 0.0;    // c_n \int |grad u0|^2 / ||v||_p^2
  double decomposition_error = 0.0;
  double chain_ratio = 0.0;      // (a^{2+g} + b^2) / (a^2 + b^2)^{1+g/2}
};

struct InteriorSweepResult {
  std::vector<InteriorRecord> records;
  int excluded = 0;
  double min_ratio = 0.0;              // deficit / (d^M)^2 with the H1 distance
  double max_decomposition_error = 0.0;
  double min_chain_ratio = 0.0;
  double gamma = 0.0;
  double wall_time = 0.0;
};

/// Flat geometry only: composites u = u0 + Ev with u0 vanishing on the sphere.
InteriorSweepResult interior_sweep(const ModelGeometry& geom, const Objective& obj, const ConstraintState& minimizer,
                                   const InteriorSweepOptions& opt);

struct AspGapRow {
  double t = 0.0;
  double deficit = 0.0;
  double distance = 0.0;               // ||u_t - u_0||_{H^{1/2}}
  std::vector<double> ratios;          // deficit / distance^{p - alpha}, one per alpha
};

struct AspGapResult {
  int p = 0;
  std::vector<double> alphas;
  std::vector<AspGapRow> rows;
  bool integrable = false;
  double deficit_slope = 0.0;          // log-log slope of deficit against t
  std::vector<double> min_factor;      // per alpha, min over halvings of ratio(t) / ratio(t/2)
  std::vector<bool> monotone;          // per alpha
};

/// u_t = h(t theta, F(t theta)) for a unit kernel direction theta (kernel coordinates).
AspGapResult asp_gap_probe(const Reduction& red, const Eigen::VectorXd& theta, int p,
                           const std::vector<double>& ts = {0.1, 0.05, 0.025, 0.0125},
                           const std::vector<double>& alphas = {0.1, 0.5}, double noise_floor = 1e-11);

}  // namespace escobar
