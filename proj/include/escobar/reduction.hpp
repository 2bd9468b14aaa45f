#pragma once

// Lyapunov-Schmidt reduction of Qtilde at a critical point v of the
// constraint set. With K the kernel of the constrained Hessian and W its
// orthogonal complement inside T_v B (both fixed subspaces of coefficient
// space), points near v are written h(a, b) = v + a + b, a in K, b in W. The
// graph map F(a) solves the W-component of the stationarity equation and the
// reduced function is q(a) = Qtilde(h(a, F(a))).
//
// Kernel vectors are handled through their coordinates alpha in the
// L^2-orthonormal kernel basis.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "escobar/functional.hpp"

namespace escobar {

/// |lambda| < 1e-7 max(1, |lambda_max|).
bool is_kernel_eigenvalue(double lambda, double lambda_max);

/// L^2-orthonormal basis (columns) of the kernel of the constrained Hessian.
/// Throws NumericalError if the projected gradient exceeds 1e-8.
Eigen::MatrixXd kernel_basis(const Objective& obj, const ConstraintState& state);

struct GraphSolution {
  Eigen::VectorXd alpha;   // kernel coordinates
  Eigen::VectorXd beta;    // coordinates in the complement basis
  Eigen::VectorXd b;       // F(a) in coefficient space
  Eigen::VectorXd point;   // h(a, F(a)) (not normalized)
  double q = 0.0;
  double residual = 0.0;   // |W^T grad Qtilde| at the normalized point
  int iterations = 0;
  std::vector<double> history;
};

struct ReductionOptions {
  double a_max = 0.1;
  double residual_tol = 1e-11;
  int max_newton = 50;
};

class Reduction {
 public:
  Reduction(std::shared_ptr<const Objective> obj, ConstraintState critical, ReductionOptions opt = {});

  const Objective& objective() const { return *obj_; }
  const ConstraintState& critical() const { return state_; }
  int kernel_dim() const { return static_cast<int>(kernel_.cols()); }
  const Eigen::MatrixXd& kernel() const { return kernel_; }
  const Eigen::MatrixXd& complement() const { return complement_; }
  const HessianData& hessian() const { return hess_; }
  double critical_value() const { return q0_; }
  const ReductionOptions& options() const { return opt_; }

  /// Kernel coordinates of a field (L^2 projection onto K).
  Eigen::VectorXd coordinates(const Eigen::VectorXd& field) const { return kernel_.transpose() * field; }
  Eigen::VectorXd field(const Eigen::VectorXd& alpha) const { return kernel_ * alpha; }

  /// Newton solve for F(a); warm start optional.
  GraphSolution solve_graph(const Eigen::VectorXd& alpha, const Eigen::VectorXd* beta0 = nullptr) const;
  double reduced_q(const Eigen::VectorXd& alpha) const { return solve_graph(alpha).q; }
  /// h(a, b) for explicit complement coordinates.
  Eigen::VectorXd point(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) const;

 private:
  std::shared_ptr<const Objective> obj_;
  ConstraintState state_;
  ReductionOptions opt_;
  HessianData hess_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd complement_;
  double q0_ = 0.0;
};

/// P(u): the variety point with the same kernel coordinates as u - v.
GraphSolution project_to_variety(const Reduction& red, const Eigen::VectorXd& u);

/// c_a * dq(a)[pi_K phi] against the manifold gradient of Qtilde at the
/// normalized h(a, F(a)) applied to phi, for phi in T_v B (phi is projected
/// there first). c_a = ||h(a, F(a))||_p; dq by a fourth-order stencil.
struct GradientRelation {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};
GradientRelation gradient_relation(const Reduction& red, const Eigen::VectorXd& alpha, const Eigen::VectorXd& phi,
                                   double step = 1e-3);

/// u = h(a, F(a) + eta) with eta = W * eta_beta: deficit Qtilde(u) - Qtilde(P(u))
/// against ||u - P(u)||^2 in H^{1/2}. predicted is the Rayleigh quotient of the
/// constrained Hessian at v in the direction of eta.
struct CoercivitySample {
  double eta_norm = 0.0;
  double deficit = 0.0;
  double distance = 0.0;
  double ratio = 0.0;
  double predicted = 0.0;
};
CoercivitySample coercivity_sample(const Reduction& red, const Eigen::VectorXd& alpha,
                                   const Eigen::VectorXd& eta_beta);

struct CoercivityReport {
  std::vector<CoercivitySample> samples;  // at the requested size
  std::vector<CoercivitySample> small;    // the same directions at eta_small
  double c1 = 0.0;                        // min ratio over samples
  double c1_small = 0.0;                  // min ratio over small
  double spectral_floor = 0.0;            // min over complement eigenvectors of lambda / ||w||^2_{H^{1/2}}
  double max_direction_error = 0.0;       // max relative gap of small-eta ratios to their Rayleigh quotients
};
/// Sample 0 is the complement eigenvector attaining the spectral floor; the
/// rest are random with ||eta||_{H^{1/2}} uniform in (0, eta_max].
CoercivityReport coercivity_probe(const Reduction& red, int count, double eta_max, double eta_small,
                                  double a_radius, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Planted functional: base + strength * P(k(x)), where
//   k_i(x) = <x, kappa_i> / ||x||_p - <v, kappa_i>
// are kernel coordinates of the normalized point and P is homogeneous.

enum class PlantedForm { Cubic, Quartic, NegativeQuartic };
std::string to_string(PlantedForm f);
PlantedForm planted_form_from_string(const std::string& s);
int planted_degree(PlantedForm f);

struct PlantedSpec {
  PlantedForm form = PlantedForm::Cubic;
  double strength = 1.0;
  Eigen::VectorXd direction;  // unit vector in kernel coordinates
};

class PlantedFunctional final : public Objective {
 public:
  /// kernel: columns kappa_i; reference: the normalized critical point v.
  PlantedFunctional(std::shared_ptr<const Objective> base, Eigen::MatrixXd kernel, Eigen::VectorXd reference,
                    PlantedSpec spec);

  const BasisDescriptor& basis() const override { return base_->basis(); }
  const Exponents& exps() const override { return base_->exps(); }
  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;
  double p_mass(const Eigen::VectorXd& x) const override { return base_->p_mass(x); }
  Eigen::VectorXd mass_direction(const Eigen::VectorXd& x) const override { return base_->mass_direction(x); }
  double min_nodal_value(const Eigen::VectorXd& x, std::string* where = nullptr) const override {
    return base_->min_nodal_value(x, where);
  }

  const PlantedSpec& spec() const { return spec_; }
  /// P(k) itself.
  double polynomial(const Eigen::VectorXd& k) const;
  Eigen::VectorXd kernel_coordinates(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd planted_gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd polynomial_gradient(const Eigen::VectorXd& k) const;

  std::shared_ptr<const Objective> base_;
  Eigen::MatrixXd kernel_;
  Eigen::VectorXd ref_coords_;
  PlantedSpec spec_;
};

// ---------------------------------------------------------------------------
// Taylor / AS_p probe and Lojasiewicz estimate

struct ReducedSample {
  Eigen::VectorXd alpha;
  int ray = -1;        // index of the sampling ray (-1 for the origin)
  double radius = 0.0;
  double q = 0.0;
  double residual = 0.0;
  double f_norm = 0.0;  // ||F(a)||_{H^{1/2}}
};

struct Monomial {
  std::vector<int> exponents;
  double coefficient = 0.0;
};

struct AspMaximizer {
  Eigen::VectorXd coords;  // unit vector in kernel coordinates
  Eigen::VectorXd field;   // the same direction in coefficient space (unit L^p norm)
  double value = 0.0;      // q_p on the unit L^p sphere
};

struct TaylorResult {
  int order = 0;                     // smallest degree above the noise floor; 0 if none
  bool integrable = false;
  std::vector<double> degree_norms;  // max |q_j| on the sphere of radius r_max, j = 0..j_max
  std::vector<std::vector<Monomial>> terms;  // per degree, coefficients in unscaled coordinates
  double condition_number = 0.0;
  double fit_residual = 0.0;
  bool asp = false;
  double asp_max = 0.0;
  std::vector<AspMaximizer> maximizers;
};

struct TaylorOptions {
  int j_max = 6;
  double r_max = 0.05;
  double noise_floor = 1e-9;
  double ridge = 1e-12;
  int rays = 0;       // 0: chosen from the number of monomials
  int radii = 6;
  std::uint64_t seed = 7;
};

/// Evaluates a fitted homogeneous part at kernel coordinates.
double evaluate_terms(const std::vector<Monomial>& terms, const Eigen::VectorXd& alpha);

/// Sampling design used by the probe: rays x radii plus the origin.
std::vector<ReducedSample> sample_reduced(const Reduction& red, const TaylorOptions& opt);

/// lp_norm(alpha) = ||sum alpha_i kappa_i||_{L^p(S)}.
TaylorResult taylor_probe(const std::vector<ReducedSample>& samples, int l0, double q0, const TaylorOptions& opt,
                          const std::function<double(const Eigen::VectorXd&)>& lp_norm,
                          const Eigen::MatrixXd& kernel);

struct LojasiewiczResult {
  double gamma = 0.0;
  double alpha_hat = 2.0;
  int rays_used = 0;
  std::string note;
};

LojasiewiczResult lojasiewicz_estimate(const std::vector<ReducedSample>& samples, double q0, int l0,
                                       const TaylorResult& taylor, double noise_floor = 1e-11);

struct ReductionResult {
  int n = 3;
  int L = 0;
  int l0 = 0;
  double critical_value = 0.0;
  std::vector<BoundaryField> kernel;
  std::vector<ReducedSample> samples;
  TaylorResult taylor;
  LojasiewiczResult lojasiewicz;
};

ReductionResult run_reduction(const Reduction& red, const TaylorOptions& opt = {});

/// ||field||_{L^p(S)} on the objective's default grid.
std::function<double(const Eigen::VectorXd&)> kernel_lp_norm(const Reduction& red);

}  // namespace escobar
