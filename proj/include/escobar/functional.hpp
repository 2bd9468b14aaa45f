#pragma once

// The Escobar quotient Q on the ball, its boundary reduction Qtilde(v) = Q(Ev),
// and the constrained first and second variations on
//   B = { v > 0 : \int v^p dsigma_g = 1 },  p = 2(n-1)/(n-2).
//
// Fields are handled as coefficient vectors in the real harmonic basis. The
// coefficient space carries the L^2(S^{n-1}) inner product (the basis is
// orthonormal), so Euclidean gradients are L^2 representatives.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "escobar/geometry.hpp"
#include "escobar/harmonics.hpp"
#include "escobar/operators.hpp"

namespace escobar {

/// A 0-homogeneous functional on the coefficient space of degree-<=L boundary fields.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual const BasisDescriptor& basis() const = 0;
  virtual const Exponents& exps() const = 0;

  virtual double value(const Eigen::VectorXd& x) const = 0;
  /// Euclidean gradient in coefficient space.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;
  /// value(to) - value(from), formed from differences where possible.
  virtual double value_change(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const {
    return value(to) - value(from);
  }

  /// \int |v|^p dsigma_g.
  virtual double p_mass(const Eigen::VectorXd& x) const = 0;
  /// Coefficients of v^{n/(n-2)} (weighted by the metric), so that the tangent
  /// condition reads <mass_direction(v), phi> = 0.
  virtual Eigen::VectorXd mass_direction(const Eigen::VectorXd& x) const = 0;
  /// Smallest nodal value of the (pulled back) field and the node where it occurs.
  virtual double min_nodal_value(const Eigen::VectorXd& x, std::string* where = nullptr) const = 0;

  /// Throws NumericalError naming the first nonpositive node.
  void require_positive(const Eigen::VectorXd& x) const;
};

struct FunctionalOptions {
  /// Multiplies the boundary mean-curvature term; values other than 1 give
  /// synthetic operators used to exercise the nondegenerate branch.
  double boundary_curvature = 1.0;
  /// Quadrature degree; 0 selects the default for the (inner) truncation.
  int grid_degree = 0;
};

/// Qtilde(v) = <(Lambda + c_hat h) v, v> / (\int v^p)^{2/p} in a model geometry.
/// Conformal geometries evaluate Qtilde_flat(w v) on a basis of degree L + deg(w).
class BoundaryFunctional final : public Objective {
 public:
  BoundaryFunctional(const ModelGeometry& geom, int L, FunctionalOptions options = {});

  const BasisDescriptor& basis() const override { return basis_; }
  const Exponents& exps() const override { return exps_; }
  const ModelGeometry& geometry() const { return geom_; }
  const SphereTransform& inner_transform() const { return *inner_; }
  const Eigen::VectorXd& operator_diagonal() const { return diag_; }

  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override;
  double value_change(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const override;
  double p_mass(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd mass_direction(const Eigen::VectorXd& x) const override;
  double min_nodal_value(const Eigen::VectorXd& x, std::string* where = nullptr) const override;

  /// Numerator <(Lambda + c_hat h) v, v>.
  double numerator(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
  Eigen::VectorXd pull(const Eigen::VectorXd& z) const;

  ModelGeometry geom_;
  Exponents exps_;
  BasisDescriptor basis_;
  std::shared_ptr<const SphereTransform> inner_;
  Eigen::VectorXd diag_;                 // on the inner basis
  std::optional<Eigen::MatrixXd> mult_;  // inner x outer, multiplication by w
};

struct ConstraintState {
  BoundaryField v;
  double p_mass = 1.0;
};

struct HessianData {
  Eigen::MatrixXd tangent_basis;  // N x (N-1), L^2-orthonormal basis of T_v B
  Eigen::MatrixXd matrix;         // (1/2) Hessian in that basis
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXd eigenvectors;   // coefficient space, N x (N-1)
  double residual = 0.0;          // max_j ||A x_j - lambda_j x_j||
};

double eval_Q(const ModelGeometry& geom, const InteriorField& u);
/// Q evaluated from the metric data of g_w directly (no pullback); used to
/// cross-check the conformal covariance.
double eval_Q_intrinsic(const ModelGeometry& geom, const InteriorField& u);
/// c_n \int w^2 |grad u|^2 + c_hat \int_S h_g u^2 dsigma_g from the metric data of g_w.
double energy_form_intrinsic(const ModelGeometry& geom, const InteriorField& u);
double eval_Qtilde(const ModelGeometry& geom, const BoundaryField& v);

/// v / ||v||_p. Throws NumericalError if v is not positive at all nodes.
ConstraintState normalize_p(const Objective& obj, const BoundaryField& v);
/// phi - <v^{n/(n-2)}, phi> v.
BoundaryField project_tangent(const Objective& obj, const ConstraintState& state,
                              const BoundaryField& phi);
/// L^2 representative in T_v B of the first variation.
BoundaryField grad_Qtilde(const Objective& obj, const ConstraintState& state);
HessianData hessian_Qtilde(const Objective& obj, const ConstraintState& state);
/// Orthonormal basis of the complement of `normal` in R^N.
Eigen::MatrixXd orthonormal_complement(const Eigen::VectorXd& normal);

/// ||c_n d_nu u + c_hat h u - c_hat c u^{n/(n-2)}||_{L^2(S)} + ||L_g u||_{L^2(B)} (flat ball).
double residual_YPB(const ModelGeometry& geom, const InteriorField& u, double c);

/// Same residual for a field given pointwise on the sphere by its value and
/// outward normal derivative (used for non-polynomial fields such as bubbles).
using NodalEvaluator = std::function<std::pair<double, double>(std::span<const double>)>;
double residual_YPB_pointwise(const ModelGeometry& geom, const NodalEvaluator& u, double c,
                              int grid_degree);
/// Qtilde of a boundary field given pointwise (value, normal derivative of its
/// harmonic extension) on a quadrature grid of the requested degree.
double eval_Qtilde_pointwise(const ModelGeometry& geom, const NodalEvaluator& u, int grid_degree);

}  // namespace escobar
