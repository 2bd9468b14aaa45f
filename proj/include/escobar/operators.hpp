#pragma once

// Dirichlet-to-Neumann map, harmonic extension, Sobolev norms and the energy
// quadratic form on the discretized spaces.
//
// Convention: Lambda carries the c_n factor, <Lambda v, v> = c_n \int_B |grad Ev|^2,
// so on the flat ball Lambda is diagonal with entry c_n * l on degree-l harmonics.

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "escobar/geometry.hpp"
#include "escobar/harmonics.hpp"

namespace escobar {

struct SpectralOperator {
  int n = 3;
  int L = 0;
  Eigen::MatrixXd matrix;

  double symmetry_defect() const { return (matrix - matrix.transpose()).cwiseAbs().maxCoeff(); }
};

/// Flat geometries only; conformal requests throw (pull back through w instead).
SpectralOperator dtn_matrix(const ModelGeometry& geom, const BasisDescriptor& basis);

/// Diagonal of Lambda + c_hat * h on the flat ball with constant curvature h.
Eigen::VectorXd boundary_operator_diagonal(const Exponents& e, const BasisDescriptor& basis,
                                           double curvature = 1.0);

/// Evaluator of the harmonic extension Ev(y) = sum_i v_i r^l Y_i(y/|y|).
class HarmonicExtension {
 public:
  HarmonicExtension(std::shared_ptr<const BasisDescriptor> basis, Eigen::VectorXd coeffs);

  template <class T>
  T operator()(std::span<const T> y) const {
    std::vector<T> vals(basis_->size());
    basis_->evaluate_solid<T>(y, vals);
    T acc(0.0);
    for (std::size_t i = 0; i < vals.size(); ++i) acc += vals[i] * coeffs_[static_cast<Eigen::Index>(i)];
    return acc;
  }

  const BasisDescriptor& basis() const { return *basis_; }

 private:
  std::shared_ptr<const BasisDescriptor> basis_;
  Eigen::VectorXd coeffs_;
};

HarmonicExtension harmonic_extend(const BoundaryField& v);

/// ||v||^2_{H^{1/2}} = sum (1 + l) v_i^2.
double h_half_norm(const BoundaryField& v);
double h_half_inner(const BoundaryField& a, const BoundaryField& b);
Eigen::VectorXd h_half_weights(const BasisDescriptor& basis);

/// u = Ev + u0 with u0 = sum_{i,k} c_{ik} (1 - r^2) r^{2k} r^l Y_i vanishing on
/// the sphere. On the flat ball (R_g = 0) the two parts are energy-orthogonal.
struct InteriorField {
  BoundaryField harmonic;
  int radial_order = 0;     // K
  Eigen::VectorXd interior; // size N*K, index i*K + k

  InteriorField() = default;
  InteriorField(BoundaryField v, int K, Eigen::VectorXd c);
  static InteriorField from_boundary(BoundaryField v, int K = 0);

  InteriorField scaled(double t) const;
  InteriorField harmonic_part() const;
  InteriorField interior_part() const;

  /// Radial profile of channel i as (power, coefficient) pairs.
  std::vector<std::pair<int, double>> radial_profile(std::size_t i, int degree) const;

  template <class T>
  T evaluate(const BasisDescriptor& basis, std::span<const T> y) const;
};

InteriorField operator-(const InteriorField& a, const InteriorField& b);
InteriorField operator+(const InteriorField& a, const InteriorField& b);

/// \int_B |grad u|^2, closed form per channel.
double dirichlet_integral(const InteriorField& u);
/// \int_B u^2, closed form.
double ball_l2_squared(const InteriorField& u);
/// Bilinear versions on two fields with the same (n, L, K).
double dirichlet_inner(const InteriorField& a, const InteriorField& b);
double ball_l2_inner(const InteriorField& a, const InteriorField& b);
/// ||u||_{H^1(B)}.
double h1_norm(const InteriorField& u);
double h1_inner(const InteriorField& a, const InteriorField& b);

/// c_n \int |grad u|^2 + \int R_g u^2 + c_hat \int h_g u^2 in the geometry.
double energy_form(const ModelGeometry& geom, const InteriorField& u);
/// Cross term c_n \int grad u0 . grad Ev + \int R_g u0 Ev (flat ball).
double energy_cross_term(const Exponents& e, const InteriorField& u);
/// ||Delta u||_{L^2(B)}, closed form.
double laplacian_l2_norm(const InteriorField& u);

struct BallQuadrature {
  int n = 3;
  std::size_t count = 0;
  std::vector<double> points;  // count * n
  std::vector<double> weights;

  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
};

/// Radial Gauss-Legendre on [0, 1] (with r^{n-1} folded into the weights) times a sphere rule.
BallQuadrature ball_quadrature(int n, int radial_nodes, int sphere_degree);

/// Export a dense operator as CSV.
void write_operator_csv(const SpectralOperator& op, const std::string& path);

// ---------------------------------------------------------------------------

template <class T>
T InteriorField::evaluate(const BasisDescriptor& basis, std::span<const T> y) const {
  check_compatible(basis, harmonic);
  std::vector<T> vals(basis.size());
  basis.evaluate_solid<T>(y, vals);
  T r2(0.0);
  for (const auto& c : y) r2 += c * c;
  std::vector<T> radial(static_cast<std::size_t>(radial_order));
  if (radial_order > 0) {
    const T bump = 1.0 - r2;
    radial[0] = bump;
    for (int k = 1; k < radial_order; ++k) radial[static_cast<std::size_t>(k)] = radial[static_cast<std::size_t>(k - 1)] * r2;
  }
  T acc(0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    T ch(harmonic.coeffs[static_cast<Eigen::Index>(i)]);
    for (int k = 0; k < radial_order; ++k) {
      const double c = interior[static_cast<Eigen::Index>(i * static_cast<std::size_t>(radial_order) + static_cast<std::size_t>(k))];
      if (c != 0.0) ch += c * radial[static_cast<std::size_t>(k)];
    }
    acc += ch * vals[i];
  }
  return acc;
}

}  // namespace escobar
