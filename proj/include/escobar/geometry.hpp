#pragma once

#include <memory>
#include <optional>
#include <span>

#include "escobar/harmonics.hpp"

namespace escobar {

/// Dimensional constants of the boundary Yamabe problem.
struct Exponents {
  int n = 3;
  double c_n = 8.0;        // 4(n-1)/(n-2)
  double c_hat = 4.0;      // 2(n-1)
  double p = 4.0;          // 2(n-1)/(n-2), critical trace exponent
  double crit = 3.0;       // n/(n-2) = p - 1
  double hess_power = 2.0; // 2/(n-2) = p - 2
  double interior_p = 6.0; // 2n/(n-2)

  static Exponents of(int n);
};

enum class GeometryKind { FlatBall, ConformalBall };

/// Unit ball with the flat metric or a conformal metric w^{4/(n-2)} delta, w a
/// positive harmonic polynomial. All conformal computations are pulled back to
/// the flat ball through multiplication by w; R_g = 0 in both cases.
class ModelGeometry {
 public:
  int dim() const { return n_; }
  GeometryKind kind() const { return kind_; }
  bool is_flat() const { return kind_ == GeometryKind::FlatBall; }
  const Exponents& exps() const { return exps_; }
  bool scalar_curvature_nonnegative() const { return true; }
  double scalar_curvature() const { return 0.0; }

  /// Harmonic coefficients of w; nullptr for the flat ball.
  const BoundaryField* conformal_factor() const { return w_ ? &*w_ : nullptr; }
  const BasisDescriptor* factor_basis() const { return w_basis_.get(); }
  int factor_degree() const { return w_ ? w_->L : 0; }

  /// w at a point of the closed ball (1 for the flat ball).
  template <class T>
  T factor(std::span<const T> y) const;

  /// Boundary mean curvature h_g at the grid nodes.
  Eigen::VectorXd mean_curvature_samples(const QuadratureGrid& grid) const;

  friend ModelGeometry flat_ball(int n);
  friend ModelGeometry conformal_ball(int n, BoundaryField w);

 private:
  int n_ = 3;
  GeometryKind kind_ = GeometryKind::FlatBall;
  Exponents exps_;
  std::optional<BoundaryField> w_;
  std::shared_ptr<const BasisDescriptor> w_basis_;
};

ModelGeometry flat_ball(int n);

/// Throws ConfigError if w is not strictly positive on a dense sample of the
/// closed ball; the message names the offending point.
ModelGeometry conformal_ball(int n, BoundaryField w);

template <class T>
T ModelGeometry::factor(std::span<const T> y) const {
  if (!w_) return T(1.0);
  std::vector<T> vals(w_basis_->size());
  w_basis_->evaluate_solid<T>(y, vals);
  T acc(0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) acc += vals[i] * w_->coeffs[static_cast<Eigen::Index>(i)];
  return acc;
}

}  // namespace escobar
