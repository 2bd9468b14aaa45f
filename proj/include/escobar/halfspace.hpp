#pragma once

// Weighted transfer between the unit ball and the upper half-space
// R^n_+ = {(x, t) : t > 0}. The conformal diffeomorphism
//   G(x, t) = (2x, 1 - t^2 - |x|^2) / ((1 + t)^2 + |x|^2)
// maps R^n_+ onto the ball with |dG| = 2 / ((1 + t)^2 + |x|^2), and
//   phibar(x, t) = |dG|^{(n-2)/2} phi(G(x, t)).
// Then \int_{t=0} |phibar|^p dx = \int_S |phi|^p and
//   \int_{R^n_+} |grad phibar|^2 = \int_B |grad phi|^2 + ((n-2)/2) \int_S phi^2.

#include <functional>
#include <span>
#include <vector>

namespace escobar {

/// A function on the closed ball: returns phi(y) and writes grad phi(y).
using BallFunction = std::function<double(std::span<const double> y, std::span<double> grad)>;

/// Point of the ball corresponding to (x, t).
std::vector<double> halfspace_to_ball(std::span<const double> X);

class HalfspaceTransfer {
 public:
  HalfspaceTransfer(int n, BallFunction phi);

  int dim() const { return n_; }
  double value(std::span<const double> X) const;
  /// phibar(X), writing grad phibar(X) into grad.
  double value_and_gradient(std::span<const double> X, std::span<double> grad) const;

 private:
  int n_;
  BallFunction phi_;
};

struct IdentityCheck {
  double halfspace_side = 0.0;
  double ball_side = 0.0;
  double relative_error = 0.0;
  int radial_nodes = 0;  // final radial resolution of the half-space rule
};

/// \int_{t=0} |phibar|^p dx against \int_S |phi|^p.
IdentityCheck check_boundary_identity(int n, const BallFunction& phi);
/// \int |grad phibar|^2 against \int_B |grad phi|^2 + ((n-2)/2) \int_S phi^2.
IdentityCheck check_gradient_identity(int n, const BallFunction& phi);

/// Test fields.
BallFunction ball_constant(int n, double c);
BallFunction ball_coordinate(int n, int axis);
BallFunction ball_coordinate_squared(int n, int axis);

}  // namespace escobar
