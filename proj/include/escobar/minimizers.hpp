#pragma once

// The explicit minimizer family on the ball and distances to it.
//
// A member is u(y) = c |y - y0|^{2-n} with |y0| > 1. It is parametrized here by
// an amplitude and the inverted pole zeta = y0 / |y0|^2 in the open unit ball:
//   u(y) = amplitude * (1 - 2 y.zeta + |zeta|^2 |y|^2)^{(2-n)/2},
// so zeta = 0 is the constant `amplitude`, and amplitude = c |y0|^{2-n}.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "escobar/functional.hpp"
#include "escobar/halfspace.hpp"
#include "escobar/operators.hpp"

namespace escobar {

struct BubbleParams {
  double amplitude = 1.0;
  std::vector<double> zeta;  // size n, |zeta| < 1

  /// From the pole form c |y - y0|^{2-n}. Throws ConfigError if |y0| <= 1.
  static BubbleParams from_pole(double c, std::span<const double> y0);
  static BubbleParams constant(int n, double amplitude);

  int dim() const { return static_cast<int>(zeta.size()); }
  double rho() const;
  /// y0 = zeta / |zeta|^2; empty for the constant member.
  std::vector<double> pole() const;
  /// c in the pole form (equals amplitude for the constant member).
  double pole_coefficient() const;
  void validate() const;
};

class Bubble {
 public:
  explicit Bubble(BubbleParams params);

  const BubbleParams& params() const { return params_; }
  int dim() const { return params_.dim(); }

  /// u at a point of the closed ball.
  double value(std::span<const double> y) const;
  /// (u, d_r u) at a point of the unit sphere.
  std::pair<double, double> boundary(std::span<const double> y) const;
  NodalEvaluator nodal() const;

  /// Exact harmonic coefficients of the trace up to degree L.
  BoundaryField trace(int L) const;
  BoundaryField trace(const BasisDescriptor& basis) const;
  /// sum over the degree-l block of squared trace coefficients, closed form.
  double degree_mass(int l) const;
  /// The constant c' for which u solves the boundary problem with right side c_hat c' u^{n/(n-2)}.
  double ypb_constant() const;
  /// Amplitude scaling that puts the trace on the unit p-mass sphere.
  double normalizing_factor(int grid_degree = 0) const;
  /// Quadrature degree resolving the trace to ~1e-13.
  int resolving_degree() const;

 private:
  BubbleParams params_;
  Exponents exps_;
};

/// The bubble with its gradient, as a test field for the half-space transfer.
BallFunction as_ball_function(const Bubble& b);

/// Qtilde of the bubble trace from its exact pointwise values.
double bubble_Qtilde(const Bubble& b);
/// L^2 norm of the (unprojected) first variation of Qtilde at the normalized bubble trace.
double bubble_gradient_norm(const Bubble& b);

enum class NormTag { H1, Hhalf, LpConformal, EnergyConformal };
std::string to_string(NormTag t);
NormTag norm_tag_from_string(const std::string& s);

struct DistanceReport {
  double value = 0.0;
  BubbleParams argmin;
  NormTag tag = NormTag::Hhalf;
  int iterations = 0;
  int multistart_count = 0;
  bool converged = true;
  std::string diagnostics;
};

struct DistanceOptions {
  int multistarts = 26;
  double tolerance = 1e-10;
  int max_iterations = 2000;
  std::uint64_t seed = 0x5eedULL;
};

/// Relative distance inf ||v - b|| / ||v|| over the family. Hhalf and H1 act on
/// the harmonic extension; LpConformal is the boundary L^p norm.
DistanceReport distance_to_family(const BoundaryField& v, NormTag tag, const DistanceOptions& opt = {});
/// H1 and EnergyConformal act on the full interior field.
DistanceReport distance_to_family(const InteriorField& u, NormTag tag, const DistanceOptions& opt = {});

enum class ConformalDistance { Lp, Energy };
enum class EvaluationRoute { Pullback, Intrinsic };

/// Distance between u1 and u2 measured in the metric of geom:
///   Lp:     (\int_B |u1 - u2|^{2n/(n-2)} dvol_g)^{(n-2)/(2n)}
///   Energy: (<d, L_g d> + <d, B_g d>)^{1/2}, d = u1 - u2.
double conformal_distance(const ModelGeometry& geom, const InteriorField& u1, const InteriorField& u2,
                          ConformalDistance variant, EvaluationRoute route = EvaluationRoute::Pullback);

/// Derivative-free minimization (Nelder-Mead) used by the multistart searches.
struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double tol, int max_iter);

}  // namespace escobar
