#include "escobar/geometry.hpp"

#include <sstream>

#include "escobar/operators.hpp"

namespace escobar {

Exponents Exponents::of(int n) {
  if (n != 3 && n != 4) {
    throw ConfigError("unsupported dimension n = " + std::to_string(n) +
                      "; supported dimensions are {3, 4}");
  }
  Exponents e;
  e.n = n;
  const double nd = n;
  e.c_n = 4.0 * (nd - 1.0) / (nd - 2.0);
  e.c_hat = 2.0 * (nd - 1.0);
  e.p = 2.0 * (nd - 1.0) / (nd - 2.0);
  e.crit = nd / (nd - 2.0);
  e.hess_power = 2.0 / (nd - 2.0);
  e.interior_p = 2.0 * nd / (nd - 2.0);
  return e;
}

ModelGeometry flat_ball(int n) {
  ModelGeometry g;
  g.exps_ = Exponents::of(n);
  g.n_ = n;
  g.kind_ = GeometryKind::FlatBall;
  return g;
}

ModelGeometry conformal_ball(int n, BoundaryField w) {
  ModelGeometry g;
  g.exps_ = Exponents::of(n);
  if (w.n != n) throw ConfigError("conformal factor dimension does not match n");
  auto basis = std::make_shared<const BasisDescriptor>(build_basis(n, w.L));
  check_compatible(*basis, w);
  g.n_ = n;
  g.kind_ = GeometryKind::ConformalBall;
  g.w_ = std::move(w);
  g.w_basis_ = basis;

  // w is harmonic, so its minimum over the ball sits on the sphere; the
  // interior shells are checked as well.
  const BallQuadrature sample = ball_quadrature(n, 8, 2 * g.w_->L + 12);
  const QuadratureGrid shell = quadrature_grid(n, 0, 2 * g.w_->L + 12);
  auto check = [&](std::span<const double> y) {
    const double val = g.factor<double>(y);
    if (!(val > 0.0)) {
      std::ostringstream os;
      os << "conformal factor is not positive: w = " << val << " at y = (";
      for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
      os << ")";
      throw ConfigError(os.str());
    }
  };
  for (std::size_t q = 0; q < shell.count; ++q) check(shell.node(q));
  for (std::size_t q = 0; q < sample.count; ++q) check(sample.point(q));
  return g;
}

Eigen::VectorXd ModelGeometry::mean_curvature_samples(const QuadratureGrid& grid) const {
  Eigen::VectorXd h = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid.count));
  if (!w_) return h;
  // h_{g_w} = w^{-n/(n-2)} (h w + (2/(n-2)) d_r w), d_r of a solid harmonic of degree l is l Y_l.
  std::vector<double> vals(w_basis_->size());
  for (std::size_t q = 0; q < grid.count; ++q) {
    w_basis_->evaluate_solid<double>(grid.node(q), vals);
    double wv = 0.0, dw = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double c = w_->coeffs[static_cast<Eigen::Index>(i)];
      wv += c * vals[i];
      dw += c * w_basis_->degree(i) * vals[i];
    }
    h[static_cast<Eigen::Index>(q)] =
        std::pow(wv, -exps_.crit) * (wv + 2.0 / (n_ - 2.0) * dw);
  }
  return h;
}

}  // namespace escobar
