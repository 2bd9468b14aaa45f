#include "escobar/halfspace.hpp"

#include <array>
#include <cmath>

#include "escobar/dual.hpp"
#include "escobar/errors.hpp"
#include "escobar/harmonics.hpp"
#include "escobar/operators.hpp"

namespace escobar {

namespace {

template <int N>
double transfer(const BallFunction& phi, std::span<const double> X, std::span<double> grad) {
  using D = Dual<N>;
  std::array<D, N> Xd;
  for (int j = 0; j < N; ++j) Xd[static_cast<std::size_t>(j)] = D::variable(X[static_cast<std::size_t>(j)], j);
  const D& t = Xd[N - 1];
  D x2(0.0);
  for (int j = 0; j < N - 1; ++j) x2 += Xd[static_cast<std::size_t>(j)] * Xd[static_cast<std::size_t>(j)];
  const D S = (1.0 + t) * (1.0 + t) + x2;
  std::array<D, N> y;
  for (int j = 0; j < N - 1; ++j) y[static_cast<std::size_t>(j)] = 2.0 * Xd[static_cast<std::size_t>(j)] / S;
  y[N - 1] = (1.0 - t * t - x2) / S;
  const D weight = pow(2.0 / S, (N - 2) / 2.0);

  std::array<double, N> yv, g;
  for (int j = 0; j < N; ++j) yv[static_cast<std::size_t>(j)] = y[static_cast<std::size_t>(j)].v;
  const double pv = phi(yv, g);
  D composed(pv);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) composed.d[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)].d[static_cast<std::size_t>(j)];
  }
  const D out = weight * composed;
  if (!grad.empty())
    for (int j = 0; j < N; ++j) grad[static_cast<std::size_t>(j)] = out.d[static_cast<std::size_t>(j)];
  return out.v;
}

// Directions on S^{m}, m = 1 (uniform circle) or m = 2 (product rule).
struct Directions {
  int dim = 2;
  std::vector<double> nodes;
  std::vector<double> weights;
};

Directions directions(int ambient, int degree) {
  Directions d;
  d.dim = ambient;
  if (ambient == 2) {
    const int M = degree + 1;
    for (int k = 0; k < M; ++k) {
      const double a = 2.0 * M_PI * k / M;
      d.nodes.push_back(std::cos(a));
      d.nodes.push_back(std::sin(a));
      d.weights.push_back(2.0 * M_PI / M);
    }
  } else {
    const QuadratureGrid g = quadrature_grid(3, 0, degree);
    d.nodes = g.nodes;
    d.weights = g.weights;
  }
  return d;
}

// \int_0^inf R^{power} F(R) dR with R = s/(1-s) and Gauss-Legendre in s.
template <class F>
double radial_integral(int nodes, int power, F&& f) {
  std::vector<double> x, w;
  gauss_legendre(nodes, x, w);
  double acc = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double s = 0.5 * (x[a] + 1.0);
    const double R = s / (1.0 - s);
    const double jac = 0.5 * w[a] / ((1.0 - s) * (1.0 - s));
    acc += jac * std::pow(R, power) * f(R);
  }
  return acc;
}

template <class F>
IdentityCheck refine(F&& integral, double ball_side) {
  IdentityCheck c;
  c.ball_side = ball_side;
  double prev = integral(64);
  int nodes = 128;
  double cur = integral(nodes);
  while (std::abs(cur - prev) > 1e-11 * std::abs(cur) && nodes < 2048) {
    prev = cur;
    nodes *= 2;
    cur = integral(nodes);
  }
  c.halfspace_side = cur;
  c.radial_nodes = nodes;
  c.relative_error = std::abs(cur - ball_side) / std::max(std::abs(ball_side), 1e-300);
  return c;
}

void check_dim(int n) {
  if (n != 3 && n != 4) throw ConfigError("half-space transfer supports n in {3, 4}");
}

}  // namespace

std::vector<double> halfspace_to_ball(std::span<const double> X) {
  const std::size_t n = X.size();
  const double t = X[n - 1];
  double x2 = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) x2 += X[j] * X[j];
  const double S = (1.0 + t) * (1.0 + t) + x2;
  std::vector<double> y(n);
  for (std::size_t j = 0; j + 1 < n; ++j) y[j] = 2.0 * X[j] / S;
  y[n - 1] = (1.0 - t * t - x2) / S;
  return y;
}

HalfspaceTransfer::HalfspaceTransfer(int n, BallFunction phi) : n_(n), phi_(std::move(phi)) { check_dim(n); }

double HalfspaceTransfer::value(std::span<const double> X) const {
  return n_ == 3 ? transfer<3>(phi_, X, {}) : transfer<4>(phi_, X, {});
}

double HalfspaceTransfer::value_and_gradient(std::span<const double> X, std::span<double> grad) const {
  return n_ == 3 ? transfer<3>(phi_, X, grad) : transfer<4>(phi_, X, grad);
}

IdentityCheck check_boundary_identity(int n, const BallFunction& phi) {
  check_dim(n);
  const double p = 2.0 * (n - 1.0) / (n - 2.0);
  const QuadratureGrid sphere = quadrature_grid(n, 0, 96);
  std::vector<double> g(static_cast<std::size_t>(n));
  double ball = 0.0;
  for (std::size_t q = 0; q < sphere.count; ++q) ball += sphere.weights[q] * std::pow(std::abs(phi(sphere.node(q), g)), p);

  const HalfspaceTransfer T(n, phi);
  const Directions dirs = directions(n - 1, n == 3 ? 64 : 160);
  auto integral = [&](int nodes) {
    return radial_integral(nodes, n - 2, [&](double R) {
      double acc = 0.0;
      std::vector<double> X(static_cast<std::size_t>(n), 0.0);
      for (std::size_t k = 0; k < dirs.weights.size(); ++k) {
        for (int j = 0; j < n - 1; ++j) X[static_cast<std::size_t>(j)] = R * dirs.nodes[k * static_cast<std::size_t>(n - 1) + static_cast<std::size_t>(j)];
        acc += dirs.weights[k] * std::pow(std::abs(T.value(X)), p);
      }
      return acc;
    });
  };
  return refine(integral, ball);
}

IdentityCheck check_gradient_identity(int n, const BallFunction& phi) {
  check_dim(n);
  std::vector<double> g(static_cast<std::size_t>(n));
  const BallQuadrature bq = ball_quadrature(n, 48, 72);
  double dir = 0.0;
  for (std::size_t q = 0; q < bq.count; ++q) {
    phi(bq.point(q), g);
    double g2 = 0.0;
    for (double c : g) g2 += c * c;
    dir += bq.weights[q] * g2;
  }
  const QuadratureGrid sphere = quadrature_grid(n, 0, 96);
  double b2 = 0.0;
  for (std::size_t q = 0; q < sphere.count; ++q) {
    const double v = phi(sphere.node(q), g);
    b2 += sphere.weights[q] * v * v;
  }
  const double ball = dir + 0.5 * (n - 2.0) * b2;

  const HalfspaceTransfer T(n, phi);
  const int angular = n == 3 ? 48 : 28;
  const Directions dirs = directions(n - 1, angular);
  std::vector<double> cx, cw;
  gauss_legendre(angular / 2 + 2, cx, cw);
  auto integral = [&](int nodes) {
    return radial_integral(nodes, n - 1, [&](double R) {
      double acc = 0.0;
      std::vector<double> X(static_cast<std::size_t>(n)), grad(static_cast<std::size_t>(n));
      for (std::size_t a = 0; a < cx.size(); ++a) {
        // Polar angle from the t-axis, in (0, pi/2).
        const double chi = 0.25 * M_PI * (cx[a] + 1.0);
        const double wchi = 0.25 * M_PI * cw[a] * std::pow(std::sin(chi), n - 2);
        for (std::size_t k = 0; k < dirs.weights.size(); ++k) {
          for (int j = 0; j < n - 1; ++j)
            X[static_cast<std::size_t>(j)] = R * std::sin(chi) * dirs.nodes[k * static_cast<std::size_t>(n - 1) + static_cast<std::size_t>(j)];
          X[static_cast<std::size_t>(n - 1)] = R * std::cos(chi);
          T.value_and_gradient(X, grad);
          double g2 = 0.0;
          for (double c : grad) g2 += c * c;
          acc += wchi * dirs.weights[k] * g2;
        }
      }
      return acc;
    });
  };
  return refine(integral, ball);
}

BallFunction ball_constant(int n, double c) {
  return [n, c](std::span<const double>, std::span<double> g) {
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(j)] = 0.0;
    return c;
  };
}

BallFunction ball_coordinate(int n, int axis) {
  return [n, axis](std::span<const double> y, std::span<double> g) {
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(j)] = j == axis ? 1.0 : 0.0;
    return y[static_cast<std::size_t>(axis)];
  };
}

BallFunction ball_coordinate_squared(int n, int axis) {
  return [n, axis](std::span<const double> y, std::span<double> g) {
    const double v = y[static_cast<std::size_t>(axis)];
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(j)] = j == axis ? 2.0 * v : 0.0;
    return v * v;
  };
}

}  // namespace escobar
