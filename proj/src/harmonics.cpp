#include "escobar/harmonics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace escobar {

namespace {

void check_dimension(int n) {
  if (n != 3 && n != 4) {
    throw ConfigError("unsupported dimension n = " + std::to_string(n) +
                      "; supported dimensions are {3, 4}");
  }
}

}  // namespace

std::size_t BasisDescriptor::multiplicity(int n, int l) {
  if (n == 3) return static_cast<std::size_t>(2 * l + 1);
  return static_cast<std::size_t>((l + 1) * (l + 1));
}

std::size_t BasisDescriptor::degree_offset(int l) const {
  const auto ll = static_cast<std::size_t>(l);
  if (n_ == 3) return ll * ll;
  return ll * (ll + 1) * (2 * ll + 1) / 6;
}

std::size_t BasisDescriptor::flat_index(int l, int k, int m) const {
  if (l < 0 || l > L_) throw ConfigError("harmonic degree out of range");
  if (n_ == 3) {
    if (m < -l || m > l) throw ConfigError("harmonic order out of range");
    return degree_offset(l) + static_cast<std::size_t>(m + l);
  }
  if (k < 0 || k > l || m < -k || m > k) throw ConfigError("harmonic index out of range");
  return degree_offset(l) + static_cast<std::size_t>(k * k + m + k);
}

double BasisDescriptor::sphere_area() const {
  return n_ == 3 ? 4.0 * std::numbers::pi : 2.0 * std::numbers::pi * std::numbers::pi;
}

BasisDescriptor build_basis(int n, int L) {
  check_dimension(n);
  if (L < 0) throw ConfigError("truncation degree must be nonnegative");
  BasisDescriptor b;
  b.n_ = n;
  b.L_ = L;
  for (int l = 0; l <= L; ++l) {
    if (n == 3) {
      for (int m = -l; m <= l; ++m) b.index_.push_back({l, l, m});
    } else {
      for (int k = 0; k <= l; ++k)
        for (int m = -k; m <= k; ++m) b.index_.push_back({l, k, m});
    }
  }
  b.norm_.assign(b.index_.size(), 1.0);

  // Normalize against a rule exact for the squares.
  const QuadratureGrid grid = quadrature_grid(n, L, 2 * L);
  std::vector<double> acc(b.size(), 0.0), vals(b.size());
  for (std::size_t q = 0; q < grid.count; ++q) {
    b.evaluate_solid<double>(grid.node(q), vals);
    for (std::size_t i = 0; i < vals.size(); ++i) acc[i] += grid.weights[q] * vals[i] * vals[i];
  }
  for (std::size_t i = 0; i < acc.size(); ++i) b.norm_[i] = 1.0 / std::sqrt(acc[i]);
  return b;
}

void gauss_legendre(int count, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(count), 0.0);
  w.assign(static_cast<std::size_t>(count), 0.0);
  auto legendre = [count](double t, double& p, double& dp) {
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= count; ++k) {
      const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    p = p1;
    dp = count * (t * p1 - p0) / (t * t - 1.0);
  };
  if (count == 1) {
    w[0] = 2.0;
    return;
  }
  for (int i = 0; i < count; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double p = 0.0, dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      legendre(t, p, dp);
      const double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    legendre(t, p, dp);
    x[static_cast<std::size_t>(i)] = t;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

int default_target_degree(int n, int L) { return n == 3 ? 4 * L : 3 * L; }

QuadratureGrid quadrature_grid(int n, int L, int target_degree) {
  check_dimension(n);
  if (target_degree < 2 * L) throw ConfigError("quadrature target degree must be at least 2L");
  const int d = std::max(target_degree, 0);
  const int n_polar = d / 2 + 1;  // 2 n_polar - 1 >= d
  const int n_azimuth = d + 1;
  QuadratureGrid g;
  g.n = n;
  g.exact_degree = d;

  std::vector<double> tx, tw;
  gauss_legendre(n_polar, tx, tw);
  std::vector<std::array<double, 3>> s2_nodes;
  std::vector<double> s2_weights;
  for (int a = 0; a < n_polar; ++a) {
    const double ct = tx[static_cast<std::size_t>(a)];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int b = 0; b < n_azimuth; ++b) {
      const double phi = 2.0 * std::numbers::pi * b / n_azimuth;
      s2_nodes.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      s2_weights.push_back(tw[static_cast<std::size_t>(a)] * 2.0 * std::numbers::pi / n_azimuth);
    }
  }

  if (n == 3) {
    g.count = s2_nodes.size();
    for (std::size_t i = 0; i < s2_nodes.size(); ++i) {
      g.nodes.insert(g.nodes.end(), s2_nodes[i].begin(), s2_nodes[i].end());
    }
    g.weights = s2_weights;
    return g;
  }

  // S^3: x4 = cos(chi) with weight sin^2(chi) d chi, i.e. Gauss-Chebyshev of the
  // second kind in t = cos(chi), times the S^2 rule.
  const int n_chi = n_polar;
  for (int j = 1; j <= n_chi; ++j) {
    const double ang = j * std::numbers::pi / (n_chi + 1);
    const double t = std::cos(ang);
    const double st = std::sin(ang);
    const double wt = std::numbers::pi / (n_chi + 1) * st * st;
    for (std::size_t i = 0; i < s2_nodes.size(); ++i) {
      g.nodes.push_back(st * s2_nodes[i][0]);
      g.nodes.push_back(st * s2_nodes[i][1]);
      g.nodes.push_back(st * s2_nodes[i][2]);
      g.nodes.push_back(t);
      g.weights.push_back(wt * s2_weights[i]);
    }
  }
  g.count = g.weights.size();
  return g;
}

void check_compatible(const BasisDescriptor& basis, const BoundaryField& f) {
  if (f.n != basis.dim() || f.L != basis.max_degree() ||
      static_cast<std::size_t>(f.coeffs.size()) != basis.size()) {
    throw ConfigError("boundary field (n=" + std::to_string(f.n) + ", L=" + std::to_string(f.L) +
                      ", size=" + std::to_string(f.coeffs.size()) +
                      ") does not match basis (n=" + std::to_string(basis.dim()) +
                      ", L=" + std::to_string(basis.max_degree()) + ")");
  }
}

BoundaryField analyze(std::span<const double> samples, const QuadratureGrid& grid,
                      const BasisDescriptor& basis) {
  if (samples.size() != grid.count) throw ConfigError("sample count does not match grid");
  if (grid.n != basis.dim()) throw ConfigError("grid and basis dimensions differ");
  BoundaryField f = BoundaryField::zero(basis);
  std::vector<double> vals(basis.size());
  for (std::size_t q = 0; q < grid.count; ++q) {
    basis.evaluate_solid<double>(grid.node(q), vals);
    const double s = grid.weights[q] * samples[q];
    for (std::size_t i = 0; i < vals.size(); ++i) f.coeffs[static_cast<Eigen::Index>(i)] += s * vals[i];
  }
  return f;
}

Eigen::VectorXd synthesize(const BoundaryField& field, const QuadratureGrid& grid,
                           const BasisDescriptor& basis) {
  check_compatible(basis, field);
  if (grid.n != basis.dim()) throw ConfigError("grid and basis dimensions differ");
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.count));
  std::vector<double> vals(basis.size());
  for (std::size_t q = 0; q < grid.count; ++q) {
    basis.evaluate_solid<double>(grid.node(q), vals);
    double acc = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) acc += vals[i] * field.coeffs[static_cast<Eigen::Index>(i)];
    out[static_cast<Eigen::Index>(q)] = acc;
  }
  return out;
}

double integrate_boundary(std::span<const double> samples, const QuadratureGrid& grid) {
  if (samples.size() != grid.count) throw ConfigError("sample count does not match grid");
  double acc = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) acc += grid.weights[q] * samples[q];
  return acc;
}

SphereTransform::SphereTransform(BasisDescriptor basis, QuadratureGrid grid)
    : basis_(std::move(basis)), grid_(std::move(grid)) {
  if (grid_.n != basis_.dim()) throw ConfigError("grid and basis dimensions differ");
  const auto nq = static_cast<Eigen::Index>(grid_.count);
  const auto nb = static_cast<Eigen::Index>(basis_.size());
  synth_.resize(nq, nb);
  weights_.resize(nq);
  std::vector<double> vals(basis_.size());
  for (Eigen::Index q = 0; q < nq; ++q) {
    basis_.evaluate_solid<double>(grid_.node(static_cast<std::size_t>(q)), vals);
    for (Eigen::Index i = 0; i < nb; ++i) synth_(q, i) = vals[static_cast<std::size_t>(i)];
    weights_[q] = grid_.weights[static_cast<std::size_t>(q)];
  }
}

SphereTransform::SphereTransform(int n, int L)
    : SphereTransform(build_basis(n, L), quadrature_grid(n, L, default_target_degree(n, L))) {}

}  // namespace escobar
