#pragma once

// Real orthonormal spherical harmonics on S^{n-1} (n = 3, 4), product
// quadrature rules exact for spherical polynomials, and the coefficient
// transforms between nodal samples and harmonic coefficients.
//
// Index ordering (fixed, serialized coefficient vectors depend on it):
//   n = 3: degree l ascending, then order m = -l..l ascending.
//   n = 4: degree l ascending, then the S^2 sub-degree k = 0..l ascending,
//          then order m = -k..k ascending.
// Degree-l block of n = 3 starts at l^2; of n = 4 at l(l+1)(2l+1)/6.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "escobar/errors.hpp"

namespace escobar {

struct HarmonicIndex {
  int degree = 0;  // l
  int sub = 0;     // k (n = 4 only; equals l for n = 3)
  int order = 0;   // m
};

class BasisDescriptor {
 public:
  BasisDescriptor() = default;

  int dim() const { return n_; }
  int max_degree() const { return L_; }
  std::size_t size() const { return index_.size(); }
  const HarmonicIndex& index(std::size_t i) const { return index_[i]; }
  int degree(std::size_t i) const { return index_[i].degree; }
  std::size_t flat_index(int l, int k, int m) const;
  std::size_t flat_index(int l, int m) const { return flat_index(l, l, m); }
  std::size_t degree_offset(int l) const;
  static std::size_t multiplicity(int n, int l);
  /// |S^{n-1}|.
  double sphere_area() const;

  /// Values of the solid harmonics r^l Y_i(y/|y|) at a point y of R^n.
  /// Polynomial in the coordinates, so T may be a dual number.
  template <class T>
  void evaluate_solid(std::span<const T> y, std::span<T> out) const;

  std::vector<double> evaluate(std::span<const double> y) const {
    std::vector<double> out(size());
    evaluate_solid<double>(y, out);
    return out;
  }

  friend BasisDescriptor build_basis(int n, int L);

 private:
  int n_ = 0;
  int L_ = 0;
  std::vector<HarmonicIndex> index_;
  std::vector<double> norm_;
};

/// Throws ConfigError for n outside {3, 4} or negative L.
BasisDescriptor build_basis(int n, int L);

struct QuadratureGrid {
  int n = 0;
  int exact_degree = 0;
  std::size_t count = 0;
  std::vector<double> nodes;  // count * n, row-major
  std::vector<double> weights;

  std::span<const double> node(std::size_t i) const {
    return {nodes.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
};

/// Product rule on S^{n-1} exact for spherical polynomials of degree <= target_degree.
QuadratureGrid quadrature_grid(int n, int L, int target_degree);

/// Default grid degree: 4L for n = 3 (quartic nonlinearity), 3L for n = 4.
int default_target_degree(int n, int L);

/// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int count, std::vector<double>& x, std::vector<double>& w);

struct BoundaryField {
  int n = 3;
  int L = 0;
  Eigen::VectorXd coeffs;

  BoundaryField() = default;
  BoundaryField(int n_, int L_, Eigen::VectorXd c) : n(n_), L(L_), coeffs(std::move(c)) {}
  static BoundaryField zero(const BasisDescriptor& b) {
    return {b.dim(), b.max_degree(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()))};
  }
};

void check_compatible(const BasisDescriptor& basis, const BoundaryField& f);

/// Nodal values -> coefficients by quadrature.
BoundaryField analyze(std::span<const double> samples, const QuadratureGrid& grid,
                      const BasisDescriptor& basis);
Eigen::VectorXd synthesize(const BoundaryField& field, const QuadratureGrid& grid,
                           const BasisDescriptor& basis);
double integrate_boundary(std::span<const double> samples, const QuadratureGrid& grid);

/// Basis and grid with a cached synthesis matrix.
class SphereTransform {
 public:
  SphereTransform(BasisDescriptor basis, QuadratureGrid grid);
  SphereTransform(int n, int L);  // default target degree

  const BasisDescriptor& basis() const { return basis_; }
  const QuadratureGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& synthesis() const { return synth_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const { return synth_ * coeffs; }
  Eigen::VectorXd analyze(const Eigen::VectorXd& samples) const {
    return synth_.transpose() * weights_.cwiseProduct(samples);
  }
  double integrate(const Eigen::VectorXd& samples) const { return weights_.dot(samples); }

 private:
  BasisDescriptor basis_;
  QuadratureGrid grid_;
  Eigen::MatrixXd synth_;
  Eigen::VectorXd weights_;
};

// ---------------------------------------------------------------------------

template <class T>
void BasisDescriptor::evaluate_solid(std::span<const T> y, std::span<T> out) const {
  // Q[l][m] = r^{l-m} * Pbar_l^m(z/r) built by the three-term recurrence, with
  // (x + i y)^m carried separately; all polynomial in the coordinates.
  const int Lk = L_;
  auto solid3 = [Lk](const T& x, const T& yy, const T& z, std::vector<T>& re_out) {
    // re_out[(k)*(k) + m + k] = unnormalized real solid harmonic of degree k, order m.
    const T r2 = x * x + yy * yy + z * z;
    std::vector<T> c(Lk + 1), s(Lk + 1);
    c[0] = T(1.0);
    s[0] = T(0.0);
    for (int m = 1; m <= Lk; ++m) {
      c[m] = x * c[m - 1] - yy * s[m - 1];
      s[m] = x * s[m - 1] + yy * c[m - 1];
    }
    re_out.assign(static_cast<std::size_t>((Lk + 1) * (Lk + 1)), T(0.0));
    std::vector<T> q(Lk + 1);
    for (int m = 0; m <= Lk; ++m) {
      q[m] = T(1.0);
      if (m + 1 <= Lk) q[m + 1] = (2.0 * m + 1.0) * z;
      for (int l = m + 2; l <= Lk; ++l) {
        q[l] = ((2.0 * l - 1.0) * z * q[l - 1] - (l + m - 1.0) * r2 * q[l - 2]) / double(l - m);
      }
      for (int l = m; l <= Lk; ++l) {
        re_out[static_cast<std::size_t>(l * l + l + m)] = q[l] * c[m];
        if (m > 0) re_out[static_cast<std::size_t>(l * l + l - m)] = q[l] * s[m];
      }
    }
  };

  if (n_ == 3) {
    std::vector<T> vals;
    solid3(y[0], y[1], y[2], vals);
    for (std::size_t i = 0; i < index_.size(); ++i) out[i] = vals[i] * norm_[i];
    return;
  }
  // n = 4: Gegenbauer(lambda = k + 1) solid polynomial in (x4, r^2) times a
  // degree-k solid harmonic of (x1, x2, x3).
  std::vector<T> s3;
  solid3(y[0], y[1], y[2], s3);
  const T x4 = y[3];
  const T r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
  std::size_t i = 0;
  std::vector<std::vector<T>> geg(static_cast<std::size_t>(Lk + 1));
  for (int k = 0; k <= Lk; ++k) {
    const double lam = k + 1.0;
    auto& g = geg[static_cast<std::size_t>(k)];
    g.assign(static_cast<std::size_t>(Lk - k + 1), T(0.0));
    g[0] = T(1.0);
    if (Lk - k >= 1) g[1] = 2.0 * lam * x4;
    for (int j = 2; j <= Lk - k; ++j) {
      g[j] = (2.0 * (j + lam - 1.0) * x4 * g[j - 1] - (j + 2.0 * lam - 2.0) * r2 * g[j - 2]) / double(j);
    }
  }
  for (int l = 0; l <= Lk; ++l) {
    for (int k = 0; k <= l; ++k) {
      for (int m = -k; m <= k; ++m, ++i) {
        out[i] = geg[static_cast<std::size_t>(k)][static_cast<std::size_t>(l - k)] *
                 s3[static_cast<std::size_t>(k * k + k + m)] * norm_[i];
      }
    }
  }
}

}  // namespace escobar
