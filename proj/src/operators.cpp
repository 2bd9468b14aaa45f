#include "escobar/operators.hpp"

#include <fstream>
#include <iomanip>

#include "escobar/dual.hpp"

namespace escobar {

SpectralOperator dtn_matrix(const ModelGeometry& geom, const BasisDescriptor& basis) {
  if (!geom.is_flat()) {
    throw ConfigError(
        "dtn_matrix is defined on the flat ball only; evaluate conformal geometries by "
        "pulling fields back through the conformal factor");
  }
  if (geom.dim() != basis.dim()) throw ConfigError("geometry and basis dimensions differ");
  SpectralOperator op;
  op.n = basis.dim();
  op.L = basis.max_degree();
  const auto N = static_cast<Eigen::Index>(basis.size());
  // c_n \int_S Y_i d_r(E Y_j), with d_r from forward differentiation along the ray
  const QuadratureGrid grid = quadrature_grid(op.n, op.L, 2 * op.L);
  const auto G = static_cast<Eigen::Index>(grid.count);
  Eigen::MatrixXd vals(G, N), radial(G, N);
  std::vector<Dual<1>> y(static_cast<std::size_t>(op.n)), out(basis.size());
  for (Eigen::Index q = 0; q < G; ++q) {
    const auto node = grid.node(static_cast<std::size_t>(q));
    const Dual<1> t = Dual<1>::variable(1.0, 0);
    for (int k = 0; k < op.n; ++k) y[static_cast<std::size_t>(k)] = t * node[static_cast<std::size_t>(k)];
    basis.evaluate_solid<Dual<1>>(y, out);
    for (Eigen::Index j = 0; j < N; ++j) {
      vals(q, j) = out[static_cast<std::size_t>(j)].v;
      radial(q, j) = out[static_cast<std::size_t>(j)].d[0];
    }
  }
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), G);
  op.matrix = geom.exps().c_n * vals.transpose() * w.asDiagonal() * radial;
  return op;
}

Eigen::VectorXd boundary_operator_diagonal(const Exponents& e, const BasisDescriptor& basis,
                                           double curvature) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    d[static_cast<Eigen::Index>(i)] = e.c_n * basis.degree(i) + e.c_hat * curvature;
  }
  return d;
}

HarmonicExtension::HarmonicExtension(std::shared_ptr<const BasisDescriptor> basis,
                                     Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.size()) != basis_->size()) {
    throw ConfigError("harmonic extension: coefficient count does not match basis");
  }
}

HarmonicExtension harmonic_extend(const BoundaryField& v) {
  auto basis = std::make_shared<const BasisDescriptor>(build_basis(v.n, v.L));
  check_compatible(*basis, v);
  return {basis, v.coeffs};
}

Eigen::VectorXd h_half_weights(const BasisDescriptor& basis) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) w[static_cast<Eigen::Index>(i)] = 1.0 + basis.degree(i);
  return w;
}

namespace {

int degree_in(int n, std::size_t i) {
  // Degree of flat index i without building a basis.
  int l = 0;
  std::size_t offset = 0;
  while (true) {
    const std::size_t mult = BasisDescriptor::multiplicity(n, l);
    if (i < offset + mult) return l;
    offset += mult;
    ++l;
  }
}

std::vector<int> degrees_of(int n, std::size_t size) {
  std::vector<int> d(size);
  int l = 0;
  std::size_t offset = 0, mult = BasisDescriptor::multiplicity(n, 0);
  for (std::size_t i = 0; i < size; ++i) {
    while (i >= offset + mult) {
      offset += mult;
      ++l;
      mult = BasisDescriptor::multiplicity(n, l);
    }
    d[i] = l;
  }
  return d;
}

void check_same_shape(const InteriorField& a, const InteriorField& b) {
  if (a.harmonic.n != b.harmonic.n || a.harmonic.L != b.harmonic.L ||
      a.radial_order != b.radial_order) {
    throw ConfigError("interior fields have different discretizations");
  }
}

template <class Kernel>
double channel_sum(const InteriorField& a, const InteriorField& b, Kernel kernel) {
  check_same_shape(a, b);
  const int n = a.harmonic.n;
  const auto degs = degrees_of(n, static_cast<std::size_t>(a.harmonic.coeffs.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < degs.size(); ++i) {
    const auto fa = a.radial_profile(i, degs[i]);
    const auto fb = b.radial_profile(i, degs[i]);
    for (const auto& [p, alpha] : fa)
      for (const auto& [q, beta] : fb) total += alpha * beta * kernel(p, q, degs[i], n);
  }
  return total;
}

}  // namespace

double h_half_inner(const BoundaryField& a, const BoundaryField& b) {
  if (a.n != b.n || a.coeffs.size() != b.coeffs.size()) throw ConfigError("fields differ in shape");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.coeffs.size(); ++i) {
    acc += (1.0 + degree_in(a.n, static_cast<std::size_t>(i))) * a.coeffs[i] * b.coeffs[i];
  }
  return acc;
}

double h_half_norm(const BoundaryField& v) { return std::sqrt(h_half_inner(v, v)); }

InteriorField::InteriorField(BoundaryField v, int K, Eigen::VectorXd c)
    : harmonic(std::move(v)), radial_order(K), interior(std::move(c)) {
  if (K < 0) throw ConfigError("radial order must be nonnegative");
  if (interior.size() != harmonic.coeffs.size() * K) {
    throw ConfigError("interior coefficient count must be N*K");
  }
}

InteriorField InteriorField::from_boundary(BoundaryField v, int K) {
  const auto size = v.coeffs.size() * K;
  return {std::move(v), K, Eigen::VectorXd::Zero(size)};
}

InteriorField InteriorField::scaled(double t) const {
  InteriorField r = *this;
  r.harmonic.coeffs *= t;
  r.interior *= t;
  return r;
}

InteriorField InteriorField::harmonic_part() const {
  InteriorField r = *this;
  r.interior.setZero();
  return r;
}

InteriorField InteriorField::interior_part() const {
  InteriorField r = *this;
  r.harmonic.coeffs.setZero();
  return r;
}

std::vector<std::pair<int, double>> InteriorField::radial_profile(std::size_t i, int degree) const {
  std::vector<std::pair<int, double>> f;
  const double v = harmonic.coeffs[static_cast<Eigen::Index>(i)];
  if (v != 0.0) f.emplace_back(degree, v);
  for (int k = 0; k < radial_order; ++k) {
    const double c = interior[static_cast<Eigen::Index>(i * static_cast<std::size_t>(radial_order) + static_cast<std::size_t>(k))];
    if (c == 0.0) continue;
    f.emplace_back(degree + 2 * k, c);
    f.emplace_back(degree + 2 * k + 2, -c);
  }
  return f;
}

InteriorField operator-(const InteriorField& a, const InteriorField& b) {
  check_same_shape(a, b);
  InteriorField r = a;
  r.harmonic.coeffs -= b.harmonic.coeffs;
  r.interior -= b.interior;
  return r;
}

InteriorField operator+(const InteriorField& a, const InteriorField& b) {
  check_same_shape(a, b);
  InteriorField r = a;
  r.harmonic.coeffs += b.harmonic.coeffs;
  r.interior += b.interior;
  return r;
}

double dirichlet_inner(const InteriorField& a, const InteriorField& b) {
  // \int_0^1 (f' g' + l(l+n-2) f g / r^2) r^{n-1} dr for monomials r^p, r^q.
  return channel_sum(a, b, [](int p, int q, int l, int n) {
    const double num = double(p) * q + double(l) * (l + n - 2);
    const int den = p + q + n - 2;
    return den == 0 ? 0.0 : num / den;
  });
}

double ball_l2_inner(const InteriorField& a, const InteriorField& b) {
  return channel_sum(a, b, [](int p, int q, int, int n) { return 1.0 / (p + q + n); });
}

double dirichlet_integral(const InteriorField& u) { return dirichlet_inner(u, u); }
double ball_l2_squared(const InteriorField& u) { return ball_l2_inner(u, u); }
double h1_inner(const InteriorField& a, const InteriorField& b) {
  return dirichlet_inner(a, b) + ball_l2_inner(a, b);
}
double h1_norm(const InteriorField& u) { return std::sqrt(h1_inner(u, u)); }

double laplacian_l2_norm(const InteriorField& u) {
  // Delta(r^a Y_l) = (a(a+n-2) - l(l+n-2)) r^{a-2} Y_l.
  return std::sqrt(std::max(0.0, channel_sum(u, u, [](int p, int q, int l, int n) {
    const double cp = double(p) * (p + n - 2) - double(l) * (l + n - 2);
    const double cq = double(q) * (q + n - 2) - double(l) * (l + n - 2);
    if (cp == 0.0 || cq == 0.0) return 0.0;
    return cp * cq / (p + q - 4 + n);
  })));
}

double energy_cross_term(const Exponents& e, const InteriorField& u) {
  return e.c_n * dirichlet_inner(u.harmonic_part(), u.interior_part());
}

namespace {

template <int N>
double pulled_back_energy(const ModelGeometry& geom, const InteriorField& u) {
  const Exponents& e = geom.exps();
  const BasisDescriptor basis = build_basis(u.harmonic.n, u.harmonic.L);
  const int deg = geom.factor_degree() + u.harmonic.L + 2 * u.radial_order + 2;
  const BallQuadrature ball = ball_quadrature(N, deg + N / 2 + 2, 2 * deg);
  double grad = 0.0;
  for (std::size_t q = 0; q < ball.count; ++q) {
    std::array<Dual<N>, N> y;
    for (int d = 0; d < N; ++d) y[static_cast<std::size_t>(d)] = Dual<N>::variable(ball.point(q)[static_cast<std::size_t>(d)], d);
    const std::span<const Dual<N>> ys(y.data(), y.size());
    const Dual<N> val = geom.factor<Dual<N>>(ys) * u.evaluate<Dual<N>>(basis, ys);
    double g2 = 0.0;
    for (double c : val.d) g2 += c * c;
    grad += ball.weights[q] * g2;
  }
  const QuadratureGrid grid = quadrature_grid(N, 0, 2 * deg);
  double bdry = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    const double wu = geom.factor<double>(grid.node(q)) * u.evaluate<double>(basis, grid.node(q));
    bdry += grid.weights[q] * wu * wu;
  }
  return e.c_n * grad + e.c_hat * bdry;
}

}  // namespace

double energy_form(const ModelGeometry& geom, const InteriorField& u) {
  if (geom.dim() != u.harmonic.n) throw ConfigError("geometry and field dimensions differ");
  const Exponents& e = geom.exps();
  if (geom.is_flat()) {
    return e.c_n * dirichlet_integral(u) + e.c_hat * u.harmonic.coeffs.squaredNorm();
  }
  return geom.dim() == 3 ? pulled_back_energy<3>(geom, u) : pulled_back_energy<4>(geom, u);
}

BallQuadrature ball_quadrature(int n, int radial_nodes, int sphere_degree) {
  const QuadratureGrid sphere = quadrature_grid(n, 0, sphere_degree);
  std::vector<double> x, w;
  gauss_legendre(radial_nodes, x, w);
  BallQuadrature b;
  b.n = n;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double r = 0.5 * (x[a] + 1.0);
    const double wr = 0.5 * w[a] * std::pow(r, n - 1);
    for (std::size_t q = 0; q < sphere.count; ++q) {
      for (double c : sphere.node(q)) b.points.push_back(r * c);
      b.weights.push_back(wr * sphere.weights[q]);
    }
  }
  b.count = b.weights.size();
  return b;
}

void write_operator_csv(const SpectralOperator& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) out << (j ? "," : "") << op.matrix(i, j);
    out << "\n";
  }
}

}  // namespace escobar
