#include "escobar/functional.hpp"

#include <cmath>
#include <sstream>

#include "escobar/dual.hpp"

namespace escobar {

namespace {

std::string describe_node(std::span<const double> y) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ")";
  return os.str();
}

double signed_pow(double u, double a) { return u >= 0 ? std::pow(u, a) : -std::pow(-u, a); }

}  // namespace

void Objective::require_positive(const Eigen::VectorXd& x) const {
  std::string where;
  const double m = min_nodal_value(x, &where);
  if (!(m > 0.0)) {
    std::ostringstream os;
    os << "boundary field is not positive: value " << m << " at node " << where;
    throw NumericalError(os.str());
  }
}

BoundaryFunctional::BoundaryFunctional(const ModelGeometry& geom, int L, FunctionalOptions options)
    : geom_(geom), exps_(geom.exps()), basis_(build_basis(geom.dim(), L)) {
  const int n = geom.dim();
  const int Lin = L + geom.factor_degree();
  const int target = options.grid_degree > 0 ? options.grid_degree : default_target_degree(n, Lin);
  inner_ = std::make_shared<const SphereTransform>(build_basis(n, Lin), quadrature_grid(n, Lin, target));
  diag_ = boundary_operator_diagonal(exps_, inner_->basis(), options.boundary_curvature);
  if (!geom.is_flat()) {
    // Boundary multiplication by w, exact on the product grid (degree 2L + Lw <= target).
    const QuadratureGrid& grid = inner_->grid();
    Eigen::MatrixXd outer(static_cast<Eigen::Index>(grid.count), static_cast<Eigen::Index>(basis_.size()));
    Eigen::VectorXd wv(static_cast<Eigen::Index>(grid.count));
    for (std::size_t q = 0; q < grid.count; ++q) {
      const auto vals = basis_.evaluate(grid.node(q));
      for (std::size_t j = 0; j < vals.size(); ++j) outer(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)) = vals[j];
      wv[static_cast<Eigen::Index>(q)] = geom.factor<double>(grid.node(q));
    }
    mult_ = inner_->synthesis().transpose() * (inner_->weights().cwiseProduct(wv)).asDiagonal() * outer;
  }
}

Eigen::VectorXd BoundaryFunctional::lift(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != basis_.size()) {
    throw ConfigError("coefficient vector does not match the functional's basis");
  }
  return mult_ ? Eigen::VectorXd(*mult_ * x) : x;
}

Eigen::VectorXd BoundaryFunctional::pull(const Eigen::VectorXd& z) const {
  return mult_ ? Eigen::VectorXd(mult_->transpose() * z) : z;
}

double BoundaryFunctional::numerator(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = lift(x);
  return z.dot(diag_.cwiseProduct(z));
}

double BoundaryFunctional::p_mass(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd u = inner_->synthesize(lift(x));
  return inner_->integrate(u.array().abs().pow(exps_.p).matrix());
}

double BoundaryFunctional::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = lift(x);
  const Eigen::VectorXd u = inner_->synthesize(z);
  const double P = inner_->integrate(u.array().abs().pow(exps_.p).matrix());
  if (!(P > 0.0)) throw NumericalError("boundary p-mass vanishes");
  return z.dot(diag_.cwiseProduct(z)) / std::pow(P, 2.0 / exps_.p);
}

double BoundaryFunctional::value_change(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const {
  const Eigen::VectorXd z0 = lift(from), z1 = lift(to);
  const Eigen::VectorXd u0 = inner_->synthesize(z0);
  const Eigen::VectorXd du = inner_->synthesize(z1 - z0);
  const Eigen::VectorXd a = u0.cwiseAbs();
  const Eigen::VectorXd b = (u0 + du).cwiseAbs();
  const double p = exps_.p;
  const double P = inner_->integrate(a.array().pow(p).matrix());
  if (!(P > 0.0)) throw NumericalError("boundary p-mass vanishes");
  Eigen::VectorXd dp(a.size());
  const int ip = static_cast<int>(std::lround(p));
  const bool integer = std::abs(p - ip) < 1e-14;
  for (Eigen::Index q = 0; q < a.size(); ++q) {
    if (integer) {
      // b^p - a^p = (b - a) sum_k b^k a^{p-1-k}
      double acc = 0.0, bk = 1.0;
      for (int k = 0; k < ip; ++k, bk *= b[q]) acc += bk * std::pow(a[q], ip - 1 - k);
      // |b| - |a| from the synthesized difference when no sign change occurs
      const double diff = (u0[q] + du[q]) * u0[q] > 0.0 ? (u0[q] > 0.0 ? du[q] : -du[q]) : b[q] - a[q];
      dp[q] = diff * acc;
    } else {
      dp[q] = std::pow(b[q], p) - std::pow(a[q], p);
    }
  }
  const double dP = inner_->integrate(dp);
  const double N = z0.dot(diag_.cwiseProduct(z0));
  const double dN = (z1 - z0).dot(diag_.cwiseProduct(z1 + z0));
  const double D = std::pow(P, 2.0 / p);
  const double dD = D * std::expm1((2.0 / p) * std::log1p(dP / P));
  return (dN * D - N * dD) / (D * (D + dD));
}

Eigen::VectorXd BoundaryFunctional::mass_direction(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd u = inner_->synthesize(lift(x));
  Eigen::VectorXd s(u.size());
  for (Eigen::Index q = 0; q < u.size(); ++q) s[q] = signed_pow(u[q], exps_.crit);
  return pull(inner_->analyze(s));
}

Eigen::VectorXd BoundaryFunctional::gradient(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = lift(x);
  const Eigen::VectorXd u = inner_->synthesize(z);
  const double p = exps_.p;
  const double P = inner_->integrate(u.array().abs().pow(p).matrix());
  if (!(P > 0.0)) throw NumericalError("boundary p-mass vanishes");
  Eigen::VectorXd s(u.size());
  for (Eigen::Index q = 0; q < u.size(); ++q) s[q] = signed_pow(u[q], p - 1.0);
  const Eigen::VectorXd S1 = inner_->analyze(s);
  const double D = std::pow(P, 2.0 / p);
  const double N = z.dot(diag_.cwiseProduct(z));
  const Eigen::VectorXd gz = 2.0 * diag_.cwiseProduct(z) / D - N * 2.0 * std::pow(P, 2.0 / p - 1.0) * S1 / (D * D);
  return pull(gz);
}

Eigen::MatrixXd BoundaryFunctional::hessian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = lift(x);
  const Eigen::VectorXd u = inner_->synthesize(z);
  const double p = exps_.p;
  const double P = inner_->integrate(u.array().abs().pow(p).matrix());
  if (!(P > 0.0)) throw NumericalError("boundary p-mass vanishes");
  Eigen::VectorXd s(u.size()), m(u.size());
  for (Eigen::Index q = 0; q < u.size(); ++q) {
    s[q] = signed_pow(u[q], p - 1.0);
    m[q] = std::pow(std::abs(u[q]), p - 2.0);
  }
  const Eigen::VectorXd S1 = inner_->analyze(s);
  const Eigen::MatrixXd& S = inner_->synthesis();
  const Eigen::MatrixXd Mp = S.transpose() * inner_->weights().cwiseProduct(m).asDiagonal() * S;

  const double D = std::pow(P, 2.0 / p);
  const double N = z.dot(diag_.cwiseProduct(z));
  const Eigen::VectorXd gN = 2.0 * diag_.cwiseProduct(z);
  const Eigen::VectorXd gD = 2.0 * std::pow(P, 2.0 / p - 1.0) * S1;
  const Eigen::MatrixXd HN = Eigen::MatrixXd(2.0 * diag_.asDiagonal());
  const Eigen::MatrixXd HD = 2.0 * (2.0 / p - 1.0) * std::pow(P, 2.0 / p - 2.0) * p * S1 * S1.transpose() +
                             2.0 * (p - 1.0) * std::pow(P, 2.0 / p - 1.0) * Mp;
  Eigen::MatrixXd H = HN / D - (gN * gD.transpose() + gD * gN.transpose()) / (D * D) - N * HD / (D * D) +
                      2.0 * N * gD * gD.transpose() / (D * D * D);
  H = 0.5 * (H + H.transpose());
  if (mult_) return mult_->transpose() * H * *mult_;
  return H;
}

double BoundaryFunctional::min_nodal_value(const Eigen::VectorXd& x, std::string* where) const {
  const Eigen::VectorXd u = inner_->synthesize(lift(x));
  Eigen::Index arg = 0;
  const double m = u.minCoeff(&arg);
  if (where) *where = describe_node(inner_->grid().node(static_cast<std::size_t>(arg)));
  return m;
}

// ---------------------------------------------------------------------------

namespace {

double trace_p_mass(const ModelGeometry& geom, const InteriorField& u, const BasisDescriptor& basis) {
  const int Lin = u.harmonic.L + geom.factor_degree();
  const QuadratureGrid grid = quadrature_grid(geom.dim(), Lin, default_target_degree(geom.dim(), Lin));
  const Eigen::VectorXd tr = synthesize(u.harmonic, grid, basis);
  double P = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    const double wu = geom.factor<double>(grid.node(q)) * tr[static_cast<Eigen::Index>(q)];
    P += grid.weights[q] * std::pow(std::abs(wu), geom.exps().p);
  }
  return P;
}

template <int N>
double intrinsic_numerator(const ModelGeometry& geom, const InteriorField& u, const BasisDescriptor& basis) {
  const Exponents& e = geom.exps();
  const int deg = geom.factor_degree() + u.harmonic.L + 2 * u.radial_order + 2;
  const BallQuadrature ball = ball_quadrature(N, deg + N / 2 + 2, 2 * deg);
  double grad = 0.0;
  for (std::size_t q = 0; q < ball.count; ++q) {
    std::array<Dual<N>, N> y;
    for (int d = 0; d < N; ++d) y[static_cast<std::size_t>(d)] = Dual<N>::variable(ball.point(q)[static_cast<std::size_t>(d)], d);
    const Dual<N> val = u.evaluate<Dual<N>>(basis, std::span<const Dual<N>>(y.data(), y.size()));
    const double w = geom.factor<double>(ball.point(q));
    double g2 = 0.0;
    for (double c : val.d) g2 += c * c;
    // |grad u|_g^2 dvol_g = w^2 |grad u|^2 dy
    grad += ball.weights[q] * w * w * g2;
  }
  const QuadratureGrid grid = quadrature_grid(N, 0, 4 * deg);
  const Eigen::VectorXd h = geom.mean_curvature_samples(grid);
  double bdry = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    const double w = geom.factor<double>(grid.node(q));
    const double uv = u.evaluate<double>(basis, grid.node(q));
    bdry += grid.weights[q] * h[static_cast<Eigen::Index>(q)] * uv * uv * std::pow(w, e.p);
  }
  return e.c_n * grad + e.c_hat * bdry;
}

}  // namespace

double energy_form_intrinsic(const ModelGeometry& geom, const InteriorField& u) {
  const BasisDescriptor basis = build_basis(u.harmonic.n, u.harmonic.L);
  check_compatible(basis, u.harmonic);
  return geom.dim() == 3 ? intrinsic_numerator<3>(geom, u, basis) : intrinsic_numerator<4>(geom, u, basis);
}

double eval_Q(const ModelGeometry& geom, const InteriorField& u) {
  const BasisDescriptor basis = build_basis(u.harmonic.n, u.harmonic.L);
  check_compatible(basis, u.harmonic);
  const double P = trace_p_mass(geom, u, basis);
  if (!(P > 0.0)) throw NumericalError("boundary trace has zero p-mass");
  return energy_form(geom, u) / std::pow(P, 2.0 / geom.exps().p);
}

double eval_Q_intrinsic(const ModelGeometry& geom, const InteriorField& u) {
  const BasisDescriptor basis = build_basis(u.harmonic.n, u.harmonic.L);
  check_compatible(basis, u.harmonic);
  const double P = trace_p_mass(geom, u, basis);
  if (!(P > 0.0)) throw NumericalError("boundary trace has zero p-mass");
  return energy_form_intrinsic(geom, u) / std::pow(P, 2.0 / geom.exps().p);
}

double eval_Qtilde(const ModelGeometry& geom, const BoundaryField& v) {
  if (v.n != geom.dim()) throw ConfigError("field and geometry dimensions differ");
  return BoundaryFunctional(geom, v.L).value(v.coeffs);
}

ConstraintState normalize_p(const Objective& obj, const BoundaryField& v) {
  obj.require_positive(v.coeffs);
  const double P = obj.p_mass(v.coeffs);
  ConstraintState s;
  s.v = v;
  s.v.coeffs /= std::pow(P, 1.0 / obj.exps().p);
  s.p_mass = obj.p_mass(s.v.coeffs);
  return s;
}

BoundaryField project_tangent(const Objective& obj, const ConstraintState& state, const BoundaryField& phi) {
  const Eigen::VectorXd s = obj.mass_direction(state.v.coeffs);
  BoundaryField r = phi;
  // <s, v> = p-mass, equal to 1 on the constraint set.
  r.coeffs -= (s.dot(phi.coeffs) / s.dot(state.v.coeffs)) * state.v.coeffs;
  return r;
}

BoundaryField grad_Qtilde(const Objective& obj, const ConstraintState& state) {
  const Eigen::VectorXd g = obj.gradient(state.v.coeffs);
  const Eigen::VectorXd s = obj.mass_direction(state.v.coeffs);
  BoundaryField r = state.v;
  r.coeffs = g - (g.dot(s) / s.squaredNorm()) * s;
  return r;
}

Eigen::MatrixXd orthonormal_complement(const Eigen::VectorXd& normal) {
  const Eigen::Index N = normal.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(normal)};
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
  return Q.rightCols(N - 1);
}

HessianData hessian_Qtilde(const Objective& obj, const ConstraintState& state) {
  HessianData h;
  h.tangent_basis = orthonormal_complement(obj.mass_direction(state.v.coeffs));
  const Eigen::MatrixXd full = obj.hessian(state.v.coeffs);
  h.matrix = 0.5 * h.tangent_basis.transpose() * full * h.tangent_basis;
  h.matrix = 0.5 * (h.matrix + h.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix);
  if (es.info() != Eigen::Success) throw NumericalError("Hessian eigendecomposition failed");
  h.eigenvalues = es.eigenvalues();
  h.eigenvectors = h.tangent_basis * es.eigenvectors();
  h.residual = 0.0;
  for (Eigen::Index j = 0; j < h.eigenvalues.size(); ++j) {
    const Eigen::VectorXd x = es.eigenvectors().col(j);
    h.residual = std::max(h.residual, (h.matrix * x - h.eigenvalues[j] * x).norm());
  }
  return h;
}

// ---------------------------------------------------------------------------

double residual_YPB(const ModelGeometry& geom, const InteriorField& u, double c) {
  if (!geom.is_flat()) {
    throw ConfigError("residual_YPB works on the flat ball; pull conformal fields back through w");
  }
  const Exponents& e = geom.exps();
  const int n = geom.dim();
  const BasisDescriptor basis = build_basis(n, u.harmonic.L);
  check_compatible(basis, u.harmonic);
  const int target = std::max(default_target_degree(n, u.harmonic.L),
                              static_cast<int>(std::ceil(2.0 * e.crit * u.harmonic.L)));
  const SphereTransform T(basis, quadrature_grid(n, u.harmonic.L, target));

  // Outward normal derivative: d_r(r^l Y) = l Y, d_r((1-r^2) r^{2k+l} Y) = -2 Y on r = 1.
  Eigen::VectorXd dn(u.harmonic.coeffs.size());
  for (Eigen::Index i = 0; i < dn.size(); ++i) {
    double acc = basis.degree(static_cast<std::size_t>(i)) * u.harmonic.coeffs[i];
    for (int k = 0; k < u.radial_order; ++k) acc -= 2.0 * u.interior[i * u.radial_order + k];
    dn[i] = acc;
  }
  const Eigen::VectorXd val = T.synthesize(u.harmonic.coeffs);
  const Eigen::VectorXd der = T.synthesize(dn);
  Eigen::VectorXd r(val.size());
  for (Eigen::Index q = 0; q < val.size(); ++q) {
    r[q] = e.c_n * der[q] + e.c_hat * val[q] - e.c_hat * c * signed_pow(val[q], e.crit);
  }
  const double boundary = std::sqrt(T.integrate(r.cwiseAbs2()));
  // L_g u = -c_n Delta u on the flat ball.
  return boundary + e.c_n * laplacian_l2_norm(u);
}

double residual_YPB_pointwise(const ModelGeometry& geom, const NodalEvaluator& u, double c, int grid_degree) {
  if (!geom.is_flat()) throw ConfigError("residual_YPB works on the flat ball");
  const Exponents& e = geom.exps();
  const QuadratureGrid grid = quadrature_grid(geom.dim(), 0, grid_degree);
  double acc = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    const auto [val, der] = u(grid.node(q));
    const double r = e.c_n * der + e.c_hat * val - e.c_hat * c * signed_pow(val, e.crit);
    acc += grid.weights[q] * r * r;
  }
  return std::sqrt(acc);
}

double eval_Qtilde_pointwise(const ModelGeometry& geom, const NodalEvaluator& u, int grid_degree) {
  if (!geom.is_flat()) throw ConfigError("pointwise evaluation works on the flat ball");
  const Exponents& e = geom.exps();
  const QuadratureGrid grid = quadrature_grid(geom.dim(), 0, grid_degree);
  // <Lambda v, v> = c_n \int_S v d_r(Ev) for the harmonic extension.
  double num = 0.0, P = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    const auto [val, der] = u(grid.node(q));
    num += grid.weights[q] * (e.c_n * val * der + e.c_hat * val * val);
    P += grid.weights[q] * std::pow(std::abs(val), e.p);
  }
  if (!(P > 0.0)) throw NumericalError("boundary p-mass vanishes");
  return num / std::pow(P, 2.0 / e.p);
}

}  // namespace escobar
