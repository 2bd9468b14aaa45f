#include "escobar/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "escobar/minimizers.hpp"
#include "escobar/parallel.hpp"

namespace escobar {

bool is_kernel_eigenvalue(double lambda, double lambda_max) {
  return std::abs(lambda) < 1e-7 * std::max(1.0, std::abs(lambda_max));
}

namespace {

void require_critical(const Objective& obj, const ConstraintState& state) {
  const double g = grad_Qtilde(obj, state).coeffs.norm();
  if (!(g < 1e-8)) {
    std::ostringstream os;
    os << "state is not a critical point: projected gradient norm " << g << " >= 1e-8";
    throw NumericalError(os.str());
  }
}

void split_spectrum(const HessianData& h, Eigen::MatrixXd& kernel, Eigen::MatrixXd& complement) {
  const double lmax = h.eigenvalues.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> ker, rest;
  for (Eigen::Index j = 0; j < h.eigenvalues.size(); ++j) {
    (is_kernel_eigenvalue(h.eigenvalues[j], lmax) ? ker : rest).push_back(j);
  }
  const Eigen::Index N = h.eigenvectors.rows();
  kernel.resize(N, static_cast<Eigen::Index>(ker.size()));
  complement.resize(N, static_cast<Eigen::Index>(rest.size()));
  for (std::size_t i = 0; i < ker.size(); ++i) kernel.col(static_cast<Eigen::Index>(i)) = h.eigenvectors.col(ker[i]);
  for (std::size_t i = 0; i < rest.size(); ++i) complement.col(static_cast<Eigen::Index>(i)) = h.eigenvectors.col(rest[i]);
}

}  // namespace

Eigen::MatrixXd kernel_basis(const Objective& obj, const ConstraintState& state) {
  require_critical(obj, state);
  Eigen::MatrixXd K, W;
  split_spectrum(hessian_Qtilde(obj, state), K, W);
  return K;
}

Reduction::Reduction(std::shared_ptr<const Objective> obj, ConstraintState critical, ReductionOptions opt)
    : obj_(std::move(obj)), state_(std::move(critical)), opt_(opt) {
  require_critical(*obj_, state_);
  hess_ = hessian_Qtilde(*obj_, state_);
  split_spectrum(hess_, kernel_, complement_);
  q0_ = obj_->value(state_.v.coeffs);
}

Eigen::VectorXd Reduction::point(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) const {
  Eigen::VectorXd h = state_.v.coeffs;
  if (alpha.size() > 0) h += kernel_ * alpha;
  if (beta.size() > 0) h += complement_ * beta;
  return h;
}

GraphSolution Reduction::solve_graph(const Eigen::VectorXd& alpha, const Eigen::VectorXd* beta0) const {
  if (alpha.size() != kernel_.cols()) throw ConfigError("kernel coordinate vector has the wrong size");
  if (alpha.norm() > opt_.a_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "|a| = " << alpha.norm() << " exceeds a_max = " << opt_.a_max;
    throw ConfigError(os.str());
  }
  const double p = obj_->exps().p;
  GraphSolution sol;
  sol.alpha = alpha;
  Eigen::VectorXd beta = beta0 ? *beta0 : Eigen::VectorXd::Zero(complement_.cols());

  auto residual_at = [&](const Eigen::VectorXd& be, Eigen::VectorXd* r) {
    const Eigen::VectorXd h = point(alpha, be);
    const double m = std::pow(obj_->p_mass(h), 1.0 / p);
    Eigen::VectorXd rr = complement_.transpose() * obj_->gradient(h);
    const double res = m * rr.norm();
    if (r) *r = std::move(rr);
    return res;
  };

  Eigen::VectorXd r;
  double res = residual_at(beta, &r);
  sol.history.push_back(res);
  for (int it = 0; it < opt_.max_newton && res > 1e-2 * opt_.residual_tol; ++it) {
    sol.iterations = it + 1;
    const Eigen::VectorXd h = point(alpha, beta);
    const Eigen::MatrixXd J = complement_.transpose() * obj_->hessian(h) * complement_;
    Eigen::VectorXd step = J.ldlt().solve(-r);
    if (!step.allFinite()) step = J.colPivHouseholderQr().solve(-r);
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      Eigen::VectorXd rn;
      const Eigen::VectorXd bn = beta + t * step;
      const double resn = residual_at(bn, &rn);
      if (resn < res) {
        beta = bn;
        r = std::move(rn);
        res = resn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    sol.history.push_back(res);
    if (!accepted) break;  // stagnated at roundoff
  }
  if (!(res < opt_.residual_tol)) {
    std::ostringstream os;
    os << "graph-map Newton iteration failed (|a| = " << alpha.norm() << "); residual history:";
    for (double v : sol.history) os << " " << v;
    throw NumericalError(os.str());
  }
  sol.beta = beta;
  sol.b = complement_ * beta;
  sol.point = point(alpha, beta);
  sol.q = obj_->value(sol.point);
  sol.residual = res;
  return sol;
}

GraphSolution project_to_variety(const Reduction& red, const Eigen::VectorXd& u) {
  return red.solve_graph(red.coordinates(u - red.critical().v.coeffs));
}

GradientRelation gradient_relation(const Reduction& red, const Eigen::VectorXd& alpha, const Eigen::VectorXd& phi,
                                   double step) {
  const Eigen::MatrixXd& K = red.kernel();
  const Eigen::MatrixXd& W = red.complement();
  const Eigen::VectorXd tangent = K * (K.transpose() * phi) + W * (W.transpose() * phi);
  const Eigen::VectorXd dir = K.transpose() * tangent;
  const GraphSolution g = red.solve_graph(alpha);
  const Objective& obj = red.objective();
  const double m = std::pow(obj.p_mass(g.point), 1.0 / obj.exps().p);

  auto q = [&](double t) {
    Eigen::VectorXd warm = g.beta;
    return red.solve_graph(alpha + t * dir, &warm).q;
  };
  const double dq = (8.0 * (q(step) - q(-step)) - (q(2 * step) - q(-2 * step))) / (12.0 * step);

  GradientRelation r;
  r.lhs = m * dq;
  r.rhs = obj.gradient(g.point / m).dot(tangent);
  r.abs_error = std::abs(r.lhs - r.rhs);
  r.rel_error = r.abs_error / std::max(std::abs(r.rhs), 1e-300);
  return r;
}

namespace {

double rayleigh_half(const Reduction& red, const Eigen::VectorXd& eta) {
  const HessianData& h = red.hessian();
  const Eigen::VectorXd t = h.tangent_basis.transpose() * eta;
  const BoundaryField f(red.critical().v.n, red.critical().v.L, eta);
  const double nrm = h_half_norm(f);
  return t.dot(h.matrix * t) / (nrm * nrm);
}

}  // namespace

CoercivitySample coercivity_sample(const Reduction& red, const Eigen::VectorXd& alpha,
                                   const Eigen::VectorXd& eta_beta) {
  const GraphSolution g = red.solve_graph(alpha);
  const Eigen::VectorXd u = red.point(alpha, g.beta + eta_beta);
  const GraphSolution pu = project_to_variety(red, u);
  const Objective& obj = red.objective();
  const int n = red.critical().v.n, L = red.critical().v.L;
  const Eigen::VectorXd eta = red.complement() * eta_beta;
  CoercivitySample s;
  s.eta_norm = h_half_norm(BoundaryField(n, L, eta));
  s.deficit = obj.value(u) - pu.q;
  s.distance = h_half_norm(BoundaryField(n, L, u - pu.point));
  s.ratio = s.deficit / (s.distance * s.distance);
  s.predicted = rayleigh_half(red, eta);
  return s;
}

CoercivityReport coercivity_probe(const Reduction& red, int count, double eta_max, double eta_small,
                                  double a_radius, std::uint64_t seed) {
  if (count < 1) throw ConfigError("coercivity probe needs at least one sample");
  const Eigen::MatrixXd& W = red.complement();
  const int n = red.critical().v.n, L = red.critical().v.L;
  const HessianData& h = red.hessian();
  CoercivityReport rep;

  // Complement eigenvector with the smallest lambda / ||w||^2_{H^{1/2}}.
  Eigen::VectorXd floor_dir = Eigen::VectorXd::Zero(W.cols());
  rep.spectral_floor = std::numeric_limits<double>::infinity();
  const double lmax = h.eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < h.eigenvalues.size(); ++j) {
    if (is_kernel_eigenvalue(h.eigenvalues[j], lmax)) continue;
    const double nrm = h_half_norm(BoundaryField(n, L, h.eigenvectors.col(j)));
    const double v = h.eigenvalues[j] / (nrm * nrm);
    if (v < rep.spectral_floor) {
      rep.spectral_floor = v;
      floor_dir = W.transpose() * h.eigenvectors.col(j);
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<Eigen::VectorXd> dirs, alphas;
  std::vector<double> sizes;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd d(W.cols());
    if (i == 0) {
      d = floor_dir;
    } else {
      for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = nd(rng);
    }
    d /= h_half_norm(BoundaryField(n, L, W * d));
    Eigen::VectorXd a(red.kernel_dim());
    for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = nd(rng);
    if (a.size() > 0 && a.norm() > 0) a *= a_radius / a.norm();
    const double r = i == 0 ? eta_max : eta_max * (1.0 - ud(rng));
    dirs.push_back(d);
    alphas.push_back(a);
    sizes.push_back(r);
  }
  rep.samples.resize(static_cast<std::size_t>(count));
  rep.small.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    rep.samples[i] = coercivity_sample(red, alphas[i], sizes[i] * dirs[i]);
    rep.small[i] = coercivity_sample(red, Eigen::VectorXd::Zero(red.kernel_dim()), eta_small * dirs[i]);
  });
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.c1_small = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    rep.c1 = std::min(rep.c1, rep.samples[i].ratio);
    rep.c1_small = std::min(rep.c1_small, rep.small[i].ratio);
    rep.max_direction_error = std::max(
        rep.max_direction_error, std::abs(rep.small[i].ratio - rep.small[i].predicted) / std::abs(rep.small[i].predicted));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Planted functional

std::string to_string(PlantedForm f) {
  switch (f) {
    case PlantedForm::Cubic: return "cubic";
    case PlantedForm::Quartic: return "quartic";
    case PlantedForm::NegativeQuartic: return "negative-quartic";
  }
  return "?";
}

PlantedForm planted_form_from_string(const std::string& s) {
  if (s == "cubic") return PlantedForm::Cubic;
  if (s == "quartic") return PlantedForm::Quartic;
  if (s == "negative-quartic") return PlantedForm::NegativeQuartic;
  throw ConfigError("unknown planted form '" + s + "' (expected cubic, quartic, negative-quartic)");
}

int planted_degree(PlantedForm f) { return f == PlantedForm::Cubic ? 3 : 4; }

PlantedFunctional::PlantedFunctional(std::shared_ptr<const Objective> base, Eigen::MatrixXd kernel,
                                     Eigen::VectorXd reference, PlantedSpec spec)
    : base_(std::move(base)), kernel_(std::move(kernel)), spec_(std::move(spec)) {
  if (kernel_.cols() == 0) throw ConfigError("planted functional needs a nontrivial kernel");
  if (spec_.direction.size() != kernel_.cols()) throw ConfigError("planted direction has the wrong dimension");
  spec_.direction.normalize();
  const double m = std::pow(base_->p_mass(reference), 1.0 / base_->exps().p);
  ref_coords_ = kernel_.transpose() * reference / m;
}

double PlantedFunctional::polynomial(const Eigen::VectorXd& k) const {
  const double d = spec_.direction.dot(k);
  switch (spec_.form) {
    case PlantedForm::Cubic: return d * d * d;
    case PlantedForm::Quartic: return d * d * d * d;
    case PlantedForm::NegativeQuartic: return -k.squaredNorm() * k.squaredNorm();
  }
  return 0.0;
}

Eigen::VectorXd PlantedFunctional::polynomial_gradient(const Eigen::VectorXd& k) const {
  const double d = spec_.direction.dot(k);
  switch (spec_.form) {
    case PlantedForm::Cubic: return 3.0 * d * d * spec_.direction;
    case PlantedForm::Quartic: return 4.0 * d * d * d * spec_.direction;
    case PlantedForm::NegativeQuartic: return -4.0 * k.squaredNorm() * k;
  }
  return Eigen::VectorXd::Zero(k.size());
}

Eigen::VectorXd PlantedFunctional::kernel_coordinates(const Eigen::VectorXd& x) const {
  const double m = std::pow(base_->p_mass(x), 1.0 / base_->exps().p);
  return kernel_.transpose() * x / m - ref_coords_;
}

double PlantedFunctional::value(const Eigen::VectorXd& x) const {
  return base_->value(x) + spec_.strength * polynomial(kernel_coordinates(x));
}

Eigen::VectorXd PlantedFunctional::planted_gradient(const Eigen::VectorXd& x) const {
  const double p = base_->exps().p;
  const double m = std::pow(base_->p_mass(x), 1.0 / p);
  const Eigen::VectorXd k = kernel_.transpose() * x / m - ref_coords_;
  const Eigen::VectorXd gP = polynomial_gradient(k);
  // grad ||x||_p = ||x||_p^{1-p} * coefficients of |x|^{p-2} x
  const Eigen::VectorXd gm = std::pow(m, 1.0 - p) * base_->mass_direction(x);
  const Eigen::VectorXd Kg = kernel_ * gP;
  return spec_.strength * (Kg / m - (Kg.dot(x) / (m * m)) * gm);
}

Eigen::VectorXd PlantedFunctional::gradient(const Eigen::VectorXd& x) const {
  return base_->gradient(x) + planted_gradient(x);
}

Eigen::MatrixXd PlantedFunctional::hessian(const Eigen::VectorXd& x) const {
  const Eigen::Index N = x.size();
  Eigen::MatrixXd H(N, N);
  const double h = 1e-5 * std::max(1.0, x.norm());
  for (Eigen::Index j = 0; j < N; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    H.col(j) = (planted_gradient(xp) - planted_gradient(xm)) / (2.0 * h);
  }
  return base_->hessian(x) + 0.5 * (H + H.transpose());
}

// ---------------------------------------------------------------------------
// Taylor probe

namespace {

std::vector<std::vector<int>> monomials(int vars, int max_degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(static_cast<std::size_t>(vars), 0);
  for (int deg = 0; deg <= max_degree; ++deg) {
    // All exponent vectors of total degree deg, lexicographically descending.
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == vars - 1) {
        e[static_cast<std::size_t>(i)] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[static_cast<std::size_t>(i)] = k;
        rec(i + 1, left - k);
      }
    };
    if (vars == 0) {
      if (deg == 0) out.push_back({});
      continue;
    }
    rec(0, deg);
  }
  return out;
}

double monomial_value(const std::vector<int>& e, const Eigen::VectorXd& z) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < e[i]; ++k) v *= z[static_cast<Eigen::Index>(i)];
  return v;
}

int degree_of(const std::vector<int>& e) {
  int d = 0;
  for (int k : e) d += k;
  return d;
}

std::vector<Eigen::VectorXd> unit_directions(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = nd(rng);
    dirs.push_back(v.normalized());
  }
  return dirs;
}

std::vector<double> radius_ladder(const TaylorOptions& opt) {
  std::vector<double> r;
  for (int k = 0; k < opt.radii; ++k) {
    const double frac = opt.radii == 1 ? 1.0 : 1.0 - 0.75 * k / (opt.radii - 1.0);
    r.push_back(opt.r_max * frac);
  }
  return r;
}

void sample_ray(const Reduction& red, const Eigen::VectorXd& dir, int ray, const std::vector<double>& radii,
                std::vector<ReducedSample>& out) {
  // Smallest radius first so each solve warm-starts from the previous one.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(red.complement().cols());
  std::vector<ReducedSample> local;
  std::vector<double> rs(radii);
  std::sort(rs.begin(), rs.end());
  for (double r : rs) {
    const Eigen::VectorXd alpha = r * dir;
    const GraphSolution g = red.solve_graph(alpha, &beta);
    beta = g.beta;
    ReducedSample s;
    s.alpha = alpha;
    s.ray = ray;
    s.radius = r;
    s.q = g.q;
    s.residual = g.residual;
    BoundaryField b(red.critical().v.n, red.critical().v.L, g.b);
    s.f_norm = h_half_norm(b);
    local.push_back(s);
  }
  out = std::move(local);
}

}  // namespace

double evaluate_terms(const std::vector<Monomial>& terms, const Eigen::VectorXd& alpha) {
  double acc = 0.0;
  for (const auto& m : terms) acc += m.coefficient * monomial_value(m.exponents, alpha);
  return acc;
}

std::vector<ReducedSample> sample_reduced(const Reduction& red, const TaylorOptions& opt) {
  const int l0 = red.kernel_dim();
  ReducedSample origin;
  origin.alpha = Eigen::VectorXd::Zero(l0);
  const GraphSolution g0 = red.solve_graph(origin.alpha);
  origin.q = g0.q;
  origin.residual = g0.residual;
  if (l0 == 0) return {origin};

  const int nmono = static_cast<int>(monomials(l0, opt.j_max).size());
  const int rays = opt.rays > 0 ? opt.rays : std::max(12, (3 * nmono + opt.radii - 1) / opt.radii);
  const auto dirs = unit_directions(l0, rays, opt.seed);
  const auto radii = radius_ladder(opt);
  std::vector<std::vector<ReducedSample>> per_ray(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t i) { sample_ray(red, dirs[i], static_cast<int>(i), radii, per_ray[i]); });
  std::vector<ReducedSample> all{origin};
  for (auto& v : per_ray) all.insert(all.end(), v.begin(), v.end());
  return all;
}

TaylorResult taylor_probe(const std::vector<ReducedSample>& samples, int l0, double q0, const TaylorOptions& opt,
                          const std::function<double(const Eigen::VectorXd&)>& lp_norm,
                          const Eigen::MatrixXd& kernel) {
  TaylorResult res;
  res.degree_norms.assign(static_cast<std::size_t>(opt.j_max + 1), 0.0);
  res.terms.assign(static_cast<std::size_t>(opt.j_max + 1), {});
  if (l0 == 0) {
    res.integrable = false;
    return res;
  }
  const auto monos = monomials(l0, opt.j_max);
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(monos.size());
  if (rows < cols) {
    std::ostringstream os;
    os << "taylor probe: " << rows << " samples cannot identify " << cols << " coefficients";
    throw NumericalError(os.str());
  }
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd z = samples[static_cast<std::size_t>(i)].alpha / opt.r_max;
    for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = monomial_value(monos[static_cast<std::size_t>(j)], z);
    y[i] = samples[static_cast<std::size_t>(i)].q - q0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  res.condition_number = sv[0] / sv[sv.size() - 1];
  if (!(res.condition_number < 1e12)) {
    std::ostringstream os;
    os << "taylor probe: ill-conditioned fit, condition number " << res.condition_number;
    throw NumericalError(os.str());
  }
  Eigen::VectorXd filt(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k) filt[k] = sv[k] / (sv[k] * sv[k] + opt.ridge);
  const Eigen::VectorXd c = svd.matrixV() * filt.asDiagonal() * (svd.matrixU().transpose() * y);
  res.fit_residual = (A * c - y).norm() / std::sqrt(static_cast<double>(rows));

  // Homogeneous parts in scaled coordinates, then unscaled coefficients.
  std::vector<std::vector<Monomial>> scaled(static_cast<std::size_t>(opt.j_max + 1));
  for (std::size_t j = 0; j < monos.size(); ++j) {
    const int d = degree_of(monos[j]);
    scaled[static_cast<std::size_t>(d)].push_back({monos[j], c[static_cast<Eigen::Index>(j)]});
    res.terms[static_cast<std::size_t>(d)].push_back({monos[j], c[static_cast<Eigen::Index>(j)] / std::pow(opt.r_max, d)});
  }
  const auto probe_dirs = unit_directions(l0, 4000, opt.seed + 1);
  for (int d = 0; d <= opt.j_max; ++d) {
    double mx = 0.0;
    for (const auto& th : probe_dirs) mx = std::max(mx, std::abs(evaluate_terms(scaled[static_cast<std::size_t>(d)], th)));
    res.degree_norms[static_cast<std::size_t>(d)] = mx;
  }
  for (int d = 1; d <= opt.j_max; ++d) {
    if (res.degree_norms[static_cast<std::size_t>(d)] > opt.noise_floor) {
      res.order = d;
      break;
    }
  }
  res.integrable = res.order == 0;
  if (res.integrable) return res;

  // AS_p: maximize q_p over the unit L^p sphere of K.
  const auto& qp = res.terms[static_cast<std::size_t>(res.order)];
  const int p = res.order;
  auto on_sphere = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd u = th.normalized();
    return evaluate_terms(qp, u) / std::pow(lp_norm(u), p);
  };
  std::vector<std::pair<double, Eigen::VectorXd>> cand;
  double scale = 0.0;
  for (const auto& th : probe_dirs) {
    const double v = on_sphere(th);
    scale = std::max(scale, std::abs(v));
    cand.emplace_back(v, th);
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  cand.resize(std::min<std::size_t>(cand.size(), 24));
  std::vector<AspMaximizer> found;
  for (const auto& [v0, th0] : cand) {
    std::vector<double> x(th0.data(), th0.data() + th0.size());
    auto f = [&](const std::vector<double>& w) {
      Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      return -on_sphere(e) / std::max(scale, 1e-300);
    };
    SimplexResult r = nelder_mead(f, x, 0.05, 1e-15, 4000);
    r = nelder_mead(f, r.x, 0.005, 1e-15, 4000);
    Eigen::VectorXd th = Eigen::Map<const Eigen::VectorXd>(r.x.data(), static_cast<Eigen::Index>(r.x.size())).normalized();
    const double val = on_sphere(th);
    bool dup = false;
    for (auto& m : found) {
      if ((m.coords - th).norm() < 1e-3) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      AspMaximizer m;
      m.coords = th;
      m.value = val;
      m.field = kernel * th / lp_norm(th);
      found.push_back(m);
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
  res.asp_max = found.empty() ? 0.0 : found.front().value;
  for (const auto& m : found) {
    if (m.value >= res.asp_max - 1e-4 * std::abs(res.asp_max)) res.maximizers.push_back(m);
  }
  res.asp = res.asp_max > 1e-6 * scale && res.asp_max > 0.0;
  return res;
}

LojasiewiczResult lojasiewicz_estimate(const std::vector<ReducedSample>& samples, double q0, int l0,
                                       const TaylorResult& taylor, double noise_floor) {
  LojasiewiczResult out;
  if (l0 == 0) {
    out.note = "nondegenerate critical point (trivial kernel)";
    return out;
  }
  if (taylor.integrable) {
    out.note = "integrable: reduced function constant to the noise floor";
    return out;
  }
  // Per-ray log-log slope of the deficit against |a|; rays whose deficit at the
  // outer radius is far below the largest one are dominated by higher-order
  // terms and are skipped.
  std::map<int, std::vector<std::pair<double, double>>> rays;
  for (const auto& s : samples) {
    if (s.ray < 0) continue;
    rays[s.ray].emplace_back(s.radius, s.q - q0);
  }
  double outer_max = 0.0;
  std::map<int, double> outer;
  for (auto& [id, pts] : rays) {
    std::sort(pts.begin(), pts.end());
    outer[id] = pts.back().second;
    outer_max = std::max(outer_max, pts.back().second);
  }
  out.alpha_hat = 0.0;
  for (const auto& [id, pts] : rays) {
    if (!(outer[id] > 0.5 * outer_max) || !(outer_max > noise_floor)) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& [r, d] : pts) {
      if (!(d > noise_floor)) continue;
      const double lx = std::log(r), ly = std::log(d);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    if (m < 2) continue;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.alpha_hat = std::max(out.alpha_hat, slope);
    ++out.rays_used;
  }
  if (out.rays_used == 0) {
    out.alpha_hat = 2.0;
    out.note = "degenerate fit: no ray with deficit above the noise floor";
    return out;
  }
  out.gamma = std::max(0.0, out.alpha_hat - 2.0);
  return out;
}

std::function<double(const Eigen::VectorXd&)> kernel_lp_norm(const Reduction& red) {
  return [&red](const Eigen::VectorXd& alpha) {
    return std::pow(red.objective().p_mass(red.field(alpha)), 1.0 / red.objective().exps().p);
  };
}

ReductionResult run_reduction(const Reduction& red, const TaylorOptions& opt) {
  ReductionResult r;
  r.n = red.critical().v.n;
  r.L = red.critical().v.L;
  r.l0 = red.kernel_dim();
  r.critical_value = red.critical_value();
  for (Eigen::Index j = 0; j < red.kernel().cols(); ++j) {
    r.kernel.emplace_back(r.n, r.L, red.kernel().col(j));
  }
  r.samples = sample_reduced(red, opt);
  r.taylor = taylor_probe(r.samples, r.l0, r.critical_value, opt, kernel_lp_norm(red), red.kernel());
  std::vector<ReducedSample> loj = r.samples;
  if (!r.taylor.maximizers.empty()) {
    // Rays along the AS_p maximizers carry the leading growth of the deficit.
    const auto radii = radius_ladder(opt);
    int next_ray = 0;
    for (const auto& s : r.samples) next_ray = std::max(next_ray, s.ray + 1);
    for (const auto& m : r.taylor.maximizers) {
      std::vector<ReducedSample> extra;
      sample_ray(red, m.coords, next_ray++, radii, extra);
      loj.insert(loj.end(), extra.begin(), extra.end());
    }
  }
  r.lojasiewicz = lojasiewicz_estimate(loj, r.critical_value, r.l0, r.taylor);
  return r;
}

}  // namespace escobar
