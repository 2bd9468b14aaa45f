#include "escobar/minimizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace escobar {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

double half_order(int n) { return (n - 2) / 2.0; }

double sphere_area(int n) { return n == 3 ? 4.0 * M_PI : 2.0 * M_PI * M_PI; }

}  // namespace

// ---------------------------------------------------------------------------
// BubbleParams

BubbleParams BubbleParams::from_pole(double c, std::span<const double> y0) {
  const double r2 = norm2(y0);
  if (!(r2 > 1.0)) {
    throw ConfigError("bubble pole must lie outside the closed unit ball (|y0| > 1)");
  }
  if (!(c > 0.0)) throw ConfigError("bubble coefficient must be positive");
  BubbleParams b;
  const int n = static_cast<int>(y0.size());
  b.amplitude = c * std::pow(std::sqrt(r2), 2.0 - n);
  b.zeta.resize(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) b.zeta[i] = y0[i] / r2;
  return b;
}

BubbleParams BubbleParams::constant(int n, double amplitude) {
  BubbleParams b;
  b.amplitude = amplitude;
  b.zeta.assign(static_cast<std::size_t>(n), 0.0);
  return b;
}

double BubbleParams::rho() const { return std::sqrt(norm2(zeta)); }

std::vector<double> BubbleParams::pole() const {
  const double r2 = norm2(zeta);
  if (r2 == 0.0) return {};
  std::vector<double> y0(zeta);
  for (double& c : y0) c /= r2;
  return y0;
}

double BubbleParams::pole_coefficient() const {
  const double r = rho();
  if (r == 0.0) return amplitude;
  return amplitude * std::pow(1.0 / r, dim() - 2.0);
}

void BubbleParams::validate() const {
  if (dim() != 3 && dim() != 4) throw ConfigError("bubble dimension must be 3 or 4");
  if (!(amplitude > 0.0)) throw ConfigError("bubble amplitude must be positive");
  if (!(rho() < 1.0)) throw ConfigError("bubble pole must lie outside the closed unit ball (|y0| > 1)");
}

// ---------------------------------------------------------------------------
// Bubble

Bubble::Bubble(BubbleParams params) : params_(std::move(params)) {
  params_.validate();
  exps_ = Exponents::of(params_.dim());
}

double Bubble::value(std::span<const double> y) const {
  double dot = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dot += y[i] * params_.zeta[i];
    r2 += y[i] * y[i];
  }
  const double rho2 = norm2(params_.zeta);
  const double f = 1.0 - 2.0 * dot + rho2 * r2;
  return params_.amplitude * std::pow(f, -half_order(dim()));
}

std::pair<double, double> Bubble::boundary(std::span<const double> y) const {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * params_.zeta[i];
  const double rho2 = norm2(params_.zeta);
  const double f = 1.0 - 2.0 * dot + rho2;
  const double lam = half_order(dim());
  const double val = params_.amplitude * std::pow(f, -lam);
  const double der = -lam * params_.amplitude * std::pow(f, -lam - 1.0) * (2.0 * rho2 - 2.0 * dot);
  return {val, der};
}

NodalEvaluator Bubble::nodal() const {
  return [b = *this](std::span<const double> y) { return b.boundary(y); };
}

BoundaryField Bubble::trace(int L) const { return trace(build_basis(dim(), L)); }

BoundaryField Bubble::trace(const BasisDescriptor& basis) const {
  // Addition theorem: |y0|^{n-2}|y - y0|^{2-n} = sum_l sigma lam/(lam+l) sum_i Y_i(zeta) Y_i(y) (solid).
  const auto vals = basis.evaluate(params_.zeta);
  const double lam = half_order(dim());
  const double sigma = sphere_area(dim());
  BoundaryField f = BoundaryField::zero(basis);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    f.coeffs[static_cast<Eigen::Index>(i)] = params_.amplitude * sigma * lam / (lam + basis.degree(i)) * vals[i];
  }
  return f;
}

double Bubble::degree_mass(int l) const {
  const double lam = half_order(dim());
  const double sigma = sphere_area(dim());
  const double a = params_.amplitude * sigma * lam / (lam + l);
  const double rho2 = norm2(params_.zeta);
  const double decay = l == 0 ? 1.0 : std::pow(rho2, l);
  return a * a * decay * static_cast<double>(BasisDescriptor::multiplicity(dim(), l)) / sigma;
}

double Bubble::ypb_constant() const {
  const double rho2 = norm2(params_.zeta);
  return (1.0 - rho2) * std::pow(params_.amplitude, -2.0 / (dim() - 2.0));
}

int Bubble::resolving_degree() const {
  const double r = params_.rho();
  if (r < 1e-3) return 24;
  const double d = std::log(1e-16) / std::log(r) + 24.0;
  return static_cast<int>(std::clamp(d, 24.0, 360.0));
}

double Bubble::normalizing_factor(int grid_degree) const {
  const QuadratureGrid grid = quadrature_grid(dim(), 0, grid_degree > 0 ? grid_degree : resolving_degree());
  double P = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) P += grid.weights[q] * std::pow(boundary(grid.node(q)).first, exps_.p);
  return std::pow(P, -1.0 / exps_.p);
}

BallFunction as_ball_function(const Bubble& b) {
  return [b](std::span<const double> y, std::span<double> g) {
    const auto& z = b.params().zeta;
    const double rho2 = norm2(z);
    double dot = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      dot += y[i] * z[i];
      r2 += y[i] * y[i];
    }
    const double f = 1.0 - 2.0 * dot + rho2 * r2;
    const double lam = half_order(b.dim());
    const double u = b.params().amplitude * std::pow(f, -lam);
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = -lam * u / f * (2.0 * rho2 * y[i] - 2.0 * z[i]);
    return u;
  };
}

double bubble_Qtilde(const Bubble& b) {
  return eval_Qtilde_pointwise(flat_ball(b.dim()), b.nodal(), b.resolving_degree());
}

double bubble_gradient_norm(const Bubble& b) {
  const Exponents e = Exponents::of(b.dim());
  const int deg = b.resolving_degree();
  const double s = b.normalizing_factor(deg);
  const double Q = bubble_Qtilde(b);
  const QuadratureGrid grid = quadrature_grid(b.dim(), 0, deg);
  double acc = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) {
    auto [val, der] = b.boundary(grid.node(q));
    val *= s;
    der *= s;
    const double g = 2.0 * (e.c_n * der + e.c_hat * val - Q * std::pow(val, e.crit));
    acc += grid.weights[q] * g * g;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Norm tags

std::string to_string(NormTag t) {
  switch (t) {
    case NormTag::H1: return "H1";
    case NormTag::Hhalf: return "Hhalf";
    case NormTag::LpConformal: return "Lp-conformal";
    case NormTag::EnergyConformal: return "energy-conformal";
  }
  return "?";
}

NormTag norm_tag_from_string(const std::string& s) {
  if (s == "H1") return NormTag::H1;
  if (s == "Hhalf") return NormTag::Hhalf;
  if (s == "Lp-conformal" || s == "Lp") return NormTag::LpConformal;
  if (s == "energy-conformal" || s == "energy") return NormTag::EnergyConformal;
  throw ConfigError("unknown norm tag '" + s + "' (expected H1, Hhalf, Lp-conformal, energy-conformal)");
}

// ---------------------------------------------------------------------------
// Nelder-Mead

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double tol, int max_iter) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step;
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(pts[i]);

  SimplexResult res;
  std::vector<std::size_t> order(d + 1);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

    double diam = 0.0;
    for (std::size_t i = 0; i <= d; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += std::pow(pts[i][k] - pts[best][k], 2);
      diam = std::max(diam, std::sqrt(s));
    }
    if (fv[worst] - fv[best] <= tol * std::abs(fv[best]) + 1e-24 || diam < 1e-13) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i <= d; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t k = 0; k < d; ++k) x[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return x;
    };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[best]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      fv[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  res.value = *it;
  res.x = pts[static_cast<std::size_t>(it - fv.begin())];
  return res;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

std::vector<double> chart(const std::vector<double>& w) {
  const double s = 1.0 / std::sqrt(1.0 + norm2(w));
  std::vector<double> z(w);
  for (double& c : z) c *= s;
  return z;
}

std::vector<std::vector<double>> start_points(int n, const DistanceOptions& opt) {
  std::vector<std::vector<double>> starts;
  for (double rho : {0.3, 0.6}) {
    const double t = rho / std::sqrt(1.0 - rho * rho);
    for (int d = 0; d < n; ++d)
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        w[static_cast<std::size_t>(d)] = sgn * t;
        starts.push_back(w);
      }
  }
  starts.emplace_back(static_cast<std::size_t>(n), 0.0);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.05, 0.8);
  while (static_cast<int>(starts.size()) < opt.multistarts) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& c : w) c = nd(rng);
    const double s = std::sqrt(norm2(w));
    const double rho = ud(rng);
    for (double& c : w) c *= rho / std::sqrt(1.0 - rho * rho) / s;
    starts.push_back(w);
  }
  starts.resize(static_cast<std::size_t>(opt.multistarts));
  return starts;
}

// Objective per chart point: returns (relative distance, optimal amplitude).
using ChartObjective = std::function<std::pair<double, double>(const std::vector<double>& zeta)>;

DistanceReport multistart(int n, NormTag tag, const ChartObjective& obj, const DistanceOptions& opt) {
  DistanceReport rep;
  rep.tag = tag;
  rep.multistart_count = opt.multistarts;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_w;
  bool best_conv = false;
  auto f = [&](const std::vector<double>& w) { return obj(chart(w)).first; };
  for (const auto& w0 : start_points(n, opt)) {
    SimplexResult r = nelder_mead(f, w0, 0.1, opt.tolerance, opt.max_iterations);
    // One restart from the converged point guards against simplex collapse.
    SimplexResult r2 = nelder_mead(f, r.x, 0.01, opt.tolerance, opt.max_iterations);
    rep.iterations += r.iterations + r2.iterations;
    if (r2.value < best) {
      best = r2.value;
      best_w = r2.x;
      best_conv = r2.converged;
    }
  }
  const auto zeta = chart(best_w);
  const auto [val, amp] = obj(zeta);
  rep.value = val;
  rep.argmin.zeta = zeta;
  rep.argmin.amplitude = amp;
  rep.converged = best_conv && std::isfinite(val);
  if (!rep.converged) {
    std::ostringstream os;
    os << "pole search did not meet tolerance " << opt.tolerance << " within " << opt.max_iterations
       << " iterations";
    rep.diagnostics = os.str();
  }
  return rep;
}

double tail_sum(const Bubble& b, int L, const std::function<double(int)>& weight) {
  double acc = 0.0;
  for (int l = L + 1; l < 20000; ++l) {
    const double term = weight(l) * b.degree_mass(l);
    acc += term;
    if (term <= 1e-19 * std::max(acc, 1e-300) || term < 1e-300) break;
  }
  return acc;
}

// Quadratic-norm distance with exact tails beyond the truncation degree.
DistanceReport quadratic_distance(const InteriorField& u, NormTag tag,
                                  const std::function<double(const InteriorField&, const InteriorField&)>& inner,
                                  const std::function<double(int)>& weight, const DistanceOptions& opt) {
  const int n = u.harmonic.n, L = u.harmonic.L;
  const double unorm2 = inner(u, u);
  const BasisDescriptor basis = build_basis(n, L);
  if (!(unorm2 > 0.0)) throw ConfigError("distance_to_family: input field is zero");
  ChartObjective obj = [&](const std::vector<double>& zeta) -> std::pair<double, double> {
    BubbleParams bp;
    bp.amplitude = 1.0;
    bp.zeta = zeta;
    const Bubble b(bp);
    InteriorField bf = InteriorField::from_boundary(b.trace(basis), u.radial_order);
    const double tail = tail_sum(b, L, weight);
    const double c = std::max(0.0, inner(u, bf) / (inner(bf, bf) + tail));
    const InteriorField r = u - bf.scaled(c);
    const double res2 = inner(r, r) + c * c * tail;
    return {std::sqrt(std::max(0.0, res2) / unorm2), c};
  };
  return multistart(n, tag, obj, opt);
}

double hhalf_weight(int l) { return 1.0 + l; }

}  // namespace

DistanceReport distance_to_family(const BoundaryField& v, NormTag tag, const DistanceOptions& opt) {
  const int n = v.n;
  Exponents::of(n);
  if (tag == NormTag::Hhalf) {
    auto inner = [](const InteriorField& a, const InteriorField& b) { return h_half_inner(a.harmonic, b.harmonic); };
    return quadratic_distance(InteriorField::from_boundary(v), tag, inner, hhalf_weight, opt);
  }
  if (tag == NormTag::H1 || tag == NormTag::EnergyConformal) {
    return distance_to_family(InteriorField::from_boundary(v), tag, opt);
  }
  // Boundary L^p.
  const Exponents e = Exponents::of(n);
  const BasisDescriptor basis = build_basis(n, v.L);
  const QuadratureGrid grid = quadrature_grid(n, v.L, std::max(default_target_degree(n, v.L), 4 * v.L + 24));
  const Eigen::VectorXd vs = synthesize(v, grid, basis);
  double vnorm = 0.0;
  for (std::size_t q = 0; q < grid.count; ++q) vnorm += grid.weights[q] * std::pow(std::abs(vs[static_cast<Eigen::Index>(q)]), e.p);
  if (!(vnorm > 0.0)) throw ConfigError("distance_to_family: input field is zero");
  ChartObjective obj = [&](const std::vector<double>& zeta) -> std::pair<double, double> {
    BubbleParams bp;
    bp.zeta = zeta;
    const Bubble b(bp);
    std::vector<double> bs(grid.count);
    double vb = 0.0, bb = 0.0;
    for (std::size_t q = 0; q < grid.count; ++q) {
      bs[q] = b.boundary(grid.node(q)).first;
      vb += grid.weights[q] * vs[static_cast<Eigen::Index>(q)] * bs[q];
      bb += grid.weights[q] * bs[q] * bs[q];
    }
    auto mass = [&](double c, double* d1, double* d2) {
      double acc = 0.0, g1 = 0.0, g2 = 0.0;
      for (std::size_t q = 0; q < grid.count; ++q) {
        const double r = vs[static_cast<Eigen::Index>(q)] - c * bs[q];
        const double ar = std::abs(r);
        const double rp2 = e.p == 4.0 ? r * r : ar;  // |r|^{p-2}, p in {3, 4}
        acc += grid.weights[q] * rp2 * r * r;
        g1 -= grid.weights[q] * e.p * rp2 * r * bs[q];
        g2 += grid.weights[q] * e.p * (e.p - 1.0) * rp2 * bs[q] * bs[q];
      }
      if (d1) *d1 = g1;
      if (d2) *d2 = g2;
      return acc;
    };
    // The p-mass is convex in c: safeguarded Newton from the L^2 fit.
    double c = std::max(vb / bb, 0.0);
    double m = mass(c, nullptr, nullptr);
    for (int it = 0; it < 60; ++it) {
      double d1 = 0.0, d2 = 0.0;
      mass(c, &d1, &d2);
      if (!(d2 > 0.0)) break;
      double step = -d1 / d2;
      double cn = std::max(0.0, c + step), mn = mass(cn, nullptr, nullptr);
      while (mn > m && std::abs(cn - c) > 1e-16 * std::max(1.0, c)) {
        step *= 0.5;
        cn = std::max(0.0, c + step);
        mn = mass(cn, nullptr, nullptr);
      }
      if (mn > m) break;
      const bool done = std::abs(cn - c) <= 1e-14 * std::max(1e-300, c);
      c = cn;
      m = mn;
      if (done) break;
    }
    return {std::pow(m / vnorm, 1.0 / e.p), c};
  };
  return multistart(n, tag, obj, opt);
}

DistanceReport distance_to_family(const InteriorField& u, NormTag tag, const DistanceOptions& opt) {
  const int n = u.harmonic.n;
  const Exponents e = Exponents::of(n);
  switch (tag) {
    case NormTag::H1: {
      auto weight = [n](int l) { return l + 1.0 / (2.0 * l + n); };
      return quadratic_distance(u, tag, [](const InteriorField& a, const InteriorField& b) { return h1_inner(a, b); },
                                weight, opt);
    }
    case NormTag::EnergyConformal: {
      auto inner = [e](const InteriorField& a, const InteriorField& b) {
        return e.c_n * dirichlet_inner(a, b) + e.c_hat * a.harmonic.coeffs.dot(b.harmonic.coeffs);
      };
      auto weight = [e](int l) { return e.c_n * l + e.c_hat; };
      return quadratic_distance(u, tag, inner, weight, opt);
    }
    case NormTag::Hhalf:
    case NormTag::LpConformal:
      return distance_to_family(u.harmonic, tag, opt);
  }
  throw ConfigError("unknown norm tag");
}

double conformal_distance(const ModelGeometry& geom, const InteriorField& u1, const InteriorField& u2,
                          ConformalDistance variant, EvaluationRoute route) {
  const InteriorField d = u1 - u2;
  if (variant == ConformalDistance::Energy) {
    const double E = route == EvaluationRoute::Pullback ? energy_form(geom, d) : energy_form_intrinsic(geom, d);
    return std::sqrt(std::max(0.0, E));
  }
  const int n = geom.dim();
  const double q = 2.0 * n / (n - 2.0);
  const int deg = geom.factor_degree() + d.harmonic.L + 2 * d.radial_order + 2;
  const int total = static_cast<int>(std::ceil(q * deg));
  const BallQuadrature ball = ball_quadrature(n, total / 2 + 2, total);
  const BasisDescriptor basis = build_basis(n, d.harmonic.L);
  double acc = 0.0;
  for (std::size_t i = 0; i < ball.count; ++i) {
    const double w = geom.factor<double>(ball.point(i));
    const double dv = d.evaluate<double>(basis, ball.point(i));
    if (route == EvaluationRoute::Pullback) {
      acc += ball.weights[i] * std::pow(std::abs(w * dv), q);
    } else {
      // dvol_g = w^{2n/(n-2)} dy
      acc += ball.weights[i] * std::pow(std::abs(dv), q) * std::pow(w, q);
    }
  }
  return std::pow(acc, 1.0 / q);
}

}  // namespace escobar
