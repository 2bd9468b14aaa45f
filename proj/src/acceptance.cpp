#include "escobar/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "escobar/commands.hpp"
#include "escobar/harness.hpp"
#include "escobar/io.hpp"

namespace escobar {

namespace {

constexpr int kL = 8;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Collects sub-checks; the criterion passes when all of them do.
struct Checks {
  bool ok = true;
  std::vector<std::string> lines;
  void add(bool pass, const std::string& what) {
    ok = ok && pass;
    lines.push_back(std::string(pass ? "ok   " : "FAIL ") + what);
  }
  std::string text() const {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<BoundaryFunctional> flat_objective(int n, int L) {
  return std::make_shared<BoundaryFunctional>(flat_ball(n), L);
}

ConstraintState normalized_constant(const Objective& obj) {
  BoundaryField c = BoundaryField::zero(obj.basis());
  c.coeffs[0] = 1.0;
  return normalize_p(obj, c);
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index size, double scale) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(size);
  for (auto& v : x) v = scale * nd(rng);
  return x;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// 1. DtN matrix on the flat ball is diagonal with entries c_n * l.
void dtn_exactness(Checks& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const BasisDescriptor basis = build_basis(3, 16);
  const SpectralOperator op = dtn_matrix(flat_ball(3), basis);
  double off = 0.0, diag = 0.0;
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      if (i == j)
        diag = std::max(diag, std::abs(op.matrix(i, i) - 8.0 * basis.degree(static_cast<std::size_t>(i))));
      else
        off = std::max(off, std::abs(op.matrix(i, j)));
    }
  const double t = seconds_since(t0);
  c.add(off < 1e-10, fmt("max off-diagonal %.3e < 1e-10", off));
  c.add(diag < 1e-10, fmt("max diagonal error against 8l %.3e < 1e-10", diag));
  c.add(t < 5.0, fmt("runtime %.2f s < 5 s", t));
}

// 2. The constant attains 8 sqrt(pi).
void sharp_constant(Checks& c) {
  const double target = 2.0 * 2.0 * std::pow(4.0 * M_PI, 0.5);
  const ModelGeometry g = flat_ball(3);
  const auto obj = flat_objective(3, kL);
  const ConstraintState s = normalized_constant(*obj);
  const double q_ball = eval_Q(g, InteriorField::from_boundary(s.v));
  const double q_quad = eval_Q_intrinsic(g, InteriorField::from_boundary(s.v));
  const double q_bdry = eval_Qtilde(g, s.v);
  const double a = s.v.coeffs[0] / std::sqrt(4.0 * M_PI);
  const NodalEvaluator constant = [a](std::span<const double>) { return std::pair<double, double>(a, 0.0); };
  const double q_point = eval_Qtilde_pointwise(g, constant, 8);
  c.add(std::abs(q_ball - target) < 1e-8, fmt("Q(E const) = %.12f", q_ball));
  c.add(std::abs(q_quad - target) < 1e-8, fmt("Q(E const) by ball quadrature = %.12f", q_quad));
  c.add(std::abs(q_bdry - target) < 1e-8, fmt("Qtilde(const) = %.12f", q_bdry));
  c.add(std::abs(q_point - target) < 1e-8, fmt("pointwise quadrature oracle = %.12f (target %.12f)", q_point, target));
}

// 3. Qtilde(v) = Q(Ev), and the two minimizations reach the same value.
void boundary_equals_ball(Checks& c) {
  const ModelGeometry g = flat_ball(3);
  const auto obj = flat_objective(3, kL);
  double worst = 0.0, worst_quad = 0.0;
  for (int i = 0; i < 50; ++i) {
    const BoundaryField v = random_positive_field(*obj, 500 + static_cast<std::uint64_t>(i));
    const double qb = eval_Qtilde(g, v);
    const InteriorField ev = InteriorField::from_boundary(v);
    worst = std::max(worst, std::abs(qb - eval_Q(g, ev)));
    worst_quad = std::max(worst_quad, std::abs(qb - eval_Q_intrinsic(g, ev)));
  }
  c.add(worst < 1e-10, fmt("50 random v: max |Qtilde(v) - Q(Ev)| %.3e < 1e-10", worst));
  c.add(worst_quad < 1e-10, fmt("50 random v, ball quadrature: max gap %.3e < 1e-10", worst_quad));
  for (std::uint64_t s : {3u, 11u}) {
    const BoundaryField v = random_positive_field(*obj, s);
    std::mt19937_64 rng(s);
    const InteriorField u(v, 2, gaussian(rng, static_cast<Eigen::Index>(obj->basis().size()) * 2, 0.1));
    const FlowTrajectory tb = minimize_Q(*obj, v);
    const CompositeMinimum cm = minimize_composite(g, *obj, u);
    const double gap = std::max(std::abs(cm.value - tb.final_q), std::abs(cm.value_quadrature - tb.final_q));
    c.add(gap < 1e-6, fmt("seed %llu: boundary min %.10f, composite min %.10f, gap %.2e < 1e-6",
                          static_cast<unsigned long long>(s), tb.final_q, cm.value, gap));
  }
}

// 4. Second variation at the constant: 8(l - 1) with multiplicity 2l + 1.
void second_variation(Checks& c) {
  const auto obj = flat_objective(3, kL);
  const ConstraintState s = normalized_constant(*obj);
  const HessianData h = hessian_Qtilde(*obj, s);
  std::vector<double> expected;
  for (int l = 1; l <= kL; ++l)
    for (int m = 0; m < 2 * l + 1; ++m) expected.push_back(8.0 * (l - 1));
  double err = expected.size() == static_cast<std::size_t>(h.eigenvalues.size()) ? 0.0 : INFINITY;
  for (std::size_t i = 0; std::isfinite(err) && i < expected.size(); ++i)
    err = std::max(err, std::abs(h.eigenvalues[static_cast<Eigen::Index>(i)] - expected[i]));
  c.add(err < 1e-8, fmt("eigenvalues against 8(l-1), multiplicity 2l+1: max error %.3e < 1e-8", err));

  // finite-difference oracle from the Euclidean gradient
  const Eigen::MatrixXd& Z = h.tangent_basis;
  const double d = 1e-5;
  Eigen::MatrixXd fd(Z.cols(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const Eigen::VectorXd gp = obj->gradient(s.v.coeffs + d * Z.col(j));
    const Eigen::VectorXd gm = obj->gradient(s.v.coeffs - d * Z.col(j));
    fd.col(j) = 0.5 * Z.transpose() * (gp - gm) / (2.0 * d);
  }
  fd = 0.5 * (fd + fd.transpose());
  const Eigen::VectorXd fde = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(fd).eigenvalues();
  double fderr = 0.0;
  for (std::size_t i = 0; i < expected.size() && i < static_cast<std::size_t>(fde.size()); ++i)
    fderr = std::max(fderr, std::abs(fde[static_cast<Eigen::Index>(i)] - expected[i]));
  c.add(fderr < 1e-5, fmt("finite-difference Hessian eigenvalues: max error %.3e < 1e-5", fderr));

  for (int n : {3, 4}) {
    const auto o = flat_objective(n, n == 3 ? kL : 4);
    const HessianData hn = hessian_Qtilde(*o, normalized_constant(*o));
    const double lmax = hn.eigenvalues.cwiseAbs().maxCoeff();
    int k = 0;
    for (Eigen::Index i = 0; i < hn.eigenvalues.size(); ++i) k += is_kernel_eigenvalue(hn.eigenvalues[i], lmax);
    c.add(k == n, fmt("n=%d kernel dimension %d (expected %d)", n, k, n));
  }
}

// 5. Half-space identities and invariance of Qtilde along the bubble family.
void conformal_machinery(Checks& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n : {3, 4}) {
    std::vector<double> y0(static_cast<std::size_t>(n), 0.0);
    y0[0] = 1.5;
    y0[static_cast<std::size_t>(n - 1)] = -1.2;
    const std::vector<std::pair<std::string, BallFunction>> fields = {
        {"1", ball_constant(n, 1.0)},
        {"y1", ball_coordinate(n, 0)},
        {"y1^2", ball_coordinate_squared(n, 0)},
        {"bubble", as_ball_function(Bubble(BubbleParams::from_pole(1.0, y0)))}};
    for (const auto& [name, f] : fields) {
      const IdentityCheck b = check_boundary_identity(n, f);
      const IdentityCheck gr = check_gradient_identity(n, f);
      c.add(b.relative_error < 1e-5 && gr.relative_error < 1e-5,
            fmt("n=%d %s: boundary identity rel err %.2e, gradient identity rel err %.2e", n, name.c_str(),
                b.relative_error, gr.relative_error));
    }
  }
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> y(3);
    double r = 0.0;
    for (auto& x : y) {
      x = nd(rng);
      r += x * x;
    }
    const double radius = 1.25 + 3.0 * u(rng);
    for (auto& x : y) x *= radius / std::sqrt(r);
    const double q = bubble_Qtilde(Bubble(BubbleParams::from_pole(0.5 + 1.5 * u(rng), y)));
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  c.add(hi - lo < 1e-8, fmt("Qtilde over 20 bubbles: spread %.3e < 1e-8 (mean %.12f)", hi - lo, 0.5 * (hi + lo)));
  const double t = seconds_since(t0);
  c.add(t < 60.0, fmt("runtime %.1f s < 60 s", t));
}

// 6. Stability sweep around the constant.
void ball_stability(Checks& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto obj = flat_objective(3, kL);
  const ConstraintState s = normalized_constant(*obj);
  SweepOptions so;
  so.count = 200;
  so.seed = 42;
  const SweepResult r = stability_sweep(*obj, s, so);
  c.add(r.min_ratio_h1 > 0.0 && r.min_ratio_hhalf > 0.0,
        fmt("min deficit/d^2: H1 %.4f, Hhalf %.4f (> 0), %d excluded", r.min_ratio_h1, r.min_ratio_hhalf, r.excluded));
  c.add(r.fit_h1.slope >= 1.9 && r.fit_h1.slope <= 2.1,
        fmt("fitted exponent (H1) %.4f in [1.9, 2.1]; Hhalf %.4f", r.fit_h1.slope, r.fit_hhalf.slope));
  c.add(r.min_q_sampled >= r.q_min - 1e-6, fmt("min sampled Qtilde - minimum %.3e >= -1e-6", r.min_q_sampled - r.q_min));
  BoundaryField y20 = BoundaryField::zero(obj->basis());
  y20.coeffs[static_cast<Eigen::Index>(obj->basis().flat_index(2, 0))] = 1.0;
  const auto d = directional_probe(*obj, s, y20, {1e-1, 1e-2, 1e-3});
  const double lim = d.back().deficit_over_eps2;
  c.add(std::abs(lim - 8.0) < 0.08, fmt("Y20 direction: deficit/eps^2 at eps=1e-3 is %.6f (8 within 1%%)", lim));
  BoundaryField y10 = BoundaryField::zero(obj->basis());
  y10.coeffs[static_cast<Eigen::Index>(obj->basis().flat_index(1, 0))] = 1.0;
  const auto k = directional_probe(*obj, s, y10, {1e-1, 1e-2, 1e-3});
  c.add(k.back().deficit_over_eps2 < 1e-2 * k.front().deficit_over_eps2 && k.back().ratio_hhalf > 0.0,
        fmt("Y10 direction: deficit/eps^2 %.3e -> %.3e, deficit/d^2 stays %.4f", k.front().deficit_over_eps2,
            k.back().deficit_over_eps2, k.back().ratio_hhalf));
  const double t = seconds_since(t0);
  c.add(t < 600.0, fmt("runtime %.1f s < 600 s", t));
}

// 7. Graph map, reduced function and the gradient relation.
void lyapunov_schmidt(Checks& c) {
  const auto obj = flat_objective(3, kL);
  const ConstraintState s = normalized_constant(*obj);
  const Reduction red(obj, s);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_res = 0.0, worst_q = 0.0;
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd a = gaussian(rng, red.kernel_dim(), 1.0);
    a *= 0.05 * std::max(u(rng), 0.05) / a.norm();
    const GraphSolution g = red.solve_graph(a);
    worst_res = std::max(worst_res, g.residual);
    worst_q = std::max(worst_q, std::abs(g.q - red.critical_value()));
  }
  const Eigen::VectorXd dir = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  std::vector<double> radii, fnorm;
  for (double r : {0.00625, 0.0125, 0.025, 0.05}) {
    const GraphSolution g = red.solve_graph(r * dir);
    worst_res = std::max(worst_res, g.residual);
    worst_q = std::max(worst_q, std::abs(g.q - red.critical_value()));
    radii.push_back(r);
    fnorm.push_back(h_half_norm(BoundaryField(3, kL, g.b)));
  }
  const double sl = slope(radii, fnorm);
  c.add(worst_res < 1e-11, fmt("graph residuals for |a| <= 0.05: max %.3e < 1e-11", worst_res));
  c.add(sl >= 1.9, fmt("|F(a)| against |a|: log-log slope %.4f >= 1.9", sl));
  c.add(worst_q < 1e-8, fmt("reduced function constant: max |q(a) - q(0)| %.3e < 1e-8", worst_q));

  double flat_err = 0.0;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd a = gaussian(rng, 3, 1.0);
    a *= 0.04 / a.norm();
    flat_err = std::max(flat_err, gradient_relation(red, a, gaussian(rng, red.kernel().rows(), 1.0)).abs_error);
  }
  c.add(flat_err < 1e-5, fmt("gradient relation, unplanted: max abs error %.3e < 1e-5", flat_err));
  PlantedSpec sp;
  sp.form = PlantedForm::Cubic;
  sp.direction = dir;
  const Reduction rp(std::make_shared<PlantedFunctional>(obj, red.kernel(), s.v.coeffs, sp), s);
  double pl_err = 0.0;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd a = gaussian(rng, 3, 1.0);
    a *= 0.04 / a.norm();
    pl_err = std::max(pl_err, gradient_relation(rp, a, gaussian(rng, red.kernel().rows(), 1.0)).rel_error);
  }
  c.add(pl_err < 1e-5, fmt("gradient relation, planted cubic: max rel error %.3e < 1e-5", pl_err));
}

// 8. Quadratic coercivity transverse to the critical variety.
void coercivity(Checks& c) {
  const auto obj = flat_objective(3, kL);
  const Reduction red(obj, normalized_constant(*obj));
  const CoercivityReport r = coercivity_probe(red, 100, 0.05, 1e-3, 0.03, 11);
  c.add(r.c1 > 0.0, fmt("C1 over %zu samples %.4f > 0", r.samples.size(), r.c1));
  const double rel = std::abs(r.c1_small - r.spectral_floor) / r.spectral_floor;
  c.add(rel < 0.25, fmt("small-eta C1 %.6f against spectral floor %.6f: rel gap %.2e < 0.25", r.c1_small,
                        r.spectral_floor, rel));
}

// 9. Planted AS_p functionals.
void planted_asp(Checks& c) {
  const auto obj = flat_objective(3, kL);
  const ConstraintState s = normalized_constant(*obj);
  const Reduction red(obj, s);
  const Eigen::VectorXd dir = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
  const Eigen::VectorXd target = (red.kernel() * dir).normalized();
  for (PlantedForm f : {PlantedForm::Cubic, PlantedForm::Quartic, PlantedForm::NegativeQuartic}) {
    PlantedSpec sp;
    sp.form = f;
    sp.direction = dir;
    const Reduction rp(std::make_shared<PlantedFunctional>(obj, red.kernel(), s.v.coeffs, sp), s);
    const ReductionResult r = run_reduction(rp);
    const int p = planted_degree(f);
    const std::string name = to_string(f);
    if (f == PlantedForm::NegativeQuartic) {
      c.add(r.taylor.order == p && !r.taylor.asp,
            fmt("%s: order %d, AS_p %s (expected fails)", name.c_str(), r.taylor.order, r.taylor.asp ? "holds" : "fails"));
      continue;
    }
    double err = INFINITY;
    for (const auto& m : r.taylor.maximizers) {
      const Eigen::VectorXd mf = m.field.normalized();
      err = std::min(err, (mf - target).norm());
      if (p % 2 == 0) err = std::min(err, (mf + target).norm());
    }
    c.add(r.taylor.order == p && r.taylor.asp,
          fmt("%s: recovered order %d (planted %d), AS_p %s", name.c_str(), r.taylor.order, p,
              r.taylor.asp ? "holds" : "fails"));
    c.add(err < 1e-3, fmt("%s: maximizer direction error %.3e < 1e-3", name.c_str(), err));
    const AspGapResult g = asp_gap_probe(rp, dir, p);
    if (p == 3) {
      // alphas are {0.1, 0.5}
      c.add(g.monotone[1] && g.min_factor[1] >= 1.5,
            fmt("%s: ratio for alpha=0.5 falls by min factor %.4f per halving (>= 1.5), monotone %s", name.c_str(),
                g.min_factor[1], g.monotone[1] ? "yes" : "no"));
      c.add(g.monotone[0], fmt("%s: ratio for alpha=0.1 monotone, min factor %.4f", name.c_str(), g.min_factor[0]));
    } else {
      c.add(std::abs(g.deficit_slope - 4.0) < 0.1, fmt("%s: deficit slope in t %.4f (4 +- 0.1)", name.c_str(), g.deficit_slope));
    }
  }
  const AspGapResult flat = asp_gap_probe(red, dir, 3);
  c.add(flat.integrable, "unplanted: probe reports the integrable short-circuit");
}

// 10. Decomposition of Q over composites and the interior sweep.
void decomposition(Checks& c) {
  const ModelGeometry g = flat_ball(3);
  const auto obj = flat_objective(3, kL);
  const Exponents& e = obj->exps();
  const Eigen::Index N = static_cast<Eigen::Index>(obj->basis().size());
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const BoundaryField v = random_positive_field(*obj, 900 + static_cast<std::uint64_t>(i));
    const InteriorField u(v, 2, gaussian(rng, 2 * N, 0.2));
    const double split = obj->value(v.coeffs) +
                         e.c_n * dirichlet_integral(u.interior_part()) / std::pow(obj->p_mass(v.coeffs), 2.0 / e.p);
    worst = std::max(worst, std::abs(eval_Q_intrinsic(g, u) - split));
  }
  c.add(worst < 1e-9, fmt("100 composites: max |Q(u) - Qtilde(v) - interior term| %.3e < 1e-9", worst));
  InteriorSweepOptions io;
  io.count = 200;
  const InteriorSweepResult r = interior_sweep(g, *obj, normalized_constant(*obj), io);
  c.add(r.min_ratio > 0.0, fmt("interior sweep: min deficit/(d^M)^2 %.4f > 0, %d excluded", r.min_ratio, r.excluded));
  c.add(r.max_decomposition_error < 1e-9, fmt("interior sweep decomposition error %.3e", r.max_decomposition_error));
  c.add(r.min_chain_ratio > 0.0, fmt("elementary inequality chain: min ratio %.4f > 0", r.min_chain_ratio));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 11. Repeated sweep runs give identical bytes.
void determinism(Checks& c, const AcceptanceOptions& opt) {
  std::pair<std::string, std::string> out;
  if (opt.determinism_runner) {
    out = opt.determinism_runner();
  } else {
    RunConfig cfg;
    cfg.command = "sweep";
    cfg.options = Json{{"count", 24}};
    cfg.seed = 42;
    std::ostringstream log;
    std::string files[2];
    for (int k = 0; k < 2; ++k) {
      cfg.out = (std::filesystem::path(opt.scratch) / ("determinism_" + std::to_string(k))).string();
      const int rc = run_command(cfg, log);
      if (rc != kExitOk) throw NumericalError("sweep run failed: " + log.str());
      files[k] = slurp((std::filesystem::path(cfg.out) / "sweep.csv").string());
    }
    out = {files[0], files[1]};
  }
  c.add(!out.first.empty(), fmt("sweep CSV has %zu bytes", out.first.size()));
  c.add(out.first == out.second, "repeated sweep runs give byte-identical CSV");
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  struct Entry {
    int id;
    const char* title;
    std::function<void(Checks&)> body;
  };
  const std::vector<Entry> all = {
      {1, "DtN exactness on the flat ball", dtn_exactness},
      {2, "sharp constant 8 sqrt(pi)", sharp_constant},
      {3, "boundary and ball quotients agree", boundary_equals_ball},
      {4, "second variation 8(l-1) and kernel dimension", second_variation},
      {5, "half-space identities and bubble invariance", conformal_machinery},
      {6, "ball stability sweep", ball_stability},
      {7, "graph map and reduced function", lyapunov_schmidt},
      {8, "coercivity off the critical variety", coercivity},
      {9, "planted AS_p suite", planted_asp},
      {10, "decomposition identity and interior sweep", decomposition},
      {11, "sweep determinism", [&opt](Checks& c) { determinism(c, opt); }},
  };
  std::vector<CriterionResult> out;
  for (const auto& e : all) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), e.id) == opt.only.end()) continue;
    CriterionResult r;
    r.id = e.id;
    r.title = e.title;
    const auto t0 = std::chrono::steady_clock::now();
    Checks c;
    try {
      e.body(c);
    } catch (const std::exception& ex) {
      c.add(false, std::string("exception: ") + ex.what());
    }
    r.seconds = seconds_since(t0);
    r.passed = c.ok;
    r.details = c.text();
    if (opt.progress) {
      *opt.progress << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.title << " ("
                    << fmt("%.1f", r.seconds) << " s)\n"
                    << r.details;
      opt.progress->flush();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace escobar
