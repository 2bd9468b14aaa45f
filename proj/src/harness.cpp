#include "escobar/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "escobar/operators.hpp"
#include "escobar/parallel.hpp"

namespace escobar {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd normalized(const Objective& obj, const Eigen::VectorXd& x) {
  return x / std::pow(obj.p_mass(x), 1.0 / obj.exps().p);
}

double mean_value(const BasisDescriptor& basis, const BoundaryField& v) {
  return v.coeffs[0] / std::sqrt(basis.sphere_area());
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// Unit-L^2 tangent direction at the minimizer.
BoundaryField random_direction(const Objective& obj, const ConstraintState& state, const SamplerSpec& spec,
                               std::mt19937_64& rng, std::string& descriptor) {
  const BasisDescriptor& basis = obj.basis();
  BoundaryField phi = BoundaryField::zero(basis);
  if (spec.direction) {
    check_compatible(basis, *spec.direction);
    phi = *spec.direction;
    descriptor = "fixed";
  } else {
    std::normal_distribution<double> nd;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const int l = basis.degree(i);
      if (l == 0) continue;
      if (spec.degree >= 0 && l != spec.degree) continue;
      phi.coeffs[static_cast<Eigen::Index>(i)] = nd(rng);
    }
    descriptor = spec.degree >= 0 ? "degree-" + std::to_string(spec.degree) : "all-degrees";
  }
  phi = project_tangent(obj, state, phi);
  const double nrm = phi.coeffs.norm();
  if (!(nrm > 0.0)) throw ConfigError("perturbation direction vanishes in the tangent space");
  phi.coeffs /= nrm;
  return phi;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ud(std::log(lo), std::log(hi));
  return std::exp(ud(rng));
}

}  // namespace

double repair_positivity(const Objective& obj, BoundaryField& v, double fraction) {
  const BasisDescriptor& basis = obj.basis();
  const double mn = obj.min_nodal_value(v.coeffs);
  const double mean = mean_value(basis, v);
  if (mn >= fraction * mean && mn > 0.0) return 0.0;
  // (mn + s) = fraction * (mean + s)
  const double s = (fraction * mean - mn) / (1.0 - fraction);
  v.coeffs[0] += s * std::sqrt(basis.sphere_area());
  return s;
}

BoundaryField random_positive_field(const Objective& obj, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  BoundaryField v = BoundaryField::zero(obj.basis());
  for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) v.coeffs[i] = ud(rng);
  repair_positivity(obj, v);
  return v;
}

FlowTrajectory minimize_Q(const Objective& obj, const BoundaryField& v0, const MinimizeOptions& opt) {
  check_compatible(obj.basis(), v0);
  FlowTrajectory traj;
  ConstraintState st = normalize_p(obj, v0);
  double q = obj.value(st.v.coeffs);
  double t = opt.initial_step;
  auto distance = [&](const BoundaryField& v) { return distance_to_family(v, NormTag::Hhalf).value; };

  int accepted = 0;
  for (int it = 0;; ++it) {
    const BoundaryField g = grad_Qtilde(obj, st);
    const double gn = g.coeffs.norm();
    FlowStep rec;
    rec.iteration = it;
    rec.q = q;
    rec.grad_norm = gn;
    rec.step = t;
    if (opt.distance_every > 0 && accepted % opt.distance_every == 0) rec.distance = distance(st.v);
    traj.steps.push_back(rec);
    if (gn < opt.grad_tol) {
      traj.converged = true;
      traj.status = "gradient below tolerance";
      break;
    }
    if (it >= opt.max_iterations) {
      traj.status = "iteration limit";
      break;
    }
    // Search direction: the projected gradient, or near convergence a
    // Newton step in the tangent space with eigenvalues replaced by their
    // magnitudes.
    Eigen::VectorXd dir = -g.coeffs;
    bool newton = gn < opt.newton_switch;
    double t0 = std::min(2.0 * t, 1.0);
    if (newton) {
      const Eigen::MatrixXd Z = orthonormal_complement(obj.mass_direction(st.v.coeffs));
      const Eigen::MatrixXd A = Z.transpose() * obj.hessian(st.v.coeffs) * Z;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
      const Eigen::VectorXd r = es.eigenvectors().transpose() * (Z.transpose() * g.coeffs);
      // Near-null directions (the family) are left alone.
      const double floor = 1e-6 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      Eigen::VectorXd y(r.size());
      double transverse = 0.0;
      for (Eigen::Index k = 0; k < r.size(); ++k) {
        const double lam = std::abs(es.eigenvalues()[k]);
        y[k] = lam < floor ? 0.0 : -r[k] / lam;
        if (lam >= floor) transverse += r[k] * r[k];
      }
      transverse = std::sqrt(transverse);
      if (transverse < opt.grad_tol) {
        // What is left points along the near-null directions, where the
        // truncated functional is flat to roundoff.
        traj.converged = true;
        std::ostringstream os;
        os << "transverse gradient below tolerance (" << transverse << "); residual " << gn
           << " along near-null directions";
        traj.status = os.str();
        break;
      }
      dir = Z * (es.eigenvectors() * y);
      const double cap = opt.newton_max_step;
      if (dir.norm() > cap) dir *= cap / dir.norm();
      t0 = 1.0;
    }
    const double slope = g.coeffs.dot(dir);
    t = t0;
    bool ok = false;
    while (t > opt.min_step) {
      const Eigen::VectorXd trial = st.v.coeffs + t * dir;
      if (!(obj.min_nodal_value(trial) > 0.0)) {
        ++traj.positivity_rejections;
        t *= 0.5;
        continue;
      }
      const Eigen::VectorXd xn = normalized(obj, trial);
      const double dq = obj.value_change(st.v.coeffs, xn);
      if (dq <= opt.armijo * t * slope && dq < 0.0) {
        st.v.coeffs = xn;
        st.p_mass = obj.p_mass(xn);
        q += dq;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (newton) t = std::min(t, opt.initial_step);
    if (!ok) {
      traj.status = "step underflow";
      break;
    }
    ++accepted;
  }
  traj.final_point = st.v;
  traj.final_q = q;
  traj.final_grad_norm = traj.steps.back().grad_norm;
  traj.final_distance = distance(st.v);
  if (!traj.steps.back().distance) traj.steps.back().distance = traj.final_distance;
  return traj;
}

CompositeMinimum minimize_composite(const ModelGeometry& geom, const Objective& obj, const InteriorField& u0,
                                    const MinimizeOptions& opt) {
  if (!geom.is_flat()) throw ConfigError("composite minimization works on the flat ball");
  check_compatible(obj.basis(), u0.harmonic);
  const Exponents& e = obj.exps();
  const int K = u0.radial_order;
  const Eigen::Index N = static_cast<Eigen::Index>(obj.basis().size());
  const Eigen::Index M = N * K;

  // Dirichlet Gram matrix of the interior basis.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  {
    const BoundaryField zero = BoundaryField::zero(obj.basis());
    std::vector<InteriorField> unit;
    for (Eigen::Index a = 0; a < M; ++a) unit.emplace_back(zero, K, Eigen::VectorXd::Unit(M, a));
    for (Eigen::Index a = 0; a < M; ++a) {
      for (Eigen::Index b = a; b < M; ++b) {
        // channels only couple within the same harmonic index
        if (a / K != b / K) continue;
        G(a, b) = G(b, a) = dirichlet_inner(unit[static_cast<std::size_t>(a)], unit[static_cast<std::size_t>(b)]);
      }
    }
  }
  const double p = e.p;
  auto value = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& c) {
    const double D = std::pow(obj.p_mass(v), 2.0 / p);
    return obj.value(v) + e.c_n * c.dot(G * c) / D;
  };

  Eigen::VectorXd v = u0.harmonic.coeffs;
  Eigen::VectorXd c = u0.interior.size() == M ? u0.interior : Eigen::VectorXd::Zero(M);
  obj.require_positive(v);
  {
    const double m = std::pow(obj.p_mass(v), 1.0 / p);
    v /= m;
    c /= m;
  }
  double q = value(v, c);
  double t = opt.initial_step;
  CompositeMinimum out;
  out.status = "iteration limit";
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it;
    const double P = obj.p_mass(v);
    const double D = std::pow(P, 2.0 / p);
    const double I = e.c_n * c.dot(G * c);
    const Eigen::VectorXd s = obj.mass_direction(v);
    Eigen::VectorXd gv = obj.gradient(v) - I * 2.0 * std::pow(P, 2.0 / p - 1.0) * s / (D * D);
    gv -= (gv.dot(s) / s.squaredNorm()) * s;
    const Eigen::VectorXd gc = 2.0 * e.c_n * (G * c) / D;
    const double gn = std::sqrt(gv.squaredNorm() + gc.squaredNorm());
    out.grad_norm = gn;
    if (gn < opt.grad_tol) {
      out.status = "gradient below tolerance";
      break;
    }
    t = std::min(2.0 * t, 1.0);
    bool ok = false;
    while (t > opt.min_step) {
      Eigen::VectorXd vn = v - t * gv, cn = c - t * gc;
      if (!(obj.min_nodal_value(vn) > 0.0)) {
        t *= 0.5;
        continue;
      }
      const double m = std::pow(obj.p_mass(vn), 1.0 / p);
      vn /= m;
      cn /= m;
      const double qn = value(vn, cn);
      if (qn <= q - opt.armijo * t * gn * gn && qn < q) {
        v = vn;
        c = cn;
        q = qn;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      out.status = "step underflow";
      break;
    }
  }
  out.point = InteriorField(BoundaryField(obj.basis().dim(), obj.basis().max_degree(), v), K, c);
  out.value = eval_Q(geom, out.point);
  out.value_quadrature = eval_Q_intrinsic(geom, out.point);
  return out;
}

PowerFit fit_power_law(const std::vector<SweepRecord>& records, bool h1_tag, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int m = 0;
  for (const auto& r : records) {
    const double d = h1_tag ? r.d_h1 : r.d_hhalf;
    if (!r.distance_ok || !(d > 0.0) || !(r.deficit > floor)) continue;
    const double x = std::log(d), y = std::log(r.deficit);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  PowerFit f;
  f.used = m;
  if (m < 2) return f;
  const double den = m * sxx - sx * sx;
  f.slope = (m * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / m;
  f.c_hat = std::exp(f.intercept);
  const double vy = m * syy - sy * sy;
  f.r2 = vy > 0 ? (m * sxy - sx * sy) * (m * sxy - sx * sy) / (den * vy) : 1.0;
  return f;
}

SweepResult stability_sweep(const Objective& obj, const ConstraintState& minimizer, const SweepOptions& opt) {
  if (opt.count < 1) throw ConfigError("sweep needs N >= 1");
  if (!(opt.sampler.eps_min > 0.0) || !(opt.sampler.eps_max >= opt.sampler.eps_min))
    throw ConfigError("epsilon range must satisfy 0 < eps_min <= eps_max");
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult res;
  res.q_min = obj.value(minimizer.v.coeffs);
  res.records.resize(static_cast<std::size_t>(opt.count));
  std::vector<double> qs(static_cast<std::size_t>(opt.count));

  parallel_for(static_cast<std::size_t>(opt.count), [&](std::size_t i) {
    const auto ts = std::chrono::steady_clock::now();
    SweepRecord& r = res.records[i];
    r.index = i;
    r.seed = opt.seed;
    std::mt19937_64 rng = sample_rng(opt.seed, i);
    const double eps = log_uniform(rng, opt.sampler.eps_min, opt.sampler.eps_max);
    const BoundaryField phi = random_direction(obj, minimizer, opt.sampler, rng, r.descriptor);
    BoundaryField u = minimizer.v;
    u.coeffs += eps * phi.coeffs;
    r.epsilon = eps;
    r.shift = repair_positivity(obj, u);
    u.coeffs = normalized(obj, u.coeffs);
    qs[i] = obj.value(u.coeffs);
    r.deficit = qs[i] - res.q_min;
    try {
      const DistanceReport dh = distance_to_family(u, NormTag::Hhalf, opt.distance);
      const DistanceReport d1 = distance_to_family(u, NormTag::H1, opt.distance);
      r.d_hhalf = dh.value;
      r.d_h1 = d1.value;
      r.distance_ok = dh.converged && d1.converged;
    } catch (const NumericalError&) {
      r.distance_ok = false;
    }
    r.ratio_hhalf = r.d_hhalf > 0 ? r.deficit / (r.d_hhalf * r.d_hhalf) : std::numeric_limits<double>::infinity();
    r.ratio_h1 = r.d_h1 > 0 ? r.deficit / (r.d_h1 * r.d_h1) : std::numeric_limits<double>::infinity();
    r.wall_time = seconds_since(ts);
  });

  res.min_q_sampled = *std::min_element(qs.begin(), qs.end());
  res.min_ratio_h1 = res.min_ratio_hhalf = std::numeric_limits<double>::infinity();
  for (const auto& r : res.records) {
    if (!r.distance_ok) {
      ++res.excluded;
      continue;
    }
    res.min_ratio_h1 = std::min(res.min_ratio_h1, r.ratio_h1);
    res.min_ratio_hhalf = std::min(res.min_ratio_hhalf, r.ratio_hhalf);
  }
  res.fit_h1 = fit_power_law(res.records, true);
  res.fit_hhalf = fit_power_law(res.records, false);
  res.wall_time = seconds_since(t0);
  return res;
}

std::vector<DirectionalSample> directional_probe(const Objective& obj, const ConstraintState& minimizer,
                                                 const BoundaryField& phi, const std::vector<double>& eps) {
  const BoundaryField dir = project_tangent(obj, minimizer, phi);
  const double q0 = obj.value(minimizer.v.coeffs);
  std::vector<DirectionalSample> out(eps.size());
  parallel_for(eps.size(), [&](std::size_t i) {
    DirectionalSample& s = out[i];
    s.epsilon = eps[i];
    BoundaryField u = minimizer.v;
    u.coeffs += eps[i] * dir.coeffs;
    s.deficit = obj.value(u.coeffs) - q0;
    s.deficit_over_eps2 = s.deficit / (eps[i] * eps[i]);
    u.coeffs = normalized(obj, u.coeffs);
    s.d_hhalf = distance_to_family(u, NormTag::Hhalf).value;
    s.ratio_hhalf = s.deficit / (s.d_hhalf * s.d_hhalf);
  });
  return out;
}

InteriorSweepResult interior_sweep(const ModelGeometry& geom, const Objective& obj, const ConstraintState& minimizer,
                                   const InteriorSweepOptions& opt) {
  if (opt.count < 1) throw ConfigError("sweep needs N >= 1");
  if (!geom.is_flat()) throw ConfigError("interior sweep works on the flat ball");
  const auto t0 = std::chrono::steady_clock::now();
  const Exponents& e = geom.exps();
  const double q_min = obj.value(minimizer.v.coeffs);
  const int K = opt.radial_order;
  const std::size_t N = obj.basis().size();
  InteriorSweepResult res;
  res.records.resize(static_cast<std::size_t>(opt.count));

  parallel_for(static_cast<std::size_t>(opt.count), [&](std::size_t i) {
    const auto ts = std::chrono::steady_clock::now();
    InteriorRecord& rec = res.records[i];
    SweepRecord& r = rec.base;
    r.index = i;
    r.seed = opt.seed;
    std::mt19937_64 rng = sample_rng(opt.seed, i);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const double kind = ud(rng);
    const bool pure_interior = kind < opt.pure_interior_fraction;
    const bool pure_boundary = !pure_interior && kind < opt.pure_interior_fraction + opt.pure_boundary_fraction;

    BoundaryField v = minimizer.v;
    std::string dir_desc;
    if (!pure_interior) {
      const double eps = log_uniform(rng, opt.sampler.eps_min, opt.sampler.eps_max);
      const BoundaryField phi = random_direction(obj, minimizer, opt.sampler, rng, dir_desc);
      v.coeffs += eps * phi.coeffs;
      r.epsilon = eps;
      r.shift = repair_positivity(obj, v);
      v.coeffs = normalized(obj, v.coeffs);
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * K);
    if (!pure_boundary) {
      std::normal_distribution<double> nd;
      for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = nd(rng);
      const InteriorField probe(BoundaryField::zero(obj.basis()), K, c);
      const double size = log_uniform(rng, opt.interior_min, opt.interior_max);
      c *= size / h1_norm(probe);
    }
    r.descriptor = pure_interior ? "interior" : pure_boundary ? "boundary/" + dir_desc : "mixed/" + dir_desc;
    const InteriorField u(v, K, c);
    const InteriorField u0 = u.interior_part();
    r.interior_size = h1_norm(u0);

    rec.q_composite = eval_Q_intrinsic(geom, u);
    rec.q_boundary = obj.value(v.coeffs);
    rec.interior_term = e.c_n * dirichlet_integral(u0) / std::pow(obj.p_mass(v.coeffs), 2.0 / e.p);
    rec.decomposition_error = std::abs(rec.q_composite - rec.q_boundary - rec.interior_term);
    r.deficit = rec.q_composite - q_min;
    try {
      const DistanceReport d1 = distance_to_family(u, NormTag::H1, opt.distance);
      const DistanceReport dh = distance_to_family(v, NormTag::Hhalf, opt.distance);
      r.d_h1 = d1.value;
      r.d_hhalf = dh.value;
      r.distance_ok = d1.converged && dh.converged;
    } catch (const NumericalError&) {
      r.distance_ok = false;
    }
    r.ratio_h1 = r.d_h1 > 0 ? r.deficit / (r.d_h1 * r.d_h1) : std::numeric_limits<double>::infinity();
    r.ratio_hhalf = r.d_hhalf > 0 ? r.deficit / (r.d_hhalf * r.d_hhalf) : std::numeric_limits<double>::infinity();
    r.wall_time = seconds_since(ts);
  });

  // Exponent used in the inequality chain: gamma = 0 on the integrable ball.
  res.gamma = 0.0;
  res.min_ratio = res.min_chain_ratio = std::numeric_limits<double>::infinity();
  for (auto& rec : res.records) {
    res.max_decomposition_error = std::max(res.max_decomposition_error, rec.decomposition_error);
    const double a = rec.base.d_hhalf;
    const double b = rec.base.interior_size;
    const double g = res.gamma;
    if (a > 0 || b > 0) {
      rec.chain_ratio = (std::pow(a, 2.0 + g) + b * b) / std::pow(a * a + b * b, 1.0 + g / 2.0);
      res.min_chain_ratio = std::min(res.min_chain_ratio, rec.chain_ratio);
    }
    if (!rec.base.distance_ok) {
      ++res.excluded;
      continue;
    }
    res.min_ratio = std::min(res.min_ratio, rec.base.ratio_h1);
  }
  res.wall_time = seconds_since(t0);
  return res;
}

AspGapResult asp_gap_probe(const Reduction& red, const Eigen::VectorXd& theta, int p, const std::vector<double>& t_in,
                           const std::vector<double>& alphas, double noise_floor) {
  std::vector<double> ts(t_in);
  std::sort(ts.begin(), ts.end(), std::greater<>());
  if (theta.size() != red.kernel_dim()) throw ConfigError("direction has the wrong kernel dimension");
  if (ts.size() < 2) throw ConfigError("asp gap probe needs at least two values of t");
  AspGapResult res;
  res.p = p;
  res.alphas = alphas;
  const Eigen::VectorXd dir = theta.normalized();
  const int n = red.critical().v.n, L = red.critical().v.L;
  res.rows.resize(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) {
    const GraphSolution g = red.solve_graph(ts[i] * dir);
    AspGapRow& row = res.rows[i];
    row.t = ts[i];
    row.deficit = g.q - red.critical_value();
    row.distance = h_half_norm(BoundaryField(n, L, g.point - red.critical().v.coeffs));
    for (double a : alphas) row.ratios.push_back(row.deficit / std::pow(row.distance, p - a));
  });
  res.integrable = std::all_of(res.rows.begin(), res.rows.end(),
                               [&](const AspGapRow& r) { return std::abs(r.deficit) < noise_floor; });
  if (res.integrable) return res;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : res.rows) {
    if (!(r.deficit > 0)) continue;
    const double x = std::log(r.t), y = std::log(r.deficit);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) res.deficit_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    double f = std::numeric_limits<double>::infinity();
    bool mono = true;
    for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
      const double a = res.rows[i].ratios[k], b = res.rows[i + 1].ratios[k];
      f = std::min(f, a / b);
      if (!(b < a)) mono = false;
    }
    res.min_factor.push_back(f);
    res.monotone.push_back(mono);
  }
  return res;
}

}  // namespace escobar
