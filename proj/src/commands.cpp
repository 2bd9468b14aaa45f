#include "escobar/commands.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "escobar/acceptance.hpp"

namespace escobar {

namespace fs = std::filesystem;

namespace {

template <class T>
T option(const Json& opts, const char* key, T fallback) {
  if (!opts.contains(key) || opts.at(key).is_null()) return fallback;
  try {
    return opts.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("option '") + key + "' has the wrong type");
  }
}

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  ModelGeometry geom;
  std::shared_ptr<BoundaryFunctional> obj;
  fs::path dir;
  std::string hash;

  explicit Context(const RunConfig& c, std::ostream& l) : cfg(c), log(l), hash(c.hash()) {
    Json g = c.geometry;
    g["n"] = c.n;
    geom = geometry_from_json(g);
    obj = std::make_shared<BoundaryFunctional>(geom, c.L);
    dir = c.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }

  Json header() const {
    return Json{{"version", kArtifactVersion}, {"config_hash", hash}, {"command", cfg.command},
                {"config", cfg.canonical()}};
  }
  std::string csv_preamble() const {
    return std::string("# escobar_lab ") + kArtifactVersion + " config_hash=" + hash + "\n";
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  void write_json(const std::string& name, Json body) const {
    Json j = header();
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    write_text_file(path(name), j.dump(2) + "\n");
    log << "wrote " << path(name) << "\n";
  }
  void write_text(const std::string& name, const std::string& text) const {
    write_text_file(path(name), text);
    log << "wrote " << path(name) << "\n";
  }
};

BoundaryField constant_field(const Objective& obj) {
  BoundaryField c = BoundaryField::zero(obj.basis());
  c.coeffs[0] = 1.0;
  return c;
}

int cmd_spectrum(Context& ctx) {
  const BasisDescriptor& basis = ctx.obj->basis();
  const SpectralOperator dtn = dtn_matrix(ctx.geom, basis);
  std::ostringstream d;
  d << ctx.csv_preamble() << "index,degree,sub,order,value\n";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const HarmonicIndex& h = basis.index(i);
    d << i << "," << h.degree << "," << h.sub << "," << h.order << ","
      << format_double(dtn.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))) << "\n";
  }
  Eigen::MatrixXd off = dtn.matrix;
  off.diagonal().setZero();

  const ConstraintState ref = reference_state(*ctx.obj, ctx.geom);
  const HessianData h = hessian_Qtilde(*ctx.obj, ref);
  const double lmax = h.eigenvalues.cwiseAbs().maxCoeff();
  int kernel_dim = 0;
  std::ostringstream e;
  e << ctx.csv_preamble() << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < h.eigenvalues.size(); ++i) {
    e << i << "," << format_double(h.eigenvalues[i]) << "\n";
    if (is_kernel_eigenvalue(h.eigenvalues[i], lmax)) ++kernel_dim;
  }
  ctx.write_text("dtn_diagonal.csv", d.str());
  ctx.write_text("hessian_eigenvalues.csv", e.str());
  ctx.write_json("spectrum.json", Json{{"n", ctx.cfg.n},
                                       {"L", ctx.cfg.L},
                                       {"basis_size", basis.size()},
                                       {"kernel_dim", kernel_dim},
                                       {"critical_value", ctx.obj->value(ref.v.coeffs)},
                                       {"dtn_max_offdiagonal", off.cwiseAbs().maxCoeff()},
                                       {"dtn_symmetry_defect", dtn.symmetry_defect()},
                                       {"hessian", to_json(h)}});
  ctx.log << "kernel_dim " << kernel_dim << "\n";
  return kExitOk;
}

int cmd_minimize(Context& ctx) {
  const Json& o = ctx.cfg.options;
  const std::string start = option<std::string>(o, "start", "random");
  BoundaryField v0;
  if (start == "random") {
    v0 = random_positive_field(*ctx.obj, ctx.cfg.seed);
  } else if (start == "constant") {
    v0 = constant_field(*ctx.obj);
  } else if (start == "perturbed") {
    // normalized constant plus amplitude * Y_{l,0}
    v0 = normalize_p(*ctx.obj, constant_field(*ctx.obj)).v;
    const int l = option<int>(o, "perturb_degree", 2);
    if (l < 0 || l > ctx.cfg.L) throw ConfigError("perturb_degree must lie in [0, L]");
    v0.coeffs[static_cast<Eigen::Index>(ctx.obj->basis().flat_index(l, 0))] += option<double>(o, "perturb_amplitude", 0.3);
    repair_positivity(*ctx.obj, v0);
  } else if (start == "file") {
    const std::string p = option<std::string>(o, "initial", "");
    if (p.empty()) throw ConfigError("start 'file' needs option 'initial'");
    const Json j = read_json_file(p);
    v0 = field_from_json(j.contains("field") ? j.at("field") : j);
    if (v0.n != ctx.cfg.n || v0.L != ctx.cfg.L) throw ConfigError("field in '" + p + "' does not match n and L");
  } else {
    throw ConfigError("start must be one of random, constant, perturbed, file; got '" + start + "'");
  }
  MinimizeOptions mo;
  mo.grad_tol = option<double>(o, "grad_tol", mo.grad_tol);
  mo.max_iterations = option<int>(o, "max_iterations", mo.max_iterations);
  mo.distance_every = option<int>(o, "distance_every", mo.distance_every);
  const FlowTrajectory t = minimize_Q(*ctx.obj, v0, mo);
  Json body = to_json(t);
  body["initial_point"] = to_json(v0);
  ctx.write_json("trajectory.json", body);
  ctx.log << "status: " << t.status << ", final q " << format_double(t.final_q) << "\n";
  return kExitOk;
}

SamplerSpec sampler_from(const Json& o) {
  SamplerSpec s;
  s.eps_min = option<double>(o, "eps_min", s.eps_min);
  s.eps_max = option<double>(o, "eps_max", s.eps_max);
  s.degree = option<int>(o, "degree", s.degree);
  if (!(s.eps_min > 0.0 && s.eps_min <= s.eps_max)) throw ConfigError("need 0 < eps_min <= eps_max");
  return s;
}

Json sweep_summary(const SweepResult& r) {
  return Json{{"count", r.records.size()},
              {"excluded", r.excluded},
              {"q_min", r.q_min},
              {"min_q_sampled", r.min_q_sampled},
              {"min_ratio_h1", r.min_ratio_h1},
              {"min_ratio_hhalf", r.min_ratio_hhalf},
              {"fit_h1", to_json(r.fit_h1)},
              {"fit_hhalf", to_json(r.fit_hhalf)}};
}

int cmd_sweep(Context& ctx) {
  const Json& o = ctx.cfg.options;
  const std::string kind = option<std::string>(o, "kind", "boundary");
  const int count = option<int>(o, "count", 200);
  if (count < 1) throw ConfigError("count must be >= 1");
  const ConstraintState ref = reference_state(*ctx.obj, ctx.geom);
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream csv;
  Json summary;
  if (kind == "boundary") {
    SweepOptions so;
    so.count = count;
    so.seed = ctx.cfg.seed;
    so.sampler = sampler_from(o);
    const SweepResult r = stability_sweep(*ctx.obj, ref, so);
    write_sweep_csv(csv, r.records, ctx.csv_preamble());
    summary = sweep_summary(r);
  } else if (kind == "interior") {
    InteriorSweepOptions io;
    io.count = count;
    io.seed = ctx.cfg.seed;
    io.sampler = sampler_from(o);
    io.radial_order = option<int>(o, "radial_order", io.radial_order);
    io.interior_min = option<double>(o, "interior_min", io.interior_min);
    io.interior_max = option<double>(o, "interior_max", io.interior_max);
    const InteriorSweepResult r = interior_sweep(ctx.geom, *ctx.obj, ref, io);
    write_interior_csv(csv, r.records, ctx.csv_preamble());
    summary = Json{{"count", r.records.size()},
                   {"excluded", r.excluded},
                   {"min_ratio", r.min_ratio},
                   {"max_decomposition_error", r.max_decomposition_error},
                   {"min_chain_ratio", r.min_chain_ratio},
                   {"gamma", r.gamma}};
  } else {
    throw ConfigError("sweep kind must be 'boundary' or 'interior', got '" + kind + "'");
  }
  summary["kind"] = kind;
  ctx.write_text("sweep.csv", csv.str());
  ctx.write_json("sweep_summary.json", summary);
  ctx.log << "sweep of " << count << " samples took "
          << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return kExitOk;
}

int cmd_reduce(Context& ctx) {
  const Json& o = ctx.cfg.options;
  const ConstraintState ref = reference_state(*ctx.obj, ctx.geom);
  ReductionOptions ro;
  ro.a_max = option<double>(o, "a_max", ro.a_max);
  auto base = std::make_shared<Reduction>(ctx.obj, ref, ro);
  std::shared_ptr<Reduction> red = base;
  Json planted = nullptr;
  if (o.contains("planted") && !o.at("planted").is_null()) {
    const Json& pj = o.at("planted");
    PlantedSpec sp;
    sp.form = planted_form_from_string(option<std::string>(pj, "form", "cubic"));
    sp.strength = option<double>(pj, "strength", 1.0);
    std::vector<double> dir = option<std::vector<double>>(pj, "direction", {});
    if (dir.empty()) {
      dir.assign(static_cast<std::size_t>(base->kernel_dim()), 0.0);
      dir[0] = 1.0;
    }
    if (static_cast<int>(dir.size()) != base->kernel_dim())
      throw ConfigError("planted direction needs " + std::to_string(base->kernel_dim()) + " components");
    sp.direction = Eigen::Map<const Eigen::VectorXd>(dir.data(), static_cast<Eigen::Index>(dir.size()));
    if (sp.direction.norm() == 0.0) throw ConfigError("planted direction must be nonzero");
    sp.direction.normalize();
    auto pl = std::make_shared<PlantedFunctional>(ctx.obj, base->kernel(), ref.v.coeffs, sp);
    red = std::make_shared<Reduction>(pl, ref, ro);
    planted = Json{{"form", to_string(sp.form)}, {"strength", sp.strength}, {"direction", dir}};
  }
  TaylorOptions to;
  to.j_max = option<int>(o, "j_max", to.j_max);
  to.r_max = option<double>(o, "r_max", to.r_max);
  to.noise_floor = option<double>(o, "noise_floor", to.noise_floor);
  to.seed = ctx.cfg.seed;
  const ReductionResult r = run_reduction(*red, to);
  Json body = to_json(r);
  body["planted"] = planted;
  if (option<bool>(o, "asp_gap", !planted.is_null())) {
    Eigen::VectorXd theta = Eigen::VectorXd::Unit(red->kernel_dim(), 0);
    if (!r.taylor.maximizers.empty()) theta = r.taylor.maximizers.front().coords.normalized();
    const int p = r.taylor.order > 0 ? r.taylor.order : 3;
    body["asp_gap"] = to_json(asp_gap_probe(*red, theta, p));
  }
  ctx.write_json("reduction.json", body);
  ctx.log << "order " << r.taylor.order << (r.taylor.integrable ? " (integrable)" : "") << ", gamma "
          << r.lojasiewicz.gamma << "\n";
  return kExitOk;
}

int cmd_distance(Context& ctx) {
  const Json& o = ctx.cfg.options;
  const std::string p = option<std::string>(o, "input", "");
  if (p.empty()) throw ConfigError("distance needs option 'input' (a field or bubble JSON file)");
  const Json j = read_json_file(p);
  BoundaryField v;
  Json input;
  if (j.contains("bubble")) {
    const Bubble b(bubble_from_json(j.at("bubble")));
    if (b.dim() != ctx.cfg.n) throw ConfigError("bubble in '" + p + "' has the wrong dimension");
    v = b.trace(std::max(ctx.cfg.L, b.resolving_degree()));
    input = Json{{"bubble", to_json(b.params())}, {"trace_degree", v.L}};
  } else if (j.contains("field")) {
    v = field_from_json(j.at("field"));
    input = Json{{"field", to_json(v)}};
  } else {
    throw ConfigError("'" + p + "' must contain 'field' or 'bubble'");
  }
  DistanceOptions dopt;
  dopt.seed = ctx.cfg.seed;
  dopt.multistarts = option<int>(o, "multistarts", dopt.multistarts);
  const NormTag tag = norm_tag_from_string(option<std::string>(o, "norm", "Hhalf"));
  const DistanceReport d = distance_to_family(v, tag, dopt);
  Json body = to_json(d);
  body["input"] = input;
  ctx.write_json("distance.json", body);
  ctx.log << "distance " << format_double(d.value) << "\n";
  return kExitOk;
}

int cmd_verify(Context& ctx) {
  AcceptanceOptions ao;
  ao.only = option<std::vector<int>>(ctx.cfg.options, "only", {});
  ao.scratch = (ctx.dir / "verify_scratch").string();
  ao.progress = &ctx.log;
  const std::vector<CriterionResult> rs = run_acceptance(ao);
  Json rows = Json::array();
  bool all = true;
  for (const auto& r : rs) {
    rows.push_back(Json{{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"details", r.details}});
    all = all && r.passed;
  }
  ctx.write_json("verify.json", Json{{"criteria", rows}, {"all_passed", all}});
  ctx.log << (all ? "all checks passed" : "some checks failed") << "\n";
  return all ? kExitOk : kExitAcceptance;
}

}  // namespace

Json RunConfig::canonical() const {
  return Json{{"command", command}, {"n", n}, {"L", L}, {"geometry", geometry}, {"options", options},
              {"seed", seed}};
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical().dump()); }

Json RunConfig::to_json() const {
  Json j = canonical();
  j["out"] = out;
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.command = option<std::string>(j, "command", c.command);
  c.n = option<int>(j, "n", c.n);
  c.L = option<int>(j, "L", c.L);
  if (j.contains("geometry")) c.geometry = j.at("geometry");
  if (j.contains("options")) c.options = j.at("options");
  c.seed = option<std::uint64_t>(j, "seed", c.seed);
  c.out = option<std::string>(j, "out", c.out);
  return c;
}

void RunConfig::validate() const {
  if (n != 3 && n != 4) throw ConfigError("n must be one of {3, 4}, got " + std::to_string(n));
  if (L < 1 || L > 24) throw ConfigError("L must lie in [1, 24], got " + std::to_string(L));
  if (!geometry.is_object()) throw ConfigError("geometry must be a JSON object");
  if (!options.is_object()) throw ConfigError("options must be a JSON object");
}

ConstraintState reference_state(const Objective& obj, const ModelGeometry& geom) {
  const ConstraintState c = normalize_p(obj, constant_field(obj));
  if (geom.is_flat()) return c;
  const FlowTrajectory t = minimize_Q(obj, c.v);
  if (!t.converged) throw NumericalError("reference minimization did not converge: " + t.status);
  return normalize_p(obj, t.final_point);
}

int run_command(const RunConfig& config, std::ostream& log) {
  try {
    config.validate();
    Context ctx(config, log);
    const std::string& c = config.command;
    if (c == "spectrum") return cmd_spectrum(ctx);
    if (c == "minimize") return cmd_minimize(ctx);
    if (c == "sweep") return cmd_sweep(ctx);
    if (c == "reduce") return cmd_reduce(ctx);
    if (c == "distance") return cmd_distance(ctx);
    if (c == "verify") return cmd_verify(ctx);
    throw ConfigError("unknown command '" + c + "'; expected spectrum, minimize, sweep, reduce, distance, verify");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    log << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace escobar
