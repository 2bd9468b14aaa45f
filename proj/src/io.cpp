#include "escobar/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace escobar {

namespace {

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json mat(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

// Non-finite values are not representable in JSON.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json to_json(const BoundaryField& f) { return Json{{"n", f.n}, {"L", f.L}, {"coeffs", vec(f.coeffs)}}; }

BoundaryField field_from_json(const Json& j) {
  BoundaryField f;
  f.n = required<int>(j, "n");
  f.L = required<int>(j, "L");
  if (f.n != 3 && f.n != 4) throw ConfigError("n must be one of {3, 4}");
  if (f.L < 0) throw ConfigError("L must be nonnegative");
  f.coeffs = vec_from(j.at("coeffs"), "coeffs");
  check_compatible(build_basis(f.n, f.L), f);
  return f;
}

Json geometry_to_json(const ModelGeometry& g) {
  Json j{{"n", g.dim()}, {"kind", g.is_flat() ? "flat" : "conformal"}};
  if (const BoundaryField* w = g.conformal_factor()) j["w_coeffs"] = to_json(*w);
  return j;
}

ModelGeometry geometry_from_json(const Json& j) {
  const int n = required<int>(j, "n");
  const std::string kind = j.value("kind", std::string("flat"));
  if (kind == "flat") return flat_ball(n);
  if (kind == "conformal") {
    if (!j.contains("w_coeffs")) throw ConfigError("conformal geometry needs w_coeffs");
    return conformal_ball(n, field_from_json(j.at("w_coeffs")));
  }
  throw ConfigError("geometry kind must be 'flat' or 'conformal', got '" + kind + "'");
}

Json to_json(const BubbleParams& b) {
  Json z = Json::array();
  for (double c : b.zeta) z.push_back(c);
  return Json{{"amplitude", b.amplitude}, {"zeta", z}};
}

BubbleParams bubble_from_json(const Json& j) {
  BubbleParams b;
  b.amplitude = required<double>(j, "amplitude");
  b.zeta = required<std::vector<double>>(j, "zeta");
  b.validate();
  return b;
}

Json to_json(const HessianData& h, bool include_matrix) {
  Json j{{"eigenvalues", vec(h.eigenvalues)}, {"residual", h.residual}};
  if (include_matrix) j["matrix"] = mat(h.matrix);
  return j;
}

Json to_json(const DistanceReport& d) {
  return Json{{"value", d.value},
              {"argmin", to_json(d.argmin)},
              {"tag", to_string(d.tag)},
              {"iterations", d.iterations},
              {"multistart_count", d.multistart_count},
              {"converged", d.converged},
              {"diagnostics", d.diagnostics}};
}

Json to_json(const TaylorResult& t) {
  Json terms = Json::array();
  for (std::size_t d = 0; d < t.terms.size(); ++d) {
    Json deg = Json::array();
    for (const auto& m : t.terms[d]) deg.push_back(Json{{"exponents", m.exponents}, {"coefficient", m.coefficient}});
    terms.push_back(deg);
  }
  Json maxs = Json::array();
  for (const auto& m : t.maximizers)
    maxs.push_back(Json{{"coords", vec(m.coords)}, {"field", vec(m.field)}, {"value", m.value}});
  Json j{{"order", t.order},
         {"integrable", t.integrable},
         {"degree_norms", t.degree_norms},
         {"terms", terms},
         {"condition_number", num(t.condition_number)},
         {"fit_residual", t.fit_residual},
         {"asp", t.asp},
         {"asp_max", t.asp_max},
         {"maximizers", maxs}};
  j["verdict"] = t.integrable ? "integrable (no nonzero q_j up to degree " + std::to_string(t.degree_norms.size() - 1) + ")"
                              : std::string(t.asp ? "AS_p holds" : "AS_p fails") + " at order " + std::to_string(t.order);
  return j;
}

Json to_json(const ReductionResult& r) {
  Json kernel = Json::array();
  for (const auto& k : r.kernel) kernel.push_back(to_json(k));
  Json samples = Json::array();
  for (const auto& s : r.samples)
    samples.push_back(Json{{"alpha", vec(s.alpha)},
                           {"ray", s.ray},
                           {"radius", s.radius},
                           {"q", s.q},
                           {"residual", s.residual},
                           {"f_norm", s.f_norm}});
  return Json{{"n", r.n},
              {"L", r.L},
              {"l0", r.l0},
              {"critical_value", r.critical_value},
              {"kernel", kernel},
              {"samples", samples},
              {"taylor", to_json(r.taylor)},
              {"lojasiewicz", Json{{"gamma", r.lojasiewicz.gamma},
                                   {"alpha_hat", r.lojasiewicz.alpha_hat},
                                   {"rays_used", r.lojasiewicz.rays_used},
                                   {"note", r.lojasiewicz.note}}}};
}

Json to_json(const FlowTrajectory& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json row{{"iteration", s.iteration}, {"q", s.q}, {"grad_norm", s.grad_norm}, {"step", s.step}};
    row["distance"] = s.distance ? Json(*s.distance) : Json(nullptr);
    steps.push_back(row);
  }
  return Json{{"steps", steps},
              {"converged", t.converged},
              {"status", t.status},
              {"final_point", to_json(t.final_point)},
              {"final_q", t.final_q},
              {"final_grad_norm", t.final_grad_norm},
              {"final_distance", t.final_distance},
              {"positivity_rejections", t.positivity_rejections}};
}

Json to_json(const PowerFit& f) {
  return Json{{"slope", num(f.slope)}, {"gamma_hat", num(std::max(0.0, f.slope - 2.0))},
              {"intercept", num(f.intercept)}, {"C_hat", num(f.c_hat)}, {"r2", num(f.r2)}, {"used", f.used}};
}

Json to_json(const AspGapResult& a) {
  Json rows = Json::array();
  for (const auto& r : a.rows)
    rows.push_back(Json{{"t", r.t}, {"deficit", r.deficit}, {"distance", r.distance}, {"ratios", r.ratios}});
  Json mono = Json::array();
  for (bool b : a.monotone) mono.push_back(b);
  return Json{{"p", a.p},
              {"alphas", a.alphas},
              {"rows", rows},
              {"integrable", a.integrable},
              {"deficit_slope", a.deficit_slope},
              {"min_factor", a.min_factor},
              {"monotone", mono}};
}

Json to_json(const CoercivityReport& c) {
  auto rows = [](const std::vector<CoercivitySample>& v) {
    Json a = Json::array();
    for (const auto& s : v)
      a.push_back(Json{{"eta_norm", s.eta_norm}, {"deficit", s.deficit}, {"distance", s.distance},
                       {"ratio", num(s.ratio)}, {"predicted", s.predicted}});
    return a;
  };
  return Json{{"samples", rows(c.samples)},
              {"small", rows(c.small)},
              {"C1", num(c.c1)},
              {"C1_small", num(c.c1_small)},
              {"spectral_floor", num(c.spectral_floor)},
              {"max_direction_error", c.max_direction_error}};
}

const char* const kSweepCsvHeader =
    "index,seed,descriptor,epsilon,shift,deficit,d_hhalf,d_h1,ratio_hhalf,ratio_h1,distance_ok";
const char* const kInteriorCsvHeader =
    "index,seed,descriptor,epsilon,shift,interior_size,deficit,d_hhalf,d_h1,ratio_h1,q_composite,q_boundary,"
    "interior_term,decomposition_error,chain_ratio,distance_ok";

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records, const std::string& preamble) {
  os << preamble << kSweepCsvHeader << "\n";
  for (const auto& r : records) {
    os << r.index << "," << r.seed << "," << r.descriptor << "," << format_double(r.epsilon) << ","
       << format_double(r.shift) << "," << format_double(r.deficit) << "," << format_double(r.d_hhalf) << ","
       << format_double(r.d_h1) << "," << format_double(r.ratio_hhalf) << "," << format_double(r.ratio_h1) << ","
       << (r.distance_ok ? 1 : 0) << "\n";
  }
}

void write_interior_csv(std::ostream& os, const std::vector<InteriorRecord>& records, const std::string& preamble) {
  os << preamble << kInteriorCsvHeader << "\n";
  for (const auto& rec : records) {
    const SweepRecord& r = rec.base;
    os << r.index << "," << r.seed << "," << r.descriptor << "," << format_double(r.epsilon) << ","
       << format_double(r.shift) << "," << format_double(r.interior_size) << "," << format_double(r.deficit) << ","
       << format_double(r.d_hhalf) << "," << format_double(r.d_h1) << "," << format_double(r.ratio_h1) << ","
       << format_double(rec.q_composite) << "," << format_double(rec.q_boundary) << ","
       << format_double(rec.interior_term) << "," << format_double(rec.decomposition_error) << ","
       << format_double(rec.chain_ratio) << "," << (r.distance_ok ? 1 : 0) << "\n";
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace escobar
