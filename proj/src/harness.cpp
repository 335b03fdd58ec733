#include "lamiga/harness.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "lamiga/collocation.hpp"
#include "lamiga/quadrature.hpp"

namespace lamiga {

using nlohmann::json;

namespace {

constexpr const char* kReferenceFormat = "lamiga-reference 1";

struct CacheError : Error {
  explicit CacheError(const std::string& w) : Error("cache", w) {}
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

EngineeringConstants material_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("material must be an object of engineering constants");
  EngineeringConstants ec;
  ec.E1 = get_as<double>(j, "E1");
  ec.E2 = get_as<double>(j, "E2");
  ec.E3 = get_as<double>(j, "E3");
  ec.G23 = get_as<double>(j, "G23");
  ec.G13 = get_as<double>(j, "G13");
  ec.G12 = get_as<double>(j, "G12");
  ec.nu23 = get_as<double>(j, "nu23");
  ec.nu13 = get_as<double>(j, "nu13");
  ec.nu12 = get_as<double>(j, "nu12");
  return ec;
}

json material_to_json(const EngineeringConstants& ec) {
  return {{"E1", ec.E1},   {"E2", ec.E2},   {"E3", ec.E3},     {"G23", ec.G23},  {"G13", ec.G13},
          {"G12", ec.G12}, {"nu23", ec.nu23}, {"nu13", ec.nu13}, {"nu12", ec.nu12}};
}

EngineeringConstants resolve_material(const json& spec, const json& library) {
  if (spec.is_string()) {
    const std::string name = spec.get<std::string>();
    if (library.is_object() && library.contains(name)) return material_from_json(library.at(name));
    if (name == "benchmark") return benchmark_material();
    throw ConfigError("unknown material '" + name + "'");
  }
  return material_from_json(spec);
}

Layup layup_from_json(const json& j, const json& library) {
  if (!j.is_object()) throw ConfigError("layup must be an object");
  if (j.contains("cross_ply")) {
    const int n = get_as<int>(j, "cross_ply");
    if (n < 1) throw ConfigError("cross_ply needs at least one ply");
    const double t = j.contains("ply_thickness_mm") ? get_as<double>(j, "ply_thickness_mm") : 1.0;
    const EngineeringConstants ec = resolve_material(j.value("material", json("benchmark")), library);
    if (!(t > 0.0)) throw ConfigError("ply thickness must be positive");
    return cross_ply(n, t * n, ec);
  }
  if (!j.contains("plies") || !j.at("plies").is_array()) throw ConfigError("layup needs 'cross_ply' or 'plies'");
  Layup l;
  for (const json& pj : j.at("plies")) {
    Ply p;
    p.thickness = get_as<double>(pj, "thickness_mm");
    p.angle_deg = pj.value("angle_deg", 0.0);
    p.material = resolve_material(pj.value("material", json("benchmark")), library);
    l.plies.push_back(p);
  }
  return l;
}

template <std::size_t N>
std::array<int, N> int_array(const json& j, const char* key) {
  const auto v = get_as<std::vector<int>>(j, key);
  if (v.size() != N) throw ConfigError(std::string("config key '") + key + "' needs " + std::to_string(N) + " entries");
  std::array<int, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

std::string mode_name(BottomDerivativeMode m) {
  return m == BottomDerivativeMode::FrameConsistent ? "frame_consistent" : "zero";
}

ReferenceSpec effective_reference(const ReferenceSpec& r) {
  if (!r.overkill) return r;
  ReferenceSpec o = r;
  o.p = o.q = 6;
  o.r = 4;
  o.counts = {36, 36};
  return o;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json space_to_json(const TensorSpace& s) {
  json dirs = json::array();
  for (const KnotVector& kv : s.dirs) dirs.push_back({{"degree", kv.degree()}, {"knots", kv.knots()}});
  return dirs;
}

json info_to_json(const SolveInfo& i) {
  return {{"backend", i.backend}, {"relative_residual", i.relative_residual}, {"refinement_steps", i.refinement_steps}};
}

json error_triplet(const std::array<ErrorResult, 3>& e) {
  return {{"e13", 100.0 * e[0].value}, {"e23", 100.0 * e[1].value}, {"e33", 100.0 * e[2].value},
          {"absolute", {e[0].absolute, e[1].absolute, e[2].absolute}}};
}

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file);
  if (!os) throw Error("io", "cannot write " + file.string());
  os << std::setprecision(12);
  return os;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Galerkin: return "galerkin";
    case Method::Collocation: return "collocation";
    case Method::Layerwise: return "layerwise";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "galerkin") return Method::Galerkin;
  if (name == "collocation") return Method::Collocation;
  if (name == "layerwise") return Method::Layerwise;
  throw ConfigError("unknown method '" + name + "' (galerkin, collocation, layerwise)");
}

void RunConfig::validate() const {
  if (!(S > 0.0)) throw ConfigError("S must be positive");
  if (!std::isfinite(sigma0)) throw ConfigError("sigma0 must be finite");
  try {
    layup.validate();
  } catch (const MaterialError& e) {
    throw ConfigError(std::string("layup: ") + e.what());
  }
  for (int d = 0; d < 3; ++d) {
    if (degrees[d] < 1) throw ConfigError("degrees must be at least 1");
    if (counts[d] < degrees[d] + 1) throw ConfigError("control counts must be at least degree + 1");
  }
  if (degrees[0] < 3 || degrees[1] < 3) throw ConfigError("recovery needs in-plane degrees of at least 3");
  if (samples.empty()) throw ConfigError("at least one sample point is required");
  for (const SamplePoint& s : samples)
    if (!(s.axial >= 0.0 && s.axial <= 1.0 && s.theta >= 0.0 && s.theta <= 1.0))
      throw ConfigError("sample fractions must lie in [0, 1]");
  if (samples_per_ply < 2) throw ConfigError("samples_per_ply must be at least 2");
  if (!(near_zero_fraction >= 0.0 && near_zero_fraction < 1.0))
    throw ConfigError("near_zero_fraction must lie in [0, 1)");
  if (reference) {
    const ReferenceSpec r = effective_reference(*reference);
    if (r.r < 1 || r.p < 3 || r.q < 3) throw ConfigError("reference degrees must be p, q >= 3 and r >= 1");
    if (r.counts[0] < r.p + 1 || r.counts[1] < r.q + 1) throw ConfigError("reference counts must be at least degree + 1");
    if (r.spans_per_ply < 1) throw ConfigError("reference spans_per_ply must be at least 1");
  }
  for (double s : sweep_S)
    if (!(s > 0.0)) throw ConfigError("sweep values of S must be positive");
}

RunConfig default_config(Method m) {
  RunConfig c;
  c.method = m;
  c.layup = cross_ply(11, 11.0, benchmark_material());
  if (m == Method::Collocation) {
    c.degrees = {6, 6, 4};
    c.counts = {22, 22, 5};
  } else if (m == Method::Layerwise) {
    c.degrees = {4, 4, 2};
    c.counts = {22, 22, 3};
  }
  return c;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c = default_config(doc.contains("method") ? parse_method(get_as<std::string>(doc, "method"))
                                                      : Method::Galerkin);
  const json library = doc.value("materials", json::object());
  if (doc.contains("S")) c.S = get_as<double>(doc, "S");
  if (doc.contains("sigma0_MPa")) c.sigma0 = get_as<double>(doc, "sigma0_MPa");
  if (doc.contains("layup")) c.layup = layup_from_json(doc.at("layup"), library);
  if (doc.contains("degrees")) c.degrees = int_array<3>(doc, "degrees");
  if (doc.contains("counts")) c.counts = int_array<3>(doc, "counts");
  if (doc.contains("samples") && doc.contains("sample_grid"))
    throw ConfigError("give either 'samples' or 'sample_grid'");
  if (doc.contains("samples")) {
    c.samples.clear();
    for (const auto& s : get_as<std::vector<std::vector<double>>>(doc, "samples")) {
      if (s.size() != 2) throw ConfigError("each sample is [axial_fraction, theta_fraction]");
      c.samples.push_back({s[0], s[1]});
    }
  }
  if (doc.contains("sample_grid")) {
    const auto g = int_array<2>(doc, "sample_grid");
    if (g[0] < 2 || g[1] < 2) throw ConfigError("sample_grid needs at least 2 points per direction");
    c.samples = sample_grid(g[0], g[1]);
  }
  if (doc.contains("samples_per_ply")) c.samples_per_ply = get_as<int>(doc, "samples_per_ply");
  if (doc.contains("near_zero_fraction")) c.near_zero_fraction = get_as<double>(doc, "near_zero_fraction");
  if (doc.contains("bottom_mode")) {
    const std::string m = get_as<std::string>(doc, "bottom_mode");
    if (m == "frame_consistent") c.bottom_mode = BottomDerivativeMode::FrameConsistent;
    else if (m == "zero") c.bottom_mode = BottomDerivativeMode::Zero;
    else throw ConfigError("bottom_mode must be 'frame_consistent' or 'zero'");
  }
  if (doc.contains("reference")) {
    const json& r = doc.at("reference");
    if (r.is_null() || (r.is_boolean() && !r.get<bool>())) {
      c.reference.reset();
    } else if (r.is_object()) {
      ReferenceSpec rs;
      if (r.contains("degrees")) {
        const auto d = int_array<3>(r, "degrees");
        rs.p = d[0];
        rs.q = d[1];
        rs.r = d[2];
      }
      if (r.contains("counts")) rs.counts = int_array<2>(r, "counts");
      if (r.contains("spans_per_ply")) rs.spans_per_ply = get_as<int>(r, "spans_per_ply");
      if (r.contains("overkill")) rs.overkill = get_as<bool>(r, "overkill");
      c.reference = rs;
    } else if (!r.is_boolean()) {
      throw ConfigError("reference must be an object, true, false or null");
    }
  }
  if (doc.contains("out")) c.out_dir = get_as<std::string>(doc, "out");
  if (doc.contains("cache_dir")) c.cache_dir = get_as<std::string>(doc, "cache_dir");
  if (doc.contains("cache")) c.use_cache = get_as<bool>(doc, "cache");
  if (doc.contains("sweep_S")) c.sweep_S = get_as<std::vector<double>>(doc, "sweep_S");
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json plies = json::array();
  for (const Ply& p : c.layup.plies)
    plies.push_back({{"thickness_mm", p.thickness}, {"angle_deg", p.angle_deg}, {"material", material_to_json(p.material)}});
  json samples = json::array();
  for (const SamplePoint& s : c.samples) samples.push_back({s.axial, s.theta});
  json j = {{"method", to_string(c.method)},
            {"S", c.S},
            {"sigma0_MPa", c.sigma0},
            {"layup", {{"plies", plies}}},
            {"degrees", c.degrees},
            {"counts", c.counts},
            {"samples", samples},
            {"samples_per_ply", c.samples_per_ply},
            {"near_zero_fraction", c.near_zero_fraction},
            {"bottom_mode", mode_name(c.bottom_mode)},
            {"out", c.out_dir.string()},
            {"cache", c.use_cache},
            {"sweep_S", c.sweep_S}};
  if (!c.cache_dir.empty()) j["cache_dir"] = c.cache_dir.string();
  if (c.reference) {
    const ReferenceSpec& r = *c.reference;
    j["reference"] = {{"degrees", {r.p, r.q, r.r}},
                      {"counts", r.counts},
                      {"spans_per_ply", r.spans_per_ply},
                      {"overkill", r.overkill}};
  } else {
    j["reference"] = nullptr;
  }
  return j;
}

std::vector<SamplePoint> sample_grid(int n_axial, int n_theta) {
  if (n_axial < 2 || n_theta < 2) throw DomainError("sample_grid: need at least 2 points per direction");
  std::vector<SamplePoint> pts;
  for (int j = 0; j < n_theta; ++j)
    for (int i = 0; i < n_axial; ++i)
      pts.push_back({static_cast<double>(i) / (n_axial - 1), static_cast<double>(j) / (n_theta - 1)});
  return pts;
}

// ---------------------------------------------------------------------------

Model solve_model(const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Model m;
  m.method = cfg.method;
  m.dims = tube_dimensions(cfg.S, cfg.layup.total_thickness());
  const NurbsPatch base = build_quarter_cylinder(m.dims);
  m.metadata["thickness_mm"] = m.dims.h;
  m.metadata["length_mm"] = m.dims.L;
  m.metadata["mean_radius_mm"] = m.dims.R;
  try {
    if (cfg.method == Method::Layerwise) {
      const auto& d = cfg.degrees;
      const LayerwiseSpace lw = build_layerwise_space(cfg.layup, d[0], d[1], d[2], {cfg.counts[0], cfg.counts[1]});
      LayerwiseSolution s = solve_layerwise_tube(base, lw, cfg.layup, cfg.sigma0, m.dims.L);
      m.patch = std::move(s.patch);
      m.field = std::move(s.solution.field);
      m.info = s.solution.info;
      m.metadata["thickness_knots"] = "ply interfaces repeated r times (C0), open ends";
      m.metadata["thickness_control_points"] = lw.thickness_count;
      m.metadata["ignored_thickness_count"] = cfg.counts[2];
    } else {
      m.patch = base.refined(cfg.counts, cfg.degrees);
      m.metadata["thickness_knots"] = "open uniform, independent of ply interfaces";
      m.metadata["thickness_control_points"] = cfg.counts[2];
      if (cfg.method == Method::Galerkin) {
        const bool single_span = cfg.counts[2] == cfg.degrees[2] + 1;
        const QuadratureRule rule = single_span ? layerwise_rule(m.patch.space, cfg.layup)
                                                : ply_split_rule(m.patch.space, cfg.layup, 0, cfg.degrees[2] + 1);
        LinearSystem sys = assemble(m.patch, cfg.layup.ply_stiffnesses(), rule);
        sys.f = assemble_tube_load(m.patch, cfg.sigma0, m.dims.L);
        GalerkinSolution s = solve(sys, tube_bcs(m.patch.space), m.patch.space);
        m.field = std::move(s.field);
        m.info = s.info;
        m.metadata["stiffness"] = "ply-wise, Gauss points split at ply interfaces";
      } else {
        const Homogenized hz = homogenize(cfg.layup);
        for (const std::string& w : hz.warnings) m.warnings.push_back(w);
        CollocationSolution s = solve_collocation(m.patch, hz.C, tube_collocation_bcs(cfg.sigma0, m.dims.L));
        m.field = std::move(s.field);
        m.info = s.info;
        m.metadata["stiffness"] = "homogenized equivalent single layer";
        m.metadata["interior_residual"] = s.interior_residual;
        m.metadata["collocation_points"] = "Greville";
      }
    }
  } catch (const Error& e) {
    throw SolverError(to_string(cfg.method) + " solve failed (" + e.kind() + "): " + e.what());
  }
  m.metadata["knots_inplane"] = "open uniform";
  m.metadata["degrees"] = m.patch.space.degrees();
  m.metadata["counts"] = m.patch.space.counts();
  m.metadata["dofs"] = 3 * m.patch.space.num_basis();
  m.seconds = seconds_since(t0);
  return m;
}

std::string reference_hash(const RunConfig& cfg) {
  json key = to_json(cfg);
  json r = cfg.reference ? key.at("reference") : json(nullptr);
  if (cfg.reference) {
    const ReferenceSpec e = effective_reference(*cfg.reference);
    r = {{"degrees", {e.p, e.q, e.r}}, {"counts", e.counts}, {"spans_per_ply", e.spans_per_ply}};
  }
  const json k = {{"format", kReferenceFormat},
                  {"S", cfg.S},
                  {"sigma0_MPa", cfg.sigma0},
                  {"layup", key.at("layup")},
                  {"reference", r}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(k.dump())));
  return buf;
}

namespace {

struct ReferenceSetup {
  TubeDimensions dims;
  NurbsPatch base;
  LayerwiseSpace lw;
};

ReferenceSetup reference_setup(const RunConfig& cfg) {
  if (!cfg.reference) throw ConfigError("no reference configured");
  const ReferenceSpec r = effective_reference(*cfg.reference);
  ReferenceSetup s;
  s.dims = tube_dimensions(cfg.S, cfg.layup.total_thickness());
  s.base = build_quarter_cylinder(s.dims);
  s.lw = build_layerwise_space(cfg.layup, r.p, r.q, r.r, r.counts, r.spans_per_ply);
  return s;
}

void reference_metadata(Model& m, const ReferenceSetup& s, const RunConfig& cfg) {
  const ReferenceSpec r = effective_reference(*cfg.reference);
  m.metadata["degrees"] = {r.p, r.q, r.r};
  m.metadata["counts"] = m.patch.space.counts();
  m.metadata["thickness_knots"] = "ply interfaces repeated r times (C0), open ends";
  m.metadata["interface_sharing"] = "one control plane shared per interface: (r + spans_per_ply - 1) * plies + 1";
  m.metadata["thickness_control_points"] = s.lw.thickness_count;
  m.metadata["spans_per_ply"] = r.spans_per_ply;
  m.metadata["overkill"] = r.overkill;
  m.metadata["hash"] = reference_hash(cfg);
}

}  // namespace

Model solve_reference(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ReferenceSetup s = reference_setup(cfg);
  Model m;
  m.method = Method::Layerwise;
  m.dims = s.dims;
  if (cfg.reference->overkill)
    m.warnings.push_back("overkill reference requested: expect very long factorization times and large memory use");
  try {
    LayerwiseSolution sol = solve_layerwise_tube(s.base, s.lw, cfg.layup, cfg.sigma0, s.dims.L);
    m.patch = std::move(sol.patch);
    m.field = std::move(sol.solution.field);
    m.info = sol.solution.info;
  } catch (const Error& e) {
    throw SolverError(std::string("layerwise reference solve failed (") + e.kind() + "): " + e.what());
  }
  reference_metadata(m, s, cfg);
  m.seconds = seconds_since(t0);
  return m;
}

void store_reference(const std::filesystem::path& file, const std::string& hash, const Model& ref) {
  const CoeffMatrix& c = ref.field.coeffs;
  std::vector<double> flat(c.data(), c.data() + c.size());
  const json j = {{"format", kReferenceFormat},   {"hash", hash},
                  {"space", space_to_json(ref.field.space)}, {"rows", c.rows()},
                  {"cols", c.cols()},            {"coeffs", flat},
                  {"solve", info_to_json(ref.info)}};
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error("io", "cannot write " + tmp.string());
    os << j.dump();
    if (!os) throw Error("io", "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

Model load_reference(const std::filesystem::path& file, const RunConfig& cfg) {
  std::ifstream is(file);
  if (!is) throw CacheError("no cache entry " + file.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw CacheError("corrupt cache entry " + file.string() + ": " + e.what());
  }
  const ReferenceSetup s = reference_setup(cfg);
  Model m;
  m.method = Method::Layerwise;
  m.dims = s.dims;
  try {
    if (j.at("format").get<std::string>() != kReferenceFormat) throw CacheError("unknown cache format");
    if (j.at("hash").get<std::string>() != reference_hash(cfg)) throw CacheError("cache entry is for another configuration");
    if (j.at("space") != space_to_json(s.lw.space)) throw CacheError("cache entry space differs from the configuration");
    const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
    const auto flat = j.at("coeffs").get<std::vector<double>>();
    if (rows != s.lw.space.num_basis() || cols != 3 || static_cast<Eigen::Index>(flat.size()) != rows * cols)
      throw CacheError("cache entry has the wrong coefficient count");
    m.field.space = s.lw.space;
    m.field.coeffs = Eigen::Map<const CoeffMatrix>(flat.data(), rows, cols);
    const json& si = j.at("solve");
    m.info.backend = si.at("backend").get<std::string>();
    m.info.relative_residual = si.at("relative_residual").get<double>();
    m.info.refinement_steps = si.at("refinement_steps").get<int>();
  } catch (const json::exception& e) {
    throw CacheError("corrupt cache entry " + file.string() + ": " + e.what());
  }
  for (Eigen::Index i = 0; i < m.field.coeffs.size(); ++i)
    if (!std::isfinite(m.field.coeffs.data()[i])) throw CacheError("cache entry holds non-finite coefficients");
  m.patch = s.base.embedded(s.lw.space);
  reference_metadata(m, s, cfg);
  m.metadata["cache"] = file.string();
  return m;
}

Model cached_reference(const RunConfig& cfg, std::vector<std::string>* warnings) {
  if (!cfg.use_cache) return solve_reference(cfg);
  const std::filesystem::path dir = cfg.cache_dir.empty() ? cfg.out_dir / "cache" : cfg.cache_dir;
  const std::filesystem::path file = dir / ("ref_" + reference_hash(cfg) + ".json");
  if (std::filesystem::exists(file)) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      Model m = load_reference(file, cfg);
      m.seconds = seconds_since(t0);
      return m;
    } catch (const Error& e) {
      if (warnings) warnings->push_back(std::string("reference cache unusable, recomputing: ") + e.what());
    }
  }
  Model m = solve_reference(cfg);
  store_reference(file, reference_hash(cfg), m);
  m.metadata["cache"] = file.string();
  return m;
}

// ---------------------------------------------------------------------------

PointResult evaluate_point(const RunConfig& cfg, const Model& model, const Model* reference, const SamplePoint& pt) {
  PointResult pr;
  pr.point = pt;
  pr.interior = pt.axial > 0.0 && pt.axial < 1.0 && pt.theta > 0.0 && pt.theta < 1.0;
  pr.xi1 = pt.axial;
  pr.xi2 = tube_xi2_for_theta(model.patch, pt.theta * 0.5 * std::numbers::pi);
  pr.X_bottom = map_eval(model.patch, {pr.xi1, pr.xi2, 0.0}, 0).X();
  BottomTraction bt;
  bt.s33 = tube_pressure(pr.X_bottom, cfg.sigma0, model.dims.L);
  RecoveryOptions opt;
  opt.samples_per_ply = cfg.samples_per_ply;
  opt.bottom_mode = cfg.bottom_mode;
  pr.profile = recover(model.patch, model.field, cfg.layup, pr.xi1, pr.xi2, bt, opt);
  const auto& smp = pr.profile.samples;

  const double s0 = std::abs(cfg.sigma0);
  double max13 = 0.0, max23 = 0.0, max33 = 0.0;
  for (const ProfileSample& s : smp) {
    max13 = std::max(max13, std::abs(s.s13));
    max23 = std::max(max23, std::abs(s.s23));
    max33 = std::max(max33, std::abs(s.s33));
  }
  const double level = cfg.near_zero_fraction * std::max({s0, max13, max23, max33});
  pr.checks.s13_near_zero = max13 < level;
  pr.checks.s23_near_zero = max23 < level;
  pr.checks.top_s13_ratio = max13 > 0.0 ? std::abs(smp.back().s13) / max13 : 0.0;
  pr.checks.top_s23_ratio = max23 > 0.0 ? std::abs(smp.back().s23) / max23 : 0.0;
  pr.checks.top_s33 = smp.back().s33 / s0;
  pr.checks.bottom_s33 = smp.front().s33 / s0;
  pr.checks.bottom_s33_expected = bt.s33 / s0;

  if (reference) {
    std::array<std::vector<double>, 3> ref, before, after;
    for (const ProfileSample& s : smp) {
      const Mat3 R = layerwise_local_stress(reference->patch, reference->field, cfg.layup, s.ply,
                                            {pr.xi1, pr.xi2, s.xi3}, pr.profile.e);
      pr.reference_stress.push_back(R);
      for (int c = 0; c < 3; ++c) {
        ref[c].push_back(R(c, 2));
        before[c].push_back(s.jet.s(c, 2));
      }
      after[0].push_back(s.s13);
      after[1].push_back(s.s23);
      after[2].push_back(s.s33);
    }
    auto maxabs = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    };
    double scale = s0;
    for (int c = 0; c < 3; ++c) scale = std::max(scale, maxabs(ref[c]));
    auto compare = [&](const std::vector<double>& r, const std::vector<double>& x) {
      if (maxabs(r) >= cfg.near_zero_fraction * scale) return relative_max_error(r, x);
      double d = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) d = std::max(d, std::abs(r[i] - x[i]));
      return ErrorResult{d / s0, true};
    };
    ComponentErrors ce;
    for (int c = 0; c < 3; ++c) {
      ce.before[c] = compare(ref[c], before[c]);
      ce.after[c] = compare(ref[c], after[c]);
      pr.absolute_mode = pr.absolute_mode || ce.before[c].absolute || ce.after[c].absolute;
    }
    pr.errors = ce;
  }
  return pr;
}

Report run(const RunConfig& cfg, const Model* reference) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.config = cfg;
  const Model model = solve_model(cfg);
  rep.timings["solve"] = model.seconds;
  rep.solve_info = model.info;
  rep.warnings = model.warnings;
  rep.metadata["model"] = model.metadata;
  std::optional<Model> cached;
  if (!reference && cfg.reference) {
    cached = cached_reference(cfg, &rep.warnings);
    reference = &*cached;
  }
  if (reference) {
    rep.timings["reference"] = reference->seconds;
    rep.metadata["reference"] = reference->metadata;
    rep.metadata["reference"]["solve"] = info_to_json(reference->info);
    for (const std::string& w : reference->warnings) rep.warnings.push_back(w);
  }
  const auto t1 = std::chrono::steady_clock::now();
  for (const SamplePoint& p : cfg.samples) rep.points.push_back(evaluate_point(cfg, model, reference, p));
  rep.timings["recovery"] = seconds_since(t1);
  rep.timings["total"] = seconds_since(t0);
  rep.metadata["recovery"] = {{"frame", "frozen at the bottom point of each thickness line"},
                              {"x3", "projection of X - X_bottom on the frozen normal"},
                              {"interfaces", "one-sided evaluation, both sides sampled"},
                              {"integration", "cumulative trapezoid"},
                              {"bottom_mode", mode_name(cfg.bottom_mode)}};
  return rep;
}

json to_json(const Report& r) {
  json pts = json::array();
  for (const PointResult& p : r.points) {
    json j = {{"axial_fraction", p.point.axial},
              {"theta_fraction", p.point.theta},
              {"xi1", p.xi1},
              {"xi2", p.xi2},
              {"X_bottom", {p.X_bottom(0), p.X_bottom(1), p.X_bottom(2)}},
              {"interior", p.interior},
              {"absolute_mode", p.absolute_mode},
              {"boundary",
               {{"top_s13_over_max", p.checks.top_s13_ratio},
                {"top_s23_over_max", p.checks.top_s23_ratio},
                {"s13_near_zero", p.checks.s13_near_zero},
                {"s23_near_zero", p.checks.s23_near_zero},
                {"top_s33", p.checks.top_s33},
                {"bottom_s33", p.checks.bottom_s33},
                {"bottom_s33_expected", p.checks.bottom_s33_expected}}}};
    if (p.errors) {
      j["before"] = error_triplet(p.errors->before);
      j["after"] = error_triplet(p.errors->after);
    }
    pts.push_back(j);
  }
  return {{"config", to_json(r.config)},   {"points", pts},
          {"timings_s", r.timings},        {"warnings", r.warnings},
          {"metadata", r.metadata},        {"solve", info_to_json(r.solve_info)},
          {"error_units", "percent of max |reference|; absolute-mode components in percent of |sigma0|"}};
}

void write_profile_csv(const std::filesystem::path& file, const PointResult& pr, double sigma0) {
  std::ofstream os = open_out(file);
  const double s = std::abs(sigma0);
  os << "x3_mm,s11,s22,s12,s13_constitutive,s23_constitutive,s33_constitutive,s13_recovered,s23_recovered,"
        "s33_recovered,ply_index\n";
  for (const ProfileSample& p : pr.profile.samples) {
    const Mat3& c = p.jet.s;
    os << p.x3 << ',' << c(0, 0) / s << ',' << c(1, 1) / s << ',' << c(0, 1) / s << ',' << c(0, 2) / s << ','
       << c(1, 2) / s << ',' << c(2, 2) / s << ',' << p.s13 / s << ',' << p.s23 / s << ',' << p.s33 / s << ','
       << p.ply << '\n';
  }
}

void write_reference_csv(const std::filesystem::path& file, const PointResult& pr, double sigma0) {
  if (pr.reference_stress.size() != pr.profile.samples.size())
    throw DomainError("write_reference_csv: point has no reference profile");
  std::ofstream os = open_out(file);
  const double s = std::abs(sigma0);
  os << "x3_mm,s11,s22,s12,s13,s23,s33,ply_index\n";
  for (std::size_t i = 0; i < pr.reference_stress.size(); ++i) {
    const Mat3& R = pr.reference_stress[i];
    os << pr.profile.samples[i].x3 << ',' << R(0, 0) / s << ',' << R(1, 1) / s << ',' << R(0, 1) / s << ','
       << R(0, 2) / s << ',' << R(1, 2) / s << ',' << R(2, 2) / s << ',' << pr.profile.samples[i].ply << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& file, const std::vector<Report>& reports) {
  std::ofstream os = open_out(file);
  os << "S,method,phase,e13,e23,e33\n";
  for (const Report& r : reports) {
    if (r.points.empty() || !r.points.front().errors) continue;
    const ComponentErrors& e = *r.points.front().errors;
    for (auto [phase, v] : {std::pair{"before", &e.before}, std::pair{"after", &e.after}})
      os << r.config.S << ',' << to_string(r.config.method) << ',' << phase << ',' << 100.0 * (*v)[0].value << ','
         << 100.0 * (*v)[1].value << ',' << 100.0 * (*v)[2].value << '\n';
  }
}

void write_outputs(const Report& report) {
  const std::filesystem::path& dir = report.config.out_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream os = open_out(dir / "report.json");
    os << to_json(report).dump(2) << '\n';
  }
  write_summary_csv(dir / "summary.csv", {report});
  for (std::size_t k = 0; k < report.points.size(); ++k) {
    const std::string stem = "point_" + std::to_string(k);
    write_profile_csv(dir / (stem + ".csv"), report.points[k], report.config.sigma0);
    if (!report.points[k].reference_stress.empty())
      write_reference_csv(dir / (stem + "_reference.csv"), report.points[k], report.config.sigma0);
  }
}

}  // namespace lamiga
