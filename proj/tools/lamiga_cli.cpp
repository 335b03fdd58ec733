// Command-line driver for the tube benchmark: solve, recover, compare, sweep.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lamiga/harness.hpp"

using namespace lamiga;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string method;
  bool no_cache = false;
};

RunConfig make_config(const Options& o) {
  json doc = json::object();
  if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw ConfigError("cannot open config " + o.config);
    try {
      doc = json::parse(is);
    } catch (const json::exception& e) {
      throw ConfigError("config " + o.config + ": " + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!o.method.empty()) doc["method"] = o.method;
  if (!o.out.empty()) doc["out"] = o.out;
  if (o.no_cache) doc["cache"] = false;
  return parse_config(doc);
}

json point_summary(const PointResult& p) {
  json j = {{"axial_fraction", p.point.axial}, {"theta_fraction", p.point.theta}};
  if (p.errors) {
    for (auto [name, e] : {std::pair{"before", &p.errors->before}, std::pair{"after", &p.errors->after}})
      j[name] = {{"e13", 100.0 * (*e)[0].value}, {"e23", 100.0 * (*e)[1].value}, {"e33", 100.0 * (*e)[2].value}};
  }
  return j;
}

json summary(const Report& r) {
  json pts = json::array();
  for (const PointResult& p : r.points) pts.push_back(point_summary(p));
  return {{"S", r.config.S},
          {"method", to_string(r.config.method)},
          {"out", r.config.out_dir.string()},
          {"points", pts},
          {"timings_s", r.timings},
          {"warnings", r.warnings}};
}

void write_solution(const RunConfig& cfg, const Model& m) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream os(cfg.out_dir / "solution.json");
  if (!os) throw Error("io", "cannot write " + (cfg.out_dir / "solution.json").string());
  const CoeffMatrix& c = m.field.coeffs;
  json dirs = json::array();
  for (const KnotVector& kv : m.field.space.dirs) dirs.push_back({{"degree", kv.degree()}, {"knots", kv.knots()}});
  std::ostringstream patch;
  write_patch(patch, m.patch);
  os << json{{"config", to_json(cfg)},
             {"space", dirs},
             {"coeffs", std::vector<double>(c.data(), c.data() + c.size())},
             {"layout", "row-major, rows = control points, cols = u1 u2 u3"},
             {"patch", patch.str()},
             {"metadata", m.metadata},
             {"warnings", m.warnings},
             {"solve",
              {{"backend", m.info.backend},
               {"relative_residual", m.info.relative_residual},
               {"seconds", m.seconds}}}}
            .dump()
     << '\n';
}

int cmd_solve(const Options& o) {
  const RunConfig cfg = make_config(o);
  const Model m = solve_model(cfg);
  write_solution(cfg, m);
  std::cout << json{{"method", to_string(cfg.method)},
                    {"dofs", 3 * m.patch.space.num_basis()},
                    {"backend", m.info.backend},
                    {"relative_residual", m.info.relative_residual},
                    {"seconds", m.seconds},
                    {"out", (cfg.out_dir / "solution.json").string()},
                    {"warnings", m.warnings}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_recover(const Options& o) {
  RunConfig cfg = make_config(o);
  cfg.reference.reset();
  const Report rep = run(cfg);
  write_outputs(rep);
  std::cout << summary(rep).dump(2) << '\n';
  return 0;
}

int cmd_compare(const Options& o) {
  const RunConfig cfg = make_config(o);
  if (!cfg.reference) throw ConfigError("compare needs a reference specification");
  const Report rep = run(cfg);
  write_outputs(rep);
  std::cout << summary(rep).dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig base = make_config(o);
  if (!base.reference) throw ConfigError("sweep needs a reference specification");
  std::vector<Report> reports;
  json all = json::array();
  for (double S : base.sweep_S) {
    RunConfig cfg = base;
    cfg.S = S;
    std::ostringstream name;
    name << "S_" << S;
    cfg.out_dir = base.out_dir / name.str();
    if (cfg.cache_dir.empty()) cfg.cache_dir = base.out_dir / "cache";
    reports.push_back(run(cfg));
    write_outputs(reports.back());
    all.push_back(summary(reports.back()));
  }
  write_summary_csv(base.out_dir / "summary.csv", reports);
  std::cout << json{{"runs", all}, {"summary", (base.out_dir / "summary.csv").string()}}.dump(2) << '\n';
  return 0;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  ensure_blas_kernel(argv);
  CLI::App app{"Laminated tube benchmark: isogeometric solve, equilibrium stress recovery and comparison"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--method", o.method, "galerkin, collocation or layerwise")
        ->check(CLI::IsMember({"galerkin", "collocation", "layerwise"}));
    sub->add_flag("--no-cache", o.no_cache, "recompute the layerwise reference");
  };
  CLI::App* solve = app.add_subcommand("solve", "solve the primal problem and write solution.json");
  CLI::App* recover = app.add_subcommand("recover", "solve and recover stress profiles, no reference");
  CLI::App* compare = app.add_subcommand("compare", "solve, recover and compare with the layerwise reference");
  CLI::App* sweep = app.add_subcommand("sweep", "compare over the configured values of S");
  for (CLI::App* s : {solve, recover, compare, sweep}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what(), 2);
    return 2;
  }
  try {
    if (*solve) return cmd_solve(o);
    if (*recover) return cmd_recover(o);
    if (*compare) return cmd_compare(o);
    return cmd_sweep(o);
  } catch (const Error& e) {
    print_error(e.kind(), e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 1);
    return 1;
  }
}
