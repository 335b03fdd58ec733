#pragma once

// Benchmark orchestration for the pressurized laminated tube: configuration,
// primal solve, recovery at sample points, comparison with a cached layerwise
// reference, and report/CSV output.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lamiga/layerwise.hpp"
#include "lamiga/recovery.hpp"
#include "lamiga/sparse_solve.hpp"

namespace lamiga {

enum class Method { Galerkin, Collocation, Layerwise };

std::string to_string(Method m);
/// Throws ConfigError on an unknown name.
Method parse_method(const std::string& name);

struct ReferenceSpec {
  bool enabled = true;
  int p = 4, q = 4, r = 2;
  std::array<int, 2> counts{24, 24};
  int spans_per_ply = 1;
  bool overkill = false;  // p = q = 6, r = 4, 36 x 36; far beyond desk scale
};

/// In-plane sample location as fractions of L and of the quarter angle.
struct SamplePoint {
  double axial = 0.0;
  double theta = 0.0;
  bool operator==(const SamplePoint&) const = default;
};

struct RunConfig {
  Method method = Method::Galerkin;
  double S = 20.0;
  double sigma0 = -1.0;  // MPa
  Layup layup = cross_ply(11, 11.0, benchmark_material());
  std::array<int, 3> degrees{4, 4, 3};
  std::array<int, 3> counts{22, 22, 4};
  std::vector<SamplePoint> samples{{1.0 / 3.0, 1.0 / 3.0}};
  int samples_per_ply = 64;
  // A reference component whose maximum is below this fraction of
  // max(|sigma0|, largest out-of-plane reference maximum at the point) is
  // treated as zero; its error is then max |ref - x| / |sigma0| (absolute mode).
  double near_zero_fraction = 1e-3;
  BottomDerivativeMode bottom_mode = BottomDerivativeMode::FrameConsistent;
  std::optional<ReferenceSpec> reference = ReferenceSpec{};
  std::filesystem::path out_dir = "lamiga_out";
  std::filesystem::path cache_dir;  // empty: <out_dir>/cache
  bool use_cache = true;
  std::vector<double> sweep_S{20.0, 30.0, 40.0, 50.0};

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Benchmark setup: 11-ply cross-ply tube of 1 mm plies, sigma0 = -1 MPa, with the
/// discretization used for `m` (collocation: homogenized p = q = 6, r = 4,
/// 22 x 22 x 5; layerwise: p = q = 4, r = 2, 22 x 22).
RunConfig default_config(Method m);

/// Keys absent from the document keep the default of the chosen method.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Uniform fractions {0, 1/(n-1), ..., 1} crossed, axial index fastest.
/// Throws DomainError when n < 2.
std::vector<SamplePoint> sample_grid(int n_axial, int n_theta);

// ---------------------------------------------------------------------------
// Models

struct Model {
  Method method = Method::Galerkin;
  TubeDimensions dims;
  NurbsPatch patch;
  DisplacementField field;
  SolveInfo info;
  double seconds = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json metadata;  // discretization choices
};

/// Primal solve of the tube benchmark with the configured method.
Model solve_model(const RunConfig& cfg);

/// Hash of every input that determines the reference solution (S, sigma0,
/// layup, reference spec); hex string.
std::string reference_hash(const RunConfig& cfg);

/// Layerwise reference solve on the configured tube; throws ConfigError when
/// the configuration has no reference.
Model solve_reference(const RunConfig& cfg);

/// Writes the reference displacement coefficients and space; doubles are
/// stored in shortest round-trip form so reloading is bit-exact.
void store_reference(const std::filesystem::path& file, const std::string& hash, const Model& ref);
/// Reloads a stored reference for `cfg`; throws Error (kind "cache") when the
/// file is missing, corrupt, or was written for another configuration.
Model load_reference(const std::filesystem::path& file, const RunConfig& cfg);

/// Cached solve: reuses <cache_dir>/ref_<hash>.json when `cfg.use_cache`,
/// recomputing with a warning when the entry is unusable.
Model cached_reference(const RunConfig& cfg, std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Comparison

struct ComponentErrors {
  std::array<ErrorResult, 3> before;  // e13, e23, e33 from constitutive stresses
  std::array<ErrorResult, 3> after;   // from recovered stresses
};

/// Boundary values of the recovered profile normalized by |sigma0|, and the
/// ratios of the top shear values to the profile maxima. A shear profile below
/// the near-zero threshold is flagged; its ratio is then not meaningful.
struct BoundaryChecks {
  double top_s13_ratio = 0.0, top_s23_ratio = 0.0;
  bool s13_near_zero = false, s23_near_zero = false;
  double top_s33 = 0.0;
  double bottom_s33 = 0.0, bottom_s33_expected = 0.0;
};

struct PointResult {
  SamplePoint point;
  double xi1 = 0.0, xi2 = 0.0;
  Vec3 X_bottom = Vec3::Zero();
  bool interior = false;
  StressProfile profile;
  std::optional<ComponentErrors> errors;  // present when a reference is given
  std::vector<Mat3> reference_stress;     // local reference stress per sample
  BoundaryChecks checks;
  bool absolute_mode = false;  // some component was compared in absolute mode
};

/// Recovery at `pt`, with errors against `reference` when given.
PointResult evaluate_point(const RunConfig& cfg, const Model& model, const Model* reference, const SamplePoint& pt);

struct Report {
  RunConfig config;
  std::vector<PointResult> points;
  std::map<std::string, double> timings;  // seconds
  std::vector<std::string> warnings;
  nlohmann::json metadata;
  SolveInfo solve_info;
};

/// Solve, recover at all samples and compare with the (cached) reference.
/// `reference` overrides the cache when non-null.
Report run(const RunConfig& cfg, const Model* reference = nullptr);

nlohmann::json to_json(const Report& report);

/// Per-point CSV: x3_mm, s11, s22, s12, s13/s23/s33 constitutive and
/// recovered (normalized by |sigma0|), ply_index.
void write_profile_csv(const std::filesystem::path& file, const PointResult& pr, double sigma0);
/// Reference profile on the same x3 grid: x3_mm, s13, s23, s33, ply_index.
void write_reference_csv(const std::filesystem::path& file, const PointResult& pr, double sigma0);
/// Rows S, method, phase, e13, e23, e33 (percent) for the first sample point
/// of each report.
void write_summary_csv(const std::filesystem::path& file, const std::vector<Report>& reports);

/// Writes report.json, summary.csv and point_<k>.csv (+ point_<k>_reference.csv)
/// into cfg.out_dir.
void write_outputs(const Report& report);

}  // namespace lamiga
