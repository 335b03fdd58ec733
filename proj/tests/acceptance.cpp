// Acceptance suite: one PASS/FAIL line per criterion with the tolerances and
// runtime limits fixed below. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lamiga/collocation.hpp"
#include "lamiga/harness.hpp"
#include "lamiga/layerwise.hpp"
#include "lamiga/quadrature.hpp"
#include "support/slab_oracle.hpp"

using namespace lamiga;

namespace {

constexpr double kPi = std::numbers::pi;

// Tolerances.
constexpr double kC1Identity = 1e-12;  // PU absolute, derivative sums relative to sum |N^(k)|
constexpr double kC1Fd = 1e-6;
constexpr double kC1Time = 10.0;
constexpr int kC1Points = 10000;
constexpr double kC2Radius = 1e-12;  // relative to the exact radius
constexpr double kC2Time = 5.0;
constexpr int kC2Points = 1000;
constexpr double kC3Third = 1e-5;
constexpr double kC3Frame = 1e-6;
constexpr double kC3Time = 60.0;
constexpr int kC3Points = 100;
constexpr double kC4Patch = 1e-10;
constexpr double kC4OrderMargin = 0.5;
constexpr double kC4Time = 300.0;
constexpr double kC5After = 0.05;
constexpr double kC5BeforeShear = 0.30;
constexpr double kC5Improvement = 5.0;
constexpr double kC5Time = 600.0;
constexpr double kC6AfterS50 = 0.08;
constexpr double kC6AfterS20 = 0.15;
constexpr double kC6Time = 600.0;
constexpr double kC7TopShear = 0.02;  // of the profile maximum
constexpr double kC7TopNormal = 0.02;  // of the sigma33 profile maximum
constexpr double kC7Bottom = 1e-10;    // |sigma33 - q| / |sigma0|
constexpr double kC8At64 = 5e-3;
constexpr double kC8At128 = 1.3e-3;
constexpr double kC8Time = 120.0;
constexpr double kC9Tol = 1e-12;
constexpr double kC9Time = 1.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int g_failures = 0;

void report(int id, const char* title, const Outcome& o, double seconds, double limit) {
  const bool ok = o.pass && seconds < limit;
  if (!ok) ++g_failures;
  std::printf("[%s] %d %s | %s | %.2f s (limit %.0f s)\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), seconds,
              limit);
  std::fflush(stdout);
}

void info(const std::string& s) {
  std::printf("[INFO] %s\n", s.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// 1. Spline kernel

double table_value(const BasisTable& t, int k, int fn) {
  const int j = fn - t.first_index();
  return j >= 0 && j < t.size() ? t(k, j) : 0.0;
}

Outcome spline_kernel() {
  std::vector<KnotVector> kvs;
  for (int p = 1; p <= 5; ++p) kvs.push_back(KnotVector::open_uniform(p, p + 6));
  kvs.push_back(KnotVector::open_uniform(4, 22));
  kvs.push_back(KnotVector(3, {0, 0, 0, 0, 0.1, 0.35, 0.35, 0.6, 1, 1, 1, 1}));
  kvs.push_back(layerwise_thickness_knots(cross_ply(11, 11.0, benchmark_material()), 2));
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double pu = 0.0, zs = 0.0, zs_abs = 0.0, fd = 0.0;
  const double h = 1e-6;
  for (int i = 0; i < kC1Points; ++i) {
    const double x = U(rng);
    for (const KnotVector& kv : kvs) {
      const BasisTable t = eval_basis_ders(kv, x, 3);
      for (int k = 0; k <= 3; ++k) {
        double s = 0.0, a = 0.0;
        for (int j = 0; j < t.size(); ++j) {
          s += t(k, j);
          a += std::abs(t(k, j));
        }
        if (k == 0) {
          pu = std::max(pu, std::abs(s - 1.0));
        } else {
          zs_abs = std::max(zs_abs, std::abs(s));
          if (a > 0.0) zs = std::max(zs, std::abs(s) / a);
        }
      }
      // Central differences of order k-1; stencils touching a knot are skipped
      // because derivatives there are one-sided.
      bool near_knot = false;
      for (double b : kv.breakpoints()) near_knot = near_knot || std::abs(x - b) < 4 * h;
      if (near_knot) continue;
      const BasisTable tp = eval_basis_ders(kv, x + h, 3), tm = eval_basis_ders(kv, x - h, 3);
      for (int k = 1; k <= 3; ++k) {
        double scale = 0.0, err = 0.0;
        for (int j = 0; j < t.size(); ++j) scale = std::max(scale, std::abs(t(k, j)));
        if (scale == 0.0) continue;
        for (int j = 0; j < t.size(); ++j) {
          const int fn = t.first_index() + j;
          const double d = (table_value(tp, k - 1, fn) - table_value(tm, k - 1, fn)) / (2 * h);
          err = std::max(err, std::abs(d - t(k, j)));
        }
        fd = std::max(fd, err / scale);
      }
    }
  }
  // Rational trivariate basis on the benchmark tube mesh.
  const NurbsPatch tube = build_quarter_cylinder(tube_dimensions(20.0, 11.0)).refined({22, 22, 4}, {4, 4, 3});
  double rpu = 0.0, rzs = 0.0, rfd = 0.0;
  const double hr = 1e-6;
  for (int i = 0; i < kC1Points; ++i) {
    const std::array<double, 3> xi{U(rng), U(rng), 0.02 + 0.96 * U(rng)};
    const RationalBasis rb = nurbs_basis_ders(tube.space, tube.weights, xi, 3);
    for (int s = 0; s < kNumSlots; ++s) {
      double sum = 0.0, a = 0.0;
      for (int f = 0; f < rb.size(); ++f) {
        sum += rb(f, s);
        a += std::abs(rb(f, s));
      }
      if (s == 0) rpu = std::max(rpu, std::abs(sum - 1.0));
      else if (a > 0.0) rzs = std::max(rzs, std::abs(sum) / a);
    }
    if (i % 10 != 0) continue;
    // Every first-, second- and third-order slot against central differences
    // of the slot one order below.
    for (int d = 0; d < 3; ++d) {
      auto xp = xi, xm = xi;
      xp[d] += hr;
      xm[d] -= hr;
      const RationalBasis bp = nurbs_basis_ders(tube.space, tube.weights, xp, 3);
      const RationalBasis bm = nurbs_basis_ders(tube.space, tube.weights, xm, 3);
      if (bp.indices != rb.indices || bm.indices != rb.indices) continue;
      for (int s = 0; s < num_slots(2); ++s) {
        const MultiIndex m = kSlots[s];
        const int up = slot_of(m.e[0] + (d == 0), m.e[1] + (d == 1), m.e[2] + (d == 2));
        double scale = 0.0, err = 0.0;
        for (int f = 0; f < rb.size(); ++f) scale = std::max(scale, std::abs(rb(f, up)));
        if (scale == 0.0) continue;
        for (int f = 0; f < rb.size(); ++f)
          err = std::max(err, std::abs((bp(f, s) - bm(f, s)) / (2 * hr) - rb(f, up)));
        rfd = std::max(rfd, err / scale);
      }
    }
  }
  Outcome o;
  o.pass = pu < kC1Identity && zs < kC1Identity && fd < kC1Fd && rpu < kC1Identity && rzs < kC1Identity &&
           rfd < kC1Fd;
  o.detail = fmt(
      "B-spline PU %.1e, derivative sums %.1e of sum|N^(k)| (absolute %.1e), FD %.1e; NURBS PU %.1e, sums %.1e, "
      "FD %.1e (tol %.0e / %.0e)",
      pu, zs, zs_abs, fd, rpu, rzs, rfd, kC1Identity, kC1Fd);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Exact geometry

Outcome exact_geometry() {
  const TubeDimensions d = tube_dimensions(20.0, 11.0);
  const NurbsPatch coarse = build_quarter_cylinder(d);
  const NurbsPatch fine = coarse.refined({22, 22, 4}, {4, 4, 3});
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < kC2Points; ++i) {
    const std::array<double, 3> xi{U(rng), U(rng), U(rng)};
    const double exact = d.ri + xi[2] * d.h;
    for (const NurbsPatch* p : {&coarse, &fine}) {
      const Vec3 X = map_eval(*p, xi, 0).X();
      worst = std::max(worst, std::abs(std::hypot(X(1), X(2)) - exact) / exact);
    }
  }
  return {worst < kC2Radius, fmt("max |r - r_exact| / r_exact = %.2e over %d points x 2 meshes (tol %.0e)", worst,
                                 kC2Points, kC2Radius)};
}

// ---------------------------------------------------------------------------
// 3. Derivative stack

std::array<double, 3> invert_map(const NurbsPatch& p, const Vec3& X, std::array<double, 3> s) {
  for (int it = 0; it < 50; ++it) {
    const MapJet m = map_eval(p, s, 1);
    const Vec3 d = m.G * (X - m.X());
    for (int k = 0; k < 3; ++k) s[k] += d(k);
    if (d.norm() < 1e-16) break;
  }
  return s;
}

Outcome derivative_stack() {
  const NurbsPatch tube = build_quarter_cylinder(tube_dimensions(20.0, 11.0)).refined({9, 10, 6}, {4, 4, 4});
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(-1.0, 1.0), V(0.05, 0.95);
  DisplacementField f{tube.space, CoeffMatrix(tube.space.num_basis(), 3)};
  for (int i = 0; i < f.coeffs.rows(); ++i) f.coeffs.row(i) = Eigen::RowVector3d(U(rng), U(rng), U(rng));
  const double h = 1e-3;  // mm; tube radius about 220 mm
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, en = 0.0, eA = 0.0, eB = 0.0, eAt = 0.0;
  for (int n = 0; n < kC3Points; ++n) {
    const std::array<double, 3> xi{V(rng), V(rng), V(rng)};
    const MapJet mj = map_eval(tube, xi, 3);
    const DisplacementJet j = physical_derivatives(tube, f, xi, 3);
    const FrameBundle fb = frame_at(tube, xi, 2);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) {
        s1 = std::max(s1, std::abs(j.d1(i, a)));
        for (int b = 0; b < 3; ++b) {
          s2 = std::max(s2, std::abs(j.d2(i, a, b)));
          for (int c = 0; c < 3; ++c) s3 = std::max(s3, std::abs(j.d3(i, a, b, c)));
        }
      }
    double sA = 0.0, sB = 0.0, sAt = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int a = 0; a < 3; ++a)
        for (int m = 0; m < 3; ++m) {
          sA = std::max(sA, std::abs(fb.A(p, a, m)));
          sAt = std::max(sAt, std::abs(fb.At(p, a, m)));
          for (int q = 0; q < 3; ++q) sB = std::max(sB, std::abs(fb.B(p, a, m, q)));
        }
    double d1 = 0.0, d2 = 0.0, d3 = 0.0, dA = 0.0, dB = 0.0, dAt = 0.0;
    for (int l = 0; l < 3; ++l) {
      // Cartesian steps along E_l (for u and Atilde) and along the snapshot
      // direction e_l (for A and B), mapped back by Newton iteration.
      const auto xp = invert_map(tube, mj.X() + h * Vec3::Unit(l), xi);
      const auto xm = invert_map(tube, mj.X() - h * Vec3::Unit(l), xi);
      const DisplacementJet jp = physical_derivatives(tube, f, xp, 2), jm = physical_derivatives(tube, f, xm, 2);
      for (int i = 0; i < 3; ++i) {
        d1 = std::max(d1, std::abs((jp.value(i) - jm.value(i)) / (2 * h) - j.d1(i, l)));
        for (int a = 0; a < 3; ++a) {
          d2 = std::max(d2, std::abs((jp.d1(i, a) - jm.d1(i, a)) / (2 * h) - j.d2(i, a, l)));
          for (int b = 0; b < 3; ++b)
            d3 = std::max(d3, std::abs((jp.d2(i, a, b) - jm.d2(i, a, b)) / (2 * h) - j.d3(i, a, b, l)));
        }
      }
      const FrameBundle gp = frame_at(tube, xp, 0, fb.a), gm = frame_at(tube, xm, 0, fb.a);
      for (int a = 0; a < 3; ++a) {
        const Vec3 fd = (gp.a[a] - gm.a[a]) / (2 * h);
        for (int i = 0; i < 3; ++i) dAt = std::max(dAt, std::abs(fd(i) - fb.At(i, a, l)));
      }
      const Vec3 el = fb.e[static_cast<std::size_t>(l)];
      const auto yp = invert_map(tube, mj.X() + h * el, xi), ym = invert_map(tube, mj.X() - h * el, xi);
      const FrameBundle kp = frame_at(tube, yp, 1, fb.e), km = frame_at(tube, ym, 1, fb.e);
      for (int p = 0; p < 3; ++p)
        for (int a = 0; a < 3; ++a) {
          const double fdA = (kp.a[p] - km.a[p]).dot(fb.e[a]) / (2 * h);
          dA = std::max(dA, std::abs(fdA - fb.A(p, a, l)));
          for (int m = 0; m < 3; ++m) {
            const double fdB = (kp.A(p, a, m) - km.A(p, a, m)) / (2 * h);
            dB = std::max(dB, std::abs(fdB - fb.B(p, a, m, l)));
          }
        }
    }
    // Nested differences: third derivatives from a two-level central
    // stencil of the first derivatives.
    double dn = 0.0;
    const double hn = 2e-3;
    for (int l = 0; l < 3; ++l)
      for (int q = l; q < 3; ++q) {
        Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
        for (int sl : {-1, 1})
          for (int sq : {-1, 1}) {
            const Vec3 Y = mj.X() + hn * (sl * Vec3::Unit(l) + sq * Vec3::Unit(q));
            const DisplacementJet jy = physical_derivatives(tube, f, invert_map(tube, Y, xi), 1);
            for (int i = 0; i < 3; ++i)
              for (int a = 0; a < 3; ++a) acc(i, a) += sl * sq * jy.d1(i, a);
          }
        for (int i = 0; i < 3; ++i)
          for (int a = 0; a < 3; ++a) dn = std::max(dn, std::abs(acc(i, a) / (4 * hn * hn) - j.d3(i, a, l, q)));
      }
    en = std::max(en, dn / s3);
    e1 = std::max(e1, d1 / s1);
    e2 = std::max(e2, d2 / s2);
    e3 = std::max(e3, d3 / s3);
    eA = std::max(eA, dA / sA);
    eB = std::max(eB, dB / sB);
    eAt = std::max(eAt, dAt / sAt);
  }
  Outcome o;
  o.pass = e3 < kC3Third && en < kC3Third && e2 < kC3Third && e1 < kC3Third && eA < kC3Frame && eB < kC3Frame && eAt < kC3Frame;
  o.detail = fmt("u third %.1e, nested %.1e (second %.1e, first %.1e; tol %.0e), frame A %.1e B %.1e Atilde %.1e (tol "
                 "%.0e), %d points",
                 e3, en, e2, e1, kC3Third, eA, eB, eAt, kC3Frame, kC3Points);
  return o;
}

// ---------------------------------------------------------------------------
// 4. Patch and manufactured tests

NurbsPatch skewed_box() {
  Mat3 M;
  M << 2.0, 0.3, 0.1, -0.2, 1.5, 0.2, 0.1, 0.0, 0.8;
  return build_affine(M, Vec3(0.5, -1.0, 2.0));
}

Eigen::MatrixXd greville_interpolant(const NurbsPatch& p, const std::function<Vec3(const Vec3&)>& u) {
  const std::vector<double> g0 = greville(p.space.dirs[0]), g1 = greville(p.space.dirs[1]),
                            g2 = greville(p.space.dirs[2]);
  Eigen::MatrixXd values(p.space.num_basis(), 3);
  for (int b = 0; b < p.space.num_basis(); ++b) {
    const auto mi = p.space.multi_index(b);
    values.row(b) = u(map_eval(p, {g0[static_cast<std::size_t>(mi[0])], g1[static_cast<std::size_t>(mi[1])],
                                   g2[static_cast<std::size_t>(mi[2])]},
                              0)
                          .X())
                        .transpose();
  }
  return interpolate_at_greville(p.space, values);
}

double max_coeff_diff(const CoeffMatrix& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

const Mat3 kG = (Mat3() << 1e-2, 2e-3, -1e-3, 4e-3, -5e-3, 3e-3, 0.0, 1e-3, 7e-3).finished();
const Vec3 kC0(1e-3, -2e-3, 5e-4);

double galerkin_patch() {
  const NurbsPatch p = skewed_box().refined({5, 4, 4}, {3, 3, 2});
  const std::vector<Stiffness> plies{rotate_inplane(stiffness_from_engineering(benchmark_material()), 30.0)};
  LinearSystem s = assemble(p, plies, homogeneous_rule(p.space));
  Dirichlet bc;
  for (Face f : {Face::Xi1Min, Face::Xi1Max, Face::Xi2Min, Face::Xi2Max, Face::Xi3Min, Face::Xi3Max})
    for (int b : face_basis_indices(p.space, f)) {
      const Vec3 u = kG * p.points[static_cast<std::size_t>(b)] + kC0;
      for (int k = 0; k < 3; ++k) bc.set(dof_of(b, k), u(k));
    }
  const GalerkinSolution sol = solve(s, bc, p.space);
  return max_coeff_diff(sol.field.coeffs, greville_interpolant(p, [](const Vec3& X) { return Vec3(kG * X + kC0); }));
}

double collocation_patch() {
  const NurbsPatch p = skewed_box().refined({5, 4, 4}, {3, 3, 3});
  const Stiffness C = rotate_inplane(stiffness_from_engineering(benchmark_material()), 30.0);
  const Stiffness Cg = rotate_to_global(C, frame_at(p, {0.5, 0.5, 0.5}, 0).D);
  Mat3 sigma = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) sigma(i, j) += Cg(i, j, k, l) * kG(k, l);
  CollocationBCs bc;
  for (Face f : {Face::Xi1Min, Face::Xi1Max}) {
    auto& fc = bc.faces[static_cast<std::size_t>(f)];
    fc.fixed = {true, true, true};
    fc.displacement = [](const Vec3& X) -> Vec3 { return kG * X + kC0; };
  }
  for (Face f : {Face::Xi2Min, Face::Xi2Max, Face::Xi3Min, Face::Xi3Max})
    bc.faces[static_cast<std::size_t>(f)].traction = [&](const Vec3&, const Vec3& n) -> Vec3 { return sigma * n; };
  const CollocationSolution sol = solve_collocation(p, C, bc);
  return max_coeff_diff(sol.field.coeffs, greville_interpolant(p, [](const Vec3& X) { return Vec3(kG * X + kC0); }));
}

// Piecewise affine field on a three-ply skewed block whose kinks at the
// interfaces keep the traction continuous; it lies in the layerwise space.
double layerwise_patch() {
  Layup layup;
  for (auto [t, a] : {std::pair{0.3, 0.0}, std::pair{0.5, 90.0}, std::pair{0.2, 45.0}})
    layup.plies.push_back({t, a, benchmark_material()});
  const LayerwiseSpace lw = build_layerwise_space(layup, 2, 2, 2, {4, 3});
  Mat3 M;
  M << 2.0, 0.3, 0.1, -0.2, 1.5, 0.2, 0.1, 0.0, 0.8;
  const Vec3 c(0.5, -1.0, 2.0);
  const NurbsPatch patch = build_affine(M, c).embedded(lw.space);
  const Vec3 m = M.inverse().row(2).transpose();
  const FrameBundle fb = frame_at(patch, {0.5, 0.5, 0.5}, 0);
  std::vector<Vec3> g;
  Vec3 t = Vec3::Zero();
  for (int k = 0; k < layup.size(); ++k) {
    const Stiffness Cg = rotate_to_global(layup.ply_stiffness(k), fb.D);
    Mat3 A = Mat3::Zero();
    Vec3 r = Vec3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int l = 0; l < 3; ++l) {
            A(i, a) += Cg(i, j, a, l) * m(j) * m(l);
            r(i) += Cg(i, j, a, l) * kG(a, l) * m(j);
          }
    if (k == 0) {
      g.push_back(Vec3(2e-3, -1e-3, 4e-3));
      t = r + A * g[0];
    } else {
      g.push_back(A.lu().solve(t - r));
    }
  }
  const std::vector<double> bnd = layup.boundaries();
  auto exact = [&](const Vec3& X) {
    const double z = m.dot(X - c);
    Vec3 u = kG * X + kC0;
    for (int k = 0; k < layup.size(); ++k)
      u += g[static_cast<std::size_t>(k)] *
           std::clamp(z - bnd[static_cast<std::size_t>(k)], 0.0, bnd[static_cast<std::size_t>(k) + 1] - bnd[static_cast<std::size_t>(k)]);
    return u;
  };
  const Eigen::MatrixXd coeffs = greville_interpolant(patch, exact);
  Dirichlet bc;
  for (Face f : {Face::Xi1Min, Face::Xi1Max, Face::Xi2Min, Face::Xi2Max, Face::Xi3Min, Face::Xi3Max})
    for (int b : face_basis_indices(lw.space, f))
      for (int k = 0; k < 3; ++k) bc.set(dof_of(b, k), coeffs(b, k));
  const GalerkinSolution sol = solve_layerwise(patch, lw, layup, Eigen::VectorXd::Zero(3 * lw.space.num_basis()), bc);
  return max_coeff_diff(sol.field.coeffs, coeffs);
}

// u = c sin(pi x) sin(pi y) (1 + z) on the unit cube, clamped lateral faces,
// exact tractions on z = 0, 1, body force from the exact stress.
std::vector<double> manufactured_errors(int p) {
  const double E = 1.0, nu = 0.25;
  const double lam = E * nu / ((1 + nu) * (1 - 2 * nu)), mu = E / (2 * (1 + nu));
  const Vec3 cvec(1.0, -0.5, 0.7);
  const Stiffness C = stiffness_from_engineering(EngineeringConstants::isotropic(E, nu));
  auto stress = [&](const Vec3& X) {
    const double sx = std::sin(kPi * X(0)), cx = std::cos(kPi * X(0));
    const double sy = std::sin(kPi * X(1)), cy = std::cos(kPi * X(1));
    Mat3 g;
    for (int i = 0; i < 3; ++i) {
      g(i, 0) = cvec(i) * kPi * cx * sy * (1 + X(2));
      g(i, 1) = cvec(i) * kPi * sx * cy * (1 + X(2));
      g(i, 2) = cvec(i) * sx * sy;
    }
    const Mat3 eps = 0.5 * (g + g.transpose());
    return Mat3(lam * eps.trace() * Mat3::Identity() + 2 * mu * eps);
  };
  // b = -div sigma in closed form.
  auto body = [&](const Vec3& X) -> Vec3 {
    const double sx = std::sin(kPi * X(0)), cx = std::cos(kPi * X(0));
    const double sy = std::sin(kPi * X(1)), cy = std::cos(kPi * X(1));
    const double z = 1 + X(2), pi2 = kPi * kPi;
    // Second derivatives of phi = sx sy z.
    Mat3 H;
    H << -pi2 * sx * sy * z, pi2 * cx * cy * z, kPi * cx * sy, pi2 * cx * cy * z, -pi2 * sx * sy * z, kPi * sx * cy,
        kPi * cx * sy, kPi * sx * cy, 0.0;
    // div sigma = (lam + mu) grad(div u) + mu lap u with u = c phi.
    return -((lam + mu) * H * cvec + mu * H.trace() * cvec);
  };
  std::vector<double> errs;
  for (int nel : {3, 6, 12, 24}) {
    const NurbsPatch box = build_box(1, 1, 1).refined({nel + p, nel + p, 3}, {p, p, 2});
    const std::vector<Stiffness> plies{C};
    const QuadratureRule rule = homogeneous_rule(box.space, 1);
    LinearSystem s = assemble(box, plies, rule);
    s.f = assemble_body_force(box, rule, body);
    for (Face f : {Face::Xi3Min, Face::Xi3Max})
      s.f += assemble_traction(box, f, [&](const Vec3& X, const Vec3& n) -> Vec3 { return stress(X) * n; });
    Dirichlet bc;
    for (Face f : {Face::Xi1Min, Face::Xi1Max, Face::Xi2Min, Face::Xi2Max})
      for (int k = 0; k < 3; ++k) bc.set_face(box.space, f, k, 0.0);
    const GalerkinSolution sol = solve(s, bc, box.space);
    double err = 0.0;
    const int ns = 41;
    for (int a = 0; a < ns; ++a)
      for (int b = 0; b < ns; ++b)
        for (double z : {0.0, 0.37, 1.0}) {
          const std::array<double, 3> xi{a / (ns - 1.0), b / (ns - 1.0), z};
          const DisplacementJet j = physical_derivatives(box, sol.field, xi, 0);
          const Vec3 X = map_eval(box, xi, 0).X();
          const double ref = std::sin(kPi * X(0)) * std::sin(kPi * X(1)) * (1 + X(2));
          for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(j.value(i) - cvec(i) * ref));
        }
    errs.push_back(err);
  }
  return errs;
}

Outcome patch_and_manufactured() {
  const double g = galerkin_patch(), c = collocation_patch(), l = layerwise_patch();
  const int p = 3;
  const std::vector<double> e = manufactured_errors(p);
  double min_order = 1e9;
  std::string orders;
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double o = std::log2(e[i - 1] / e[i]);
    min_order = std::min(min_order, o);
    orders += fmt("%s%.2f", i > 1 ? "/" : "", o);
  }
  Outcome o;
  o.pass = g < kC4Patch && c < kC4Patch && l < kC4Patch && min_order >= p + kC4OrderMargin;
  o.detail = fmt("patch max coeff error Galerkin %.1e, collocation %.1e, layerwise %.1e (tol %.0e); "
                 "manufactured p=%d max-error orders %s (min %.2f >= %.1f)",
                 g, c, l, kC4Patch, p, orders.c_str(), min_order, p + kC4OrderMargin);
  return o;
}

// ---------------------------------------------------------------------------
// 5-7. Tube benchmark

std::string errs3(const std::array<ErrorResult, 3>& e) {
  return fmt("%.2f/%.2f/%.2f%%", 100 * e[0].value, 100 * e[1].value, 100 * e[2].value);
}

struct BenchmarkRun {
  RunConfig cfg;
  Model model;
  std::vector<PointResult> points;
};

BenchmarkRun benchmark(const RunConfig& cfg, const Model& reference) {
  BenchmarkRun b{cfg, solve_model(cfg), {}};
  for (const SamplePoint& p : cfg.samples) b.points.push_back(evaluate_point(cfg, b.model, &reference, p));
  return b;
}

RunConfig benchmark_config(Method m, double S) {
  RunConfig c = default_config(m);
  c.S = S;
  c.use_cache = false;
  return c;
}

Outcome galerkin_benchmark(const BenchmarkRun& run) {
  const ComponentErrors& e = *run.points.front().errors;
  bool ok = true;
  for (int c = 0; c < 3; ++c) ok = ok && e.after[c].value < kC5After && !e.after[c].absolute;
  double improvement = 1e300;
  for (int c = 0; c < 2; ++c) {
    ok = ok && e.before[c].value > kC5BeforeShear;
    improvement = std::min(improvement, e.before[c].value / e.after[c].value);
  }
  ok = ok && improvement >= kC5Improvement;
  return {ok, fmt("S=20 at (L/3, theta/3): before %s, after %s (e13/e23/e33; after < %.0f%%, before shear > %.0f%%), "
                  "shear improvement %.1fx (>= %.0fx)",
                  errs3(e.before).c_str(), errs3(e.after).c_str(), 100 * kC5After, 100 * kC5BeforeShear, improvement,
                  kC5Improvement)};
}

Outcome boundary_fidelity(const BenchmarkRun& run) {
  bool ok = true;
  std::string d;
  int n = 0;
  for (const PointResult& p : run.points) {
    if (!p.interior) continue;
    ++n;
    double max33 = 0.0;
    for (const ProfileSample& s : p.profile.samples) max33 = std::max(max33, std::abs(s.s33));
    const double top33 = std::abs(p.profile.samples.back().s33) / max33;
    const double bot = std::abs(p.checks.bottom_s33 - p.checks.bottom_s33_expected);
    ok = ok && p.checks.top_s13_ratio < kC7TopShear && p.checks.top_s23_ratio < kC7TopShear && top33 < kC7TopNormal &&
         bot < kC7Bottom;
    d += fmt("%s(%.3g L, %.3g theta): top |s13|/max %.2e, |s23|/max %.2e, |s33|/max %.2e; bottom |s33 - q| %.1e",
             n > 1 ? "; " : "", p.point.axial, p.point.theta, p.checks.top_s13_ratio, p.checks.top_s23_ratio, top33,
             bot);
  }
  ok = ok && n > 0;
  d += fmt(" (tol %.0f%%, %.0f%%, %.0e)", 100 * kC7TopShear, 100 * kC7TopNormal, kC7Bottom);
  return {ok, d};
}

// ---------------------------------------------------------------------------
// 8. Recovery against the constitutive slab solution

Outcome slab_recovery() {
  const testing::SlabOracle o;
  const double e64 = o.recovery_error(0.37, 0.61, 64), e128 = o.recovery_error(0.37, 0.61, 128);
  const double order = std::log(e64 / e128) / std::log(127.0 / 63.0);
  return {e64 < kC8At64 && e128 < kC8At128,
          fmt("max rel error sigma_i3: %.3f%% at 64/ply (< %.2f%%), %.4f%% at 128/ply (< %.2f%%), observed order %.2f",
              100 * e64, 100 * kC8At64, 100 * e128, 100 * kC8At128, order)};
}

// ---------------------------------------------------------------------------
// 9. Homogenization

Outcome homogenization() {
  double worst_identical = 0.0;
  for (double angle : {0.0, 20.0, 45.0, 90.0}) {
    Layup l;
    for (double t : {0.3, 1.1, 0.6}) l.plies.push_back({t, angle, benchmark_material()});
    const Homogenized h = homogenize(l);
    worst_identical =
        std::max(worst_identical, (h.C.voigt - l.ply_stiffness(0).voigt).cwiseAbs().maxCoeff() /
                                      l.ply_stiffness(0).voigt.cwiseAbs().maxCoeff());
  }
  Layup mixed;
  mixed.plies = {{0.25, 0.0, benchmark_material()}, {0.4, 90.0, benchmark_material()}, {0.35, 30.0, benchmark_material()}};
  double fsum = 0.0;
  for (double f : mixed.fractions()) fsum += f;
  const Layup xp = cross_ply(11, 11.0, benchmark_material());
  const Homogenized hx = homogenize(xp);
  const double c33 = xp.ply_stiffness(0).voigt(2, 2);
  const double mean_err = std::abs(homogenize(mixed).C.voigt(2, 2) - c33) / c33;
  const double g12_err = std::abs(hx.C.voigt(5, 5) - benchmark_material().G12);
  const bool ok = worst_identical < kC9Tol && std::abs(fsum - 1.0) < kC9Tol && mean_err < kC9Tol && g12_err < kC9Tol;
  return {ok, fmt("identical plies %.1e, |sum t_k - 1| %.1e, harmonic C33 %.1e, cross-ply C66 - G12 %.1e (tol %.0e)",
                  worst_identical, std::abs(fsum - 1.0), mean_err, g12_err, kC9Tol)};
}

}  // namespace

int main(int, char** argv) {
  ensure_blas_kernel(argv);
  {
    const auto t0 = Clock::now();
    const Outcome o = spline_kernel();
    report(1, "spline kernel suite", o, since(t0), kC1Time);
  }
  {
    const auto t0 = Clock::now();
    const Outcome o = exact_geometry();
    report(2, "exact quarter-arc geometry", o, since(t0), kC2Time);
  }
  {
    const auto t0 = Clock::now();
    const Outcome o = derivative_stack();
    report(3, "derivative-stack oracle", o, since(t0), kC3Time);
  }
  {
    const auto t0 = Clock::now();
    const Outcome o = patch_and_manufactured();
    report(4, "patch and manufactured tests", o, since(t0), kC4Time);
  }

  // Criterion 5 and 7 share the S=20 Galerkin run; criterion 6 reuses the S=20
  // reference.
  const auto t5 = Clock::now();
  RunConfig g20 = benchmark_config(Method::Galerkin, 20.0);
  const Model ref20 = solve_reference(g20);
  const BenchmarkRun run5 = benchmark(g20, ref20);
  const double time5 = since(t5);
  report(5, "tube benchmark recovery, Galerkin", galerkin_benchmark(run5), time5, kC5Time);
  info(fmt("reference S=20: %d dofs, thickness control points %d, %s; Galerkin %d dofs",
           3 * ref20.patch.space.num_basis(), ref20.metadata.value("thickness_control_points", 0),
           ref20.info.backend.c_str(), 3 * run5.model.patch.space.num_basis()));

  {
    const auto t0 = Clock::now();
    const RunConfig c50 = benchmark_config(Method::Collocation, 50.0);
    const Model ref50 = solve_reference(c50);
    const BenchmarkRun r50 = benchmark(c50, ref50);
    const BenchmarkRun r20 = benchmark(benchmark_config(Method::Collocation, 20.0), ref20);
    const ComponentErrors& a = *r50.points.front().errors;
    const ComponentErrors& b = *r20.points.front().errors;
    bool ok = true;
    for (int c = 0; c < 3; ++c)
      ok = ok && a.after[c].value < kC6AfterS50 && b.after[c].value < kC6AfterS20 && !a.after[c].absolute &&
           !b.after[c].absolute;
    const Outcome o{ok, fmt("S=50 after %s (< %.0f%%, before %s); S=20 after %s (< %.0f%%, before %s)",
                            errs3(a.after).c_str(), 100 * kC6AfterS50, errs3(a.before).c_str(), errs3(b.after).c_str(),
                            100 * kC6AfterS20, errs3(b.before).c_str())};
    report(6, "tube benchmark recovery, collocation", o, since(t0), kC6Time);
  }

  report(7, "boundary-condition fidelity of recovery", boundary_fidelity(run5), 0.0, kC5Time);
  {
    // Quarter-grid diagnostics on the same solution; not part of the criterion.
    for (const SamplePoint& sp : sample_grid(5, 5)) {
      const PointResult p = evaluate_point(g20, run5.model, &ref20, sp);
      if (!p.interior) continue;
      double max33 = 0.0;
      for (const ProfileSample& s : p.profile.samples) max33 = std::max(max33, std::abs(s.s33));
      info(fmt("quarter grid (%.2f L, %.2f theta): after %s%s; top |s13|/max %.1e%s, |s23|/max %.1e%s, |s33|/max %.1e",
               sp.axial, sp.theta, errs3(p.errors->after).c_str(), p.absolute_mode ? " (absolute mode)" : "",
               p.checks.top_s13_ratio, p.checks.s13_near_zero ? " (near zero)" : "", p.checks.top_s23_ratio,
               p.checks.s23_near_zero ? " (near zero)" : "", std::abs(p.profile.samples.back().s33) / max33));
    }
  }
  {
    const auto t0 = Clock::now();
    const Outcome o = slab_recovery();
    report(8, "recovery-constitutive agreement on a slab", o, since(t0), kC8Time);
  }
  {
    const auto t0 = Clock::now();
    const Outcome o = homogenization();
    report(9, "homogenization unit suite", o, since(t0), kC9Time);
  }
  std::printf("%s: %d criteria failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
  return g_failures ? 1 : 0;
}
