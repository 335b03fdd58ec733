#pragma once

// Manufactured polynomial displacement on a homogeneous anisotropic slab with
// exact stresses, body force b = -div sigma and its gradient. Shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <vector>

#include "lamiga/recovery.hpp"
#include "lamiga/spline.hpp"

namespace lamiga::testing {

struct Monomial {
  double c;
  int e[3];
};

/// Trivariate polynomial with exact derivatives.
struct Poly {
  std::vector<Monomial> terms;

  double operator()(const Vec3& X) const {
    double s = 0.0;
    for (const Monomial& m : terms) {
      double t = m.c;
      for (int d = 0; d < 3; ++d)
        for (int k = 0; k < m.e[d]; ++k) t *= X(d);
      s += t;
    }
    return s;
  }
  Poly deriv(int d) const {
    Poly out;
    for (const Monomial& m : terms)
      if (m.e[d] > 0) {
        Monomial n = m;
        n.c *= m.e[d];
        n.e[d] -= 1;
        out.terms.push_back(n);
      }
    return out;
  }
};

struct SlabOracle {
  double lx = 2.0, ly = 1.5, h = 0.4;
  Layup layup;
  Stiffness C;  // global = local on the slab
  Poly u[3];
  NurbsPatch patch;
  DisplacementField field;

  SlabOracle() {
    Ply ply;
    ply.thickness = h;
    ply.angle_deg = 30.0;
    ply.material = benchmark_material();
    layup.plies = {ply};
    C = layup.ply_stiffness(0);
    const double a = 1e-3;
    u[0].terms = {{a, {3, 0, 1}}, {0.4 * a, {1, 2, 2}}, {0.3 * a, {0, 0, 4}}, {0.2 * a, {2, 1, 0}}};
    u[1].terms = {{0.5 * a, {0, 3, 1}}, {0.2 * a, {2, 1, 3}}, {-0.4 * a, {1, 1, 1}}, {0.25 * a, {0, 0, 4}}};
    u[2].terms = {{0.3 * a, {2, 2, 0}}, {-0.2 * a, {1, 0, 3}}, {0.1 * a, {0, 2, 2}}, {0.15 * a, {3, 1, 0}}};
    patch = build_box(lx, ly, h).refined({6, 6, 6}, {4, 4, 4});
    field.space = patch.space;
    const int nb = patch.space.num_basis();
    Eigen::MatrixXd values(nb, 3);
    const std::vector<double> g0 = greville(patch.space.dirs[0]), g1 = greville(patch.space.dirs[1]),
                              g2 = greville(patch.space.dirs[2]);
    for (int b = 0; b < nb; ++b) {
      const auto mi = patch.space.multi_index(b);
      const Vec3 X = map_eval(patch, {g0[static_cast<std::size_t>(mi[0])], g1[static_cast<std::size_t>(mi[1])],
                                      g2[static_cast<std::size_t>(mi[2])]},
                              0)
                         .X();
      for (int k = 0; k < 3; ++k) values(b, k) = u[k](X);
    }
    field.coeffs = interpolate_at_greville(patch.space, values);
  }

  Mat3 stress(const Vec3& X) const {
    Mat3 s = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) s(i, j) += C(i, j, k, l) * u[k].deriv(l)(X);
    return s;
  }
  /// d sigma_ij / d X_m.
  double stress_deriv(int i, int j, int m, const Vec3& X) const {
    double s = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) s += C(i, j, k, l) * u[k].deriv(l).deriv(m)(X);
    return s;
  }
  BodyForceJet body(const Vec3& X) const {
    BodyForceJet out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            const Poly ukl = u[k].deriv(l).deriv(j);
            out.b(i) -= C(i, j, k, l) * ukl(X);
            for (int m = 0; m < 3; ++m) out.grad(i, m) -= C(i, j, k, l) * ukl.deriv(m)(X);
          }
    return out;
  }
  BottomTraction bottom(double xi1, double xi2) const {
    const Vec3 X = map_eval(patch, {xi1, xi2, 0.0}, 0).X();
    const Mat3 s = stress(X);
    BottomTraction bt;
    bt.s13 = s(0, 2);
    bt.s23 = s(1, 2);
    bt.s33 = s(2, 2);
    bt.ds13_dx1 = stress_deriv(0, 2, 0, X);
    bt.ds23_dx2 = stress_deriv(1, 2, 1, X);
    return bt;
  }

  /// Largest relative error over sigma13, sigma23, sigma33 between recovered
  /// and constitutive values at (xi1, xi2).
  double recovery_error(double xi1, double xi2, int samples_per_ply) const {
    RecoveryOptions opt;
    opt.samples_per_ply = samples_per_ply;
    opt.body = [this](const Vec3& X) { return body(X); };
    const StressProfile prof = recover(patch, field, layup, xi1, xi2, bottom(xi1, xi2), opt);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> ref, rec;
      for (const ProfileSample& s : prof.samples) {
        ref.push_back(c == 0 ? s.jet.s(0, 2) : c == 1 ? s.jet.s(1, 2) : s.jet.s(2, 2));
        rec.push_back(c == 0 ? s.s13 : c == 1 ? s.s23 : s.s33);
      }
      worst = std::max(worst, relative_max_error(ref, rec).value);
    }
    return worst;
  }
};

}  // namespace lamiga::testing
