#include "lamiga/stress.hpp"

namespace lamiga {

Tensor4 contract4(const Tensor4& C, const Mat3& Q0, const Mat3& Q1, const Mat3& Q2, const Mat3& Q3) {
  // Contract one index at a time, last index first.
  Tensor4 a, b;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int d = 0; d < 3; ++d) s += Q3(l, d) * C(i, j, k, d);
          a(i, j, k, l) = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += Q2(k, c) * a(i, j, c, l);
          b(i, j, k, l) = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += Q1(j, c) * b(i, c, k, l);
          a(i, j, k, l) = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += Q0(i, c) * a(c, j, k, l);
          b(i, j, k, l) = s;
        }
  return b;
}

namespace {

void add_to(Tensor4& t, const Tensor4& x) {
  for (int m = 0; m < 81; ++m) t.c[m] += x.c[m];
}

}  // namespace

TensorJet rotate_jet(const Tensor4& C, const Mat3& Q, const std::array<Mat3, 3>& dQ,
                     const std::array<std::array<Mat3, 3>, 3>& ddQ, int order) {
  TensorJet out;
  out.order = order;
  out.v = contract4(C, Q, Q, Q, Q);
  if (order < 1) return out;
  // Position p of the four factors carries the derivative.
  auto with = [&](int p, const Mat3& M, int p2, const Mat3& M2) {
    std::array<const Mat3*, 4> f{&Q, &Q, &Q, &Q};
    f[static_cast<std::size_t>(p)] = &M;
    if (p2 >= 0) f[static_cast<std::size_t>(p2)] = &M2;
    return contract4(C, *f[0], *f[1], *f[2], *f[3]);
  };
  for (int m = 0; m < 3; ++m)
    for (int p = 0; p < 4; ++p) add_to(out.d1[static_cast<std::size_t>(m)], with(p, dQ[static_cast<std::size_t>(m)], -1, Q));
  if (order < 2) return out;
  for (int m = 0; m < 3; ++m)
    for (int n = m; n < 3; ++n) {
      Tensor4& t = out.d2[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
      for (int p = 0; p < 4; ++p) {
        add_to(t, with(p, ddQ[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)], -1, Q));
        for (int p2 = 0; p2 < 4; ++p2)
          if (p2 != p) add_to(t, with(p, dQ[static_cast<std::size_t>(m)], p2, dQ[static_cast<std::size_t>(n)]));
      }
      out.d2[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)] = t;
    }
  return out;
}

LocalStressJet local_stress_jet(const NurbsPatch& patch, const DisplacementField& field, const Stiffness& C_local,
                                const std::array<double, 3>& xi, const std::array<Vec3, 3>& snapshot, int order) {
  if (order < 0 || order > 2) throw DomainError("local_stress_jet: order must be 0, 1 or 2");
  const RationalBasis rb = nurbs_basis_ders(patch.space, patch.weights, xi, order + 1);
  const MapJet mj = map_from_basis(patch, rb);
  const DisplacementJet u = physical_derivatives(patch, field, rb, mj, order + 1);
  const FrameBundle fb = frame_from_jet(mj, order, snapshot);
  const Mat3& C = fb.C;

  // Global strain and derivatives, then snapshot components.
  double eg1[3][3][3] = {}, eg2[3][3][3][3] = {};
  Mat3 eg0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      eg0(i, j) = 0.5 * (u.d1(i, j) + u.d1(j, i));
      if (order >= 1)
        for (int k = 0; k < 3; ++k) {
          eg1[i][j][k] = 0.5 * (u.d2(i, j, k) + u.d2(j, i, k));
          if (order >= 2)
            for (int l = 0; l < 3; ++l) eg2[i][j][k][l] = 0.5 * (u.d3(i, j, k, l) + u.d3(j, i, k, l));
        }
    }
  const Mat3 e0 = C.transpose() * eg0 * C;
  double e1[3][3][3] = {}, e2[3][3][3][3] = {};
  if (order >= 1) {
    // Rotate one index at a time: t[a][b][m] over (i, j, k).
    double t1[3][3][3] = {};
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i) t1[a][j][k] += C(i, a) * eg1[i][j][k];
    double t2[3][3][3] = {};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 3; ++k)
          for (int j = 0; j < 3; ++j) t2[a][b][k] += C(j, b) * t1[a][j][k];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 3; ++m)
          for (int k = 0; k < 3; ++k) e1[a][b][m] += C(k, m) * t2[a][b][k];
  }
  if (order >= 2) {
    double s1[3][3][3][3] = {}, s2[3][3][3][3] = {};
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i) s1[a][j][k][l] += C(i, a) * eg2[i][j][k][l];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            for (int j = 0; j < 3; ++j) s2[a][b][k][l] += C(j, b) * s1[a][j][k][l];
    for (auto& x : s1)
      for (auto& y : x)
        for (auto& z : y)
          for (double& w : z) w = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 3; ++m)
          for (int l = 0; l < 3; ++l)
            for (int k = 0; k < 3; ++k) s1[a][b][m][l] += C(k, m) * s2[a][b][k][l];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n)
            for (int l = 0; l < 3; ++l) e2[a][b][m][n] += C(l, n) * s1[a][b][m][l];
  }

  // Stiffness in the snapshot frame: Q(a, psi) = e_a . a_psi with derivatives
  // A(psi, a, m) and B(psi, a, m, n).
  const Mat3 Q = C.transpose() * fb.D;
  std::array<Mat3, 3> dQ{};
  std::array<std::array<Mat3, 3>, 3> ddQ{};
  for (int m = 0; m < 3 && order >= 1; ++m)
    for (int a = 0; a < 3; ++a)
      for (int p = 0; p < 3; ++p) {
        dQ[static_cast<std::size_t>(m)](a, p) = fb.A(p, a, m);
        if (order >= 2)
          for (int n = 0; n < 3; ++n) ddQ[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)](a, p) = fb.B(p, a, m, n);
      }
  const TensorJet T = rotate_jet(C_local.full, Q, dQ, ddQ, order);

  LocalStressJet out;
  out.order = order;
  out.X = mj.X();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double ecd = e0(c, d);
          out.s(a, b) += T.v(a, b, c, d) * ecd;
          for (int m = 0; m < 3 && order >= 1; ++m) {
            const std::size_t um = static_cast<std::size_t>(m);
            out.d1[a][b][m] += T.d1[um](a, b, c, d) * ecd + T.v(a, b, c, d) * e1[c][d][m];
            for (int n = 0; n < 3 && order >= 2; ++n) {
              const std::size_t un = static_cast<std::size_t>(n);
              out.d2[a][b][m][n] += T.d2[um][un](a, b, c, d) * ecd + T.d1[um](a, b, c, d) * e1[c][d][n] +
                                    T.d1[un](a, b, c, d) * e1[c][d][m] + T.v(a, b, c, d) * e2[c][d][m][n];
            }
          }
        }
  return out;
}

Mat3 global_stress(const NurbsPatch& patch, const DisplacementField& field, const Stiffness& C_local,
                   const std::array<double, 3>& xi) {
  const RationalBasis rb = nurbs_basis_ders(patch.space, patch.weights, xi, 1);
  const MapJet mj = map_from_basis(patch, rb);
  const DisplacementJet u = physical_derivatives(patch, field, rb, mj, 1);
  const FrameBundle fb = frame_from_jet(mj, 0);
  const Stiffness Cg = rotate_to_global(C_local, fb.D);
  Mat3 s = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s(i, j) += Cg(i, j, k, l) * 0.5 * (u.d1(k, l) + u.d1(l, k));
  return s;
}

}  // namespace lamiga
