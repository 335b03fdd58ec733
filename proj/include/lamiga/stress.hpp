#pragma once

// Stiffness tensors carried by a moving frame and their spatial derivatives,
// and constitutive stresses with first and second derivatives in a fixed
// snapshot frame.

#include <array>

#include "lamiga/geometry.hpp"
#include "lamiga/material.hpp"

namespace lamiga {

/// Four-fold contraction T_ijkl = Q0_ia Q1_jb Q2_kc Q3_ld C_abcd.
Tensor4 contract4(const Tensor4& C, const Mat3& Q0, const Mat3& Q1, const Mat3& Q2, const Mat3& Q3);

/// A tensor field and its derivatives in three coordinate directions.
struct TensorJet {
  int order = 0;
  Tensor4 v;
  std::array<Tensor4, 3> d1{};
  std::array<std::array<Tensor4, 3>, 3> d2{};
};

/// Jet of T = Q(x) applied four-fold to a constant C, from the jet of Q:
/// dQ[m] = dQ/dx_m, ddQ[m][n] = d2Q/dx_m dx_n (ddQ ignored for order < 2).
TensorJet rotate_jet(const Tensor4& C, const Mat3& Q, const std::array<Mat3, 3>& dQ,
                     const std::array<std::array<Mat3, 3>, 3>& ddQ, int order);

/// Snapshot-frame stress and its snapshot-Cartesian derivatives at a point.
struct LocalStressJet {
  int order = 0;
  Mat3 s = Mat3::Zero();  // sigma_ab
  double d1[3][3][3] = {};         // sigma_ab,m
  double d2[3][3][3][3] = {};      // sigma_ab,mn
  Vec3 X = Vec3::Zero();
};

/// Stress of the displacement field with the moving-frame stiffness C_local
/// (constant within the material region, frame a from the patch), expressed
/// in the snapshot frame e and differentiated up to `order` <= 2 with respect
/// to the snapshot coordinates x_m.
LocalStressJet local_stress_jet(const NurbsPatch& patch, const DisplacementField& field, const Stiffness& C_local,
                                const std::array<double, 3>& xi, const std::array<Vec3, 3>& snapshot, int order);

/// Global-frame constitutive stress sigma~_ij at a point.
Mat3 global_stress(const NurbsPatch& patch, const DisplacementField& field, const Stiffness& C_local,
                   const std::array<double, 3>& xi);

}  // namespace lamiga
