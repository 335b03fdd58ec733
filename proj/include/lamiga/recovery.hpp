#pragma once

// Equilibrium-based recovery of the out-of-plane stresses: in-plane stress
// derivative profiles through the thickness in a frozen local frame and
// cumulative trapezoidal integration of the local equilibrium equations.

#include <functional>
#include <string>
#include <vector>

#include "lamiga/geometry.hpp"
#include "lamiga/material.hpp"
#include "lamiga/stress.hpp"

namespace lamiga {

/// Body force at a point in global components with its global gradient
/// grad(i, j) = d b_i / d X_j.
struct BodyForceJet {
  Vec3 b = Vec3::Zero();
  Mat3 grad = Mat3::Zero();
};
using BodyForceJetFn = std::function<BodyForceJet(const Vec3& X)>;

/// Treatment of sigma13,1 and sigma23,2 at the laminate bottom and at ply
/// interfaces.
enum class BottomDerivativeMode {
  /// Frozen-frame derivatives of the surface traction: at the bottom the given
  /// tangential derivatives of the moving-frame components plus the
  /// frame-rotation terms; at a curved interface the jump -[sigma_aj] n_j,a
  /// caused by the in-plane stress jump.
  FrameConsistent,
  /// Only the given bottom derivatives; frame rotation ignored everywhere.
  Zero,
};

/// Prescribed out-of-plane stresses at the bottom surface in the local frame
/// and tangential derivatives of the moving-frame components.
struct BottomTraction {
  double s13 = 0.0, s23 = 0.0, s33 = 0.0;
  double ds13_dx1 = 0.0, ds23_dx2 = 0.0;
};

struct RecoveryOptions {
  int samples_per_ply = 64;  // per ply, both ply ends included
  BottomDerivativeMode bottom_mode = BottomDerivativeMode::FrameConsistent;
  BodyForceJetFn body;  // empty means b = 0
};

/// One through-thickness sample.
struct ProfileSample {
  double xi3 = 0.0;
  double x3 = 0.0;  // distance from the bottom along e3, mm
  int ply = 0;
  LocalStressJet jet;  // constitutive stress and derivatives, frozen frame
  Vec3 b = Vec3::Zero();       // local body force
  Mat3 grad_b = Mat3::Zero();  // local body-force gradient b_a,m
  double s13 = 0.0, s23 = 0.0, s33 = 0.0, ds33 = 0.0;  // recovered
};

struct StressProfile {
  double xi1 = 0.0, xi2 = 0.0;
  std::array<Vec3, 3> e{};  // frozen frame
  Vec3 bottom = Vec3::Zero();
  FrameBundle bottom_frame;  // moving frame at the bottom point, order 1
  std::vector<FrameBundle> interface_frames;  // at each interior ply boundary
  BottomTraction bottom_traction;
  double bottom_ds13_dx1 = 0.0, bottom_ds23_dx2 = 0.0;  // values used
  std::vector<ProfileSample> samples;
};

/// Sample grid and constitutive stress jets at in-plane point (xi1, xi2). The
/// thickness line xi3 in [0, 1] is cut at the normalized ply boundaries and
/// every ply gets `samples_per_ply` equally spaced points, so interfaces
/// appear twice with the ply-wise stiffness on each side. The frame is frozen
/// at the bottom point.
StressProfile local_inplane_profiles(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup,
                                     double xi1, double xi2, const RecoveryOptions& opt = {});

/// Shear recovery: sigma_a3 = bottom - cumulative integral of
/// (sigma_a1,1 + sigma_a2,2 + b_a), a = 1, 2.
void recover_shear(StressProfile& profile, const BottomTraction& bottom);

/// Normal recovery ply by ply: sigma33,3 from the integral of the second
/// in-plane derivatives plus the ply-bottom terms, then sigma33 by a second
/// cumulative integral from the prescribed bottom value.
void recover_normal(StressProfile& profile, BottomDerivativeMode mode);

/// Runs all three steps.
StressProfile recover(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup, double xi1,
                      double xi2, const BottomTraction& bottom, const RecoveryOptions& opt = {});

/// Composite trapezoidal cumulative integral of y over x (x nondecreasing).
std::vector<double> cumulative_trapezoid(const std::vector<double>& x, const std::vector<double>& y);

struct ErrorResult {
  double value = 0.0;
  bool absolute = false;  // reference identically zero: absolute max error
};

/// max |ref - rec| / max |ref|, or the absolute max error when the reference
/// vanishes. Throws DomainError on empty or mismatched input.
ErrorResult relative_max_error(const std::vector<double>& reference, const std::vector<double>& recovered);

}  // namespace lamiga
