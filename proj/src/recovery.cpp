#include "lamiga/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "lamiga/errors.hpp"

namespace lamiga {

std::vector<double> cumulative_trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("cumulative_trapezoid: size mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

StressProfile local_inplane_profiles(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup,
                                     double xi1, double xi2, const RecoveryOptions& opt) {
  layup.validate();
  if (opt.samples_per_ply < 2) throw DomainError("recovery: at least two samples per ply are required");
  if (field.space.num_basis() != patch.space.num_basis()) throw DomainError("recovery: field does not match patch");
  const auto deg = field.space.degrees();
  if (deg[0] < 3 || deg[1] < 3)
    throw DomainError("recovery: in-plane degree >= 3 is required for second stress derivatives");

  StressProfile prof;
  prof.xi1 = xi1;
  prof.xi2 = xi2;
  const FrameBundle f0 = frame_at(patch, {xi1, xi2, 0.0}, 1);
  prof.e = f0.a;
  prof.bottom_frame = f0;
  prof.bottom = map_eval(patch, {xi1, xi2, 0.0}, 0).X();
  const Mat3 C = f0.D;  // snapshot equals the frame at the bottom
  const std::vector<double> zb = layup.boundaries();
  for (std::size_t k = 1; k + 1 < zb.size(); ++k) prof.interface_frames.push_back(frame_at(patch, {xi1, xi2, zb[k]}, 1, prof.e));
  const std::vector<Stiffness> plies = layup.ply_stiffnesses();
  const int n = opt.samples_per_ply;
  for (int k = 0; k < layup.size(); ++k)
    for (int j = 0; j < n; ++j) {
      ProfileSample s;
      s.ply = k;
      const double z0 = zb[static_cast<std::size_t>(k)], z1 = zb[static_cast<std::size_t>(k) + 1];
      s.xi3 = j == n - 1 ? z1 : z0 + (z1 - z0) * j / (n - 1.0);
      // One-sided limit inside the ply, so fields that are only C0 at
      // interfaces are differentiated on the correct side.
      const double eps = 1e-12 * (z1 - z0);
      const double xe = std::clamp(s.xi3, z0 + eps, z1 - eps);
      s.jet = local_stress_jet(patch, field, plies[static_cast<std::size_t>(k)], {xi1, xi2, xe}, prof.e, 2);
      s.x3 = (s.jet.X - prof.bottom).dot(prof.e[2]);
      if (opt.body) {
        const BodyForceJet bj = opt.body(s.jet.X);
        s.b = C.transpose() * bj.b;
        s.grad_b = C.transpose() * bj.grad * C;
      }
      prof.samples.push_back(s);
    }
  return prof;
}

void recover_shear(StressProfile& profile, const BottomTraction& bottom) {
  profile.bottom_traction = bottom;
  const std::size_t n = profile.samples.size();
  std::vector<double> x(n), i13(n), i23(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ProfileSample& s = profile.samples[i];
    x[i] = s.x3;
    i13[i] = s.jet.d1[0][0][0] + s.jet.d1[0][1][1] + s.b(0);
    i23[i] = s.jet.d1[0][1][0] + s.jet.d1[1][1][1] + s.b(1);
  }
  const std::vector<double> c13 = cumulative_trapezoid(x, i13), c23 = cumulative_trapezoid(x, i23);
  for (std::size_t i = 0; i < n; ++i) {
    profile.samples[i].s13 = bottom.s13 - c13[i];
    profile.samples[i].s23 = bottom.s23 - c23[i];
  }
}

void recover_normal(StressProfile& profile, BottomDerivativeMode mode) {
  if (profile.samples.empty()) throw DomainError("recover_normal: empty profile");
  const BottomTraction& bt = profile.bottom_traction;
  double t1 = bt.ds13_dx1, t2 = bt.ds23_dx2;
  if (mode == BottomDerivativeMode::FrameConsistent) {
    // Bottom stress state in the moving frame (equal to the frozen one at the
    // bottom point): in-plane part from the solution, out-of-plane prescribed.
    const ProfileSample& s0 = profile.samples.front();
    Mat3 S = s0.jet.s;
    S(0, 2) = S(2, 0) = bt.s13;
    S(1, 2) = S(2, 1) = bt.s23;
    S(2, 2) = bt.s33;
    const FrameBundle& fb = profile.bottom_frame;
    // d S_ab / d x_m includes sum_p S_pb A(p, a, m) + sum_p S_ap A(p, b, m).
    for (int p = 0; p < 3; ++p) {
      t1 += S(p, 2) * fb.A(p, 0, 0) + S(0, p) * fb.A(p, 2, 0);
      t2 += S(p, 2) * fb.A(p, 1, 1) + S(1, p) * fb.A(p, 2, 1);
    }
  }
  profile.bottom_ds13_dx1 = t1;
  profile.bottom_ds23_dx2 = t2;

  auto& sm = profile.samples;
  std::size_t begin = 0;
  while (begin < sm.size()) {
    std::size_t end = begin;
    while (end < sm.size() && sm[end].ply == sm[begin].ply) ++end;
    double i13 = 0.0, i23 = 0.0;  // running integrals within the ply
    for (std::size_t i = begin; i < end; ++i) {
      const auto& d2 = sm[i].jet.d2;
      const double a = d2[0][0][0][0] + d2[0][1][0][1] + sm[i].grad_b(0, 0);
      const double b = d2[0][1][0][1] + d2[1][1][1][1] + sm[i].grad_b(1, 1);
      if (i > begin) {
        const auto& p2 = sm[i - 1].jet.d2;
        const double ap = p2[0][0][0][0] + p2[0][1][0][1] + sm[i - 1].grad_b(0, 0);
        const double bp = p2[0][1][0][1] + p2[1][1][1][1] + sm[i - 1].grad_b(1, 1);
        const double dx = sm[i].x3 - sm[i - 1].x3;
        i13 += 0.5 * dx * (a + ap);
        i23 += 0.5 * dx * (b + bp);
      }
      sm[i].ds33 = i13 + i23 - (t1 + t2) - sm[i].b(2);
    }
    // sigma13,1 and sigma23,2 at the next ply bottom. The traction vector is
    // continuous along the interface, so frozen-frame derivatives of sigma_a3
    // jump with the in-plane stress where the interface normal turns.
    t1 -= i13;
    t2 -= i23;
    if (end < sm.size() && mode == BottomDerivativeMode::FrameConsistent) {
      const FrameBundle& fi = profile.interface_frames.at(static_cast<std::size_t>(sm[begin].ply));
      const Mat3 jump = sm[end].jet.s - sm[end - 1].jet.s;
      for (int j = 0; j < 2; ++j) {
        t1 -= jump(0, j) * fi.A(2, j, 0);
        t2 -= jump(1, j) * fi.A(2, j, 1);
      }
    }
    begin = end;
  }
  std::vector<double> x(sm.size()), y(sm.size());
  for (std::size_t i = 0; i < sm.size(); ++i) {
    x[i] = sm[i].x3;
    y[i] = sm[i].ds33;
  }
  const std::vector<double> c = cumulative_trapezoid(x, y);
  for (std::size_t i = 0; i < sm.size(); ++i) sm[i].s33 = bt.s33 + c[i];
}

StressProfile recover(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup, double xi1,
                      double xi2, const BottomTraction& bottom, const RecoveryOptions& opt) {
  StressProfile prof = local_inplane_profiles(patch, field, layup, xi1, xi2, opt);
  recover_shear(prof, bottom);
  recover_normal(prof, opt.bottom_mode);
  return prof;
}

ErrorResult relative_max_error(const std::vector<double>& reference, const std::vector<double>& recovered) {
  if (reference.empty() || reference.size() != recovered.size())
    throw DomainError("relative_max_error: empty or mismatched input");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    num = std::max(num, std::abs(reference[i] - recovered[i]));
    den = std::max(den, std::abs(reference[i]));
  }
  if (den == 0.0) return {num, true};
  return {num / den, false};
}

}  // namespace lamiga
