#include "lamiga/geometry.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace lamiga {

void NurbsPatch::validate() const {
  const std::size_t n = static_cast<std::size_t>(space.num_basis());
  if (points.size() != n || weights.size() != n)
    throw GeometryError("patch: control net size does not match the tensor space");
  for (double w : weights)
    if (!(w > 0.0)) throw GeometryError("patch: weights must be strictly positive");
}

Eigen::MatrixXd NurbsPatch::homogeneous() const {
  Eigen::MatrixXd hw(static_cast<Eigen::Index>(points.size()), 4);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    hw.block<1, 3>(r, 0) = weights[i] * points[i].transpose();
    hw(r, 3) = weights[i];
  }
  return hw;
}

NurbsPatch NurbsPatch::from_homogeneous(const TensorSpace& space, const Eigen::MatrixXd& hw) {
  NurbsPatch p;
  p.space = space;
  p.points.resize(static_cast<std::size_t>(hw.rows()));
  p.weights.resize(static_cast<std::size_t>(hw.rows()));
  for (Eigen::Index i = 0; i < hw.rows(); ++i) {
    const double w = hw(i, 3);
    if (!(w > 0.0)) throw GeometryError("patch: refinement produced a non-positive weight");
    p.weights[static_cast<std::size_t>(i)] = w;
    p.points[static_cast<std::size_t>(i)] = hw.block<1, 3>(i, 0).transpose() / w;
  }
  p.validate();
  return p;
}

NurbsPatch NurbsPatch::refined(const std::array<int, 3>& counts, const std::array<int, 3>& degrees) const {
  const RefinedCoefficients r = refine(space, homogeneous(), counts, degrees);
  return from_homogeneous(r.space, r.coeffs);
}

NurbsPatch NurbsPatch::embedded(const TensorSpace& target) const {
  return from_homogeneous(target, embed(space, homogeneous(), target));
}

MapJet map_from_basis(const NurbsPatch& patch, const RationalBasis& rb) {
  MapJet mj;
  mj.order = rb.order;
  for (auto& v : mj.d) v.setZero();
  for (int f = 0; f < rb.size(); ++f) {
    const Vec3& P = patch.points[static_cast<std::size_t>(rb.indices[f])];
    const double* r = rb.jet(f);
    for (int s = 0; s < rb.nslots; ++s) mj.d[s] += r[s] * P;
  }
  if (rb.order >= 1) {
    for (int t = 0; t < 3; ++t) mj.J.col(t) = mj.d[slot1(t)];
    mj.det = mj.J.determinant();
    const double scale = mj.J.colwise().norm().prod();
    if (!(std::abs(mj.det) > 1e-13 * scale) || !std::isfinite(mj.det))
      throw GeometryError("geometry map has a singular Jacobian");
    mj.G = mj.J.inverse();
  }
  return mj;
}

MapJet map_eval(const NurbsPatch& patch, const std::array<double, 3>& xi, int order) {
  return map_from_basis(patch, nurbs_basis_ders(patch.space, patch.weights, xi, order));
}

void to_physical(const double* jet, const MapJet& mj, int order, PhysicalJet& out) {
  out.v = jet[0];
  if (order < 1) return;
  const Mat3& G = mj.G;
  for (int i = 0; i < 3; ++i)
    out.g[i] = jet[1] * G(0, i) + jet[2] * G(1, i) + jet[3] * G(2, i);
  if (order < 2) return;
  const Vec3 g(out.g[0], out.g[1], out.g[2]);
  double hp[3][3];
  for (int t = 0; t < 3; ++t)
    for (int f = t; f < 3; ++f) {
      const int s = slot2(t, f);
      hp[t][f] = hp[f][t] = jet[s] - g.dot(mj.d[s]);
    }
  double tmp[3][3];
  for (int i = 0; i < 3; ++i)
    for (int f = 0; f < 3; ++f) tmp[i][f] = G(0, i) * hp[0][f] + G(1, i) * hp[1][f] + G(2, i) * hp[2][f];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      out.h[i][j] = out.h[j][i] = tmp[i][0] * G(0, j) + tmp[i][1] * G(1, j) + tmp[i][2] * G(2, j);
  if (order < 3) return;
  Mat3 H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H(i, j) = out.h[i][j];
  const Mat3 HJ = H * mj.J;  // HJ(a, f) = sum_b h_ab J_bf
  double tp[3][3][3];
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < 3; ++f)
      for (int p = 0; p < 3; ++p) {
        const double corr = mj.d[slot2(t, p)].dot(HJ.col(f)) + mj.d[slot2(f, p)].dot(HJ.col(t)) +
                            mj.d[slot2(t, f)].dot(HJ.col(p));
        tp[t][f][p] = jet[slot3(t, f, p)] - corr - g.dot(mj.d[slot3(t, f, p)]);
      }
  double a1[3][3][3], a2[3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int f = 0; f < 3; ++f)
      for (int p = 0; p < 3; ++p) a1[i][f][p] = G(0, i) * tp[0][f][p] + G(1, i) * tp[1][f][p] + G(2, i) * tp[2][f][p];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int p = 0; p < 3; ++p) a2[i][j][p] = a1[i][0][p] * G(0, j) + a1[i][1][p] * G(1, j) + a1[i][2][p] * G(2, j);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out.t[i][j][k] = a2[i][j][0] * G(0, k) + a2[i][j][1] * G(1, k) + a2[i][j][2] * G(2, k);
}

DisplacementJet physical_derivatives(const NurbsPatch& patch, const DisplacementField& field,
                                     const RationalBasis& rb, const MapJet& mj, int order) {
  if (!(field.space == patch.space)) throw DomainError("field space differs from patch space");
  double jet[3][kNumSlots] = {};
  for (int f = 0; f < rb.size(); ++f) {
    const double* r = rb.jet(f);
    const auto row = field.coeffs.row(rb.indices[f]);
    for (int s = 0; s < rb.nslots; ++s)
      for (int c = 0; c < 3; ++c) jet[c][s] += r[s] * row(c);
  }
  DisplacementJet out;
  for (int c = 0; c < 3; ++c) to_physical(jet[c], mj, order, out.u[c]);
  return out;
}

DisplacementJet physical_derivatives(const NurbsPatch& patch, const DisplacementField& field,
                                     const std::array<double, 3>& xi, int order) {
  const RationalBasis rb = nurbs_basis_ders(patch.space, patch.weights, xi, order);
  const MapJet mj = map_from_basis(patch, rb);
  return physical_derivatives(patch, field, rb, mj, order);
}

// ---------------------------------------------------------------------------
// Frame.

namespace {

struct VecJet {
  Vec3 v;
  std::array<Vec3, 3> d;
  std::array<std::array<Vec3, 3>, 3> dd;
};

VecJet normalized(const VecJet& u, int order) {
  VecJet n;
  const double len = u.v.norm();
  if (!(len > 0.0)) throw GeometryError("frame: degenerate covariant vector");
  n.v = u.v / len;
  if (order < 1) return n;
  const Mat3 P = Mat3::Identity() - n.v * n.v.transpose();
  for (int t = 0; t < 3; ++t) n.d[t] = P * u.d[t] / len;
  if (order < 2) return n;
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < 3; ++f) {
      const Mat3 Pf = -(n.d[f] * n.v.transpose() + n.v * n.d[f].transpose());
      n.dd[t][f] = (Pf * u.d[t] + P * u.dd[t][f]) / len - P * u.d[t] * (n.v.dot(u.d[f]) / (len * len));
    }
  return n;
}

VecJet crossed(const VecJet& a, const VecJet& b, int order) {
  VecJet c;
  c.v = a.v.cross(b.v);
  if (order < 1) return c;
  for (int t = 0; t < 3; ++t) c.d[t] = a.d[t].cross(b.v) + a.v.cross(b.d[t]);
  if (order < 2) return c;
  for (int t = 0; t < 3; ++t)
    for (int f = 0; f < 3; ++f)
      c.dd[t][f] = a.dd[t][f].cross(b.v) + a.d[t].cross(b.d[f]) + a.d[f].cross(b.d[t]) + a.v.cross(b.dd[t][f]);
  return c;
}

VecJet covariant(const MapJet& mj, int dir, int order) {
  VecJet g;
  g.v = mj.d[slot1(dir)];
  if (order >= 1)
    for (int t = 0; t < 3; ++t) g.d[t] = mj.d[slot2(dir, t)];
  if (order >= 2)
    for (int t = 0; t < 3; ++t)
      for (int f = 0; f < 3; ++f) g.dd[t][f] = mj.d[slot3(dir, t, f)];
  return g;
}

}  // namespace

double FrameBundle::A(int psi, int alpha, int mu) const {
  double s = 0.0;
  for (int j = 0; j < 3; ++j) s += dX[j][psi].dot(e[alpha]) * e[mu](j);
  return s;
}

double FrameBundle::B(int psi, int alpha, int mu, int nu) const {
  double s = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) s += dXX[j][k][psi].dot(e[alpha]) * e[mu](j) * e[nu](k);
  return s;
}

FrameBundle frame_from_jet(const MapJet& mj, int order, const std::array<Vec3, 3>& snapshot) {
  if (order < 0 || order > 2) throw DomainError("frame: order must be in 0..2");
  if (mj.order < order + 1) throw DomainError("frame: map jet order too low");
  FrameBundle fb;
  fb.order = order;
  const VecJet g1 = covariant(mj, 0, order);
  const VecJet g2 = covariant(mj, 1, order);
  const VecJet c = crossed(g1, g2, order);
  if (!(c.v.norm() > 1e-14 * g1.v.norm() * g2.v.norm())) throw GeometryError("frame: g1 parallel to g2");
  const VecJet a1 = normalized(g1, order);
  const VecJet a3 = normalized(c, order);
  const VecJet a2 = crossed(a3, a1, order);
  const VecJet* as[3] = {&a1, &a2, &a3};
  for (int al = 0; al < 3; ++al) {
    fb.a[al] = as[al]->v;
    fb.D.col(al) = fb.a[al];
    fb.e[al] = snapshot[al];
    fb.C.col(al) = snapshot[al];
    if (order >= 1)
      for (int t = 0; t < 3; ++t) fb.da[t][al] = as[al]->d[t];
    if (order >= 2)
      for (int t = 0; t < 3; ++t)
        for (int f = 0; f < 3; ++f) fb.dda[t][f][al] = as[al]->dd[t][f];
  }
  if (order >= 1) {
    double jet[kNumSlots];
    PhysicalJet pj;
    for (int al = 0; al < 3; ++al)
      for (int i = 0; i < 3; ++i) {
        std::fill(std::begin(jet), std::end(jet), 0.0);
        jet[0] = fb.a[al](i);
        for (int t = 0; t < 3; ++t) jet[slot1(t)] = fb.da[t][al](i);
        if (order >= 2)
          for (int t = 0; t < 3; ++t)
            for (int f = t; f < 3; ++f) jet[slot2(t, f)] = fb.dda[t][f][al](i);
        to_physical(jet, mj, order, pj);
        for (int j = 0; j < 3; ++j) {
          fb.dX[j][al](i) = pj.g[j];
          if (order >= 2)
            for (int k = 0; k < 3; ++k) fb.dXX[j][k][al](i) = pj.h[j][k];
        }
      }
  }
  return fb;
}

FrameBundle frame_from_jet(const MapJet& mj, int order) {
  FrameBundle own = frame_from_jet(mj, 0, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()});
  return frame_from_jet(mj, order, own.a);
}

FrameBundle frame_at(const NurbsPatch& patch, const std::array<double, 3>& xi, int order) {
  return frame_from_jet(map_eval(patch, xi, order + 1), order);
}

FrameBundle frame_at(const NurbsPatch& patch, const std::array<double, 3>& xi, int order,
                     const std::array<Vec3, 3>& snapshot) {
  return frame_from_jet(map_eval(patch, xi, order + 1), order, snapshot);
}

// ---------------------------------------------------------------------------
// Builders.

TubeDimensions tube_dimensions(double S, double h) { return tube_dimensions(S, h, S * h); }

TubeDimensions tube_dimensions(double S, double h, double L) {
  if (!(S > 0.0) || !(h > 0.0) || !(L > 0.0)) throw DomainError("tube: S, h and L must be positive");
  TubeDimensions d;
  d.S = S;
  d.h = h;
  d.R = S * h;
  d.ri = d.R - 0.5 * h;
  d.ro = d.R + 0.5 * h;
  d.L = L;
  if (!(d.ri > 0.0)) throw DomainError("tube: inner radius must be positive (S > 1/2)");
  return d;
}

NurbsPatch build_quarter_cylinder(const TubeDimensions& dims) {
  NurbsPatch p;
  p.space.dirs[0] = KnotVector(1, {0, 0, 1, 1});
  p.space.dirs[1] = KnotVector(2, {0, 0, 0, 1, 1, 1});
  p.space.dirs[2] = KnotVector(1, {0, 0, 1, 1});
  const double arc[3][2] = {{0.0, 1.0}, {1.0, 1.0}, {1.0, 0.0}};
  const double warc[3] = {1.0, std::sqrt(0.5), 1.0};
  const double radius[2] = {dims.ri, dims.ro};
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 2; ++i) {
        p.points.emplace_back(i * dims.L, radius[k] * arc[j][0], radius[k] * arc[j][1]);
        p.weights.push_back(warc[j]);
      }
  p.validate();
  return p;
}

double tube_theta(const Vec3& X) { return std::atan2(X(2), X(1)); }

double tube_xi2_for_theta(const NurbsPatch& tube, double theta) {
  if (!(theta >= 0.0 && theta <= 0.5 * std::numbers::pi)) throw DomainError("tube: theta outside [0, pi/2]");
  double lo = 0.0, hi = 1.0;  // theta decreases with xi2
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tm = tube_theta(map_eval(tube, {0.5, mid, 0.5}, 0).X());
    (tm > theta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NurbsPatch build_affine(const Mat3& M, const Vec3& c) {
  NurbsPatch p;
  for (int d = 0; d < 3; ++d) p.space.dirs[d] = KnotVector(1, {0, 0, 1, 1});
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        p.points.push_back(M * Vec3(i, j, k) + c);
        p.weights.push_back(1.0);
      }
  p.validate();
  return p;
}

NurbsPatch build_box(double lx, double ly, double lz) {
  if (!(lx > 0.0) || !(ly > 0.0) || !(lz > 0.0)) throw DomainError("box: side lengths must be positive");
  return build_affine(Vec3(lx, ly, lz).asDiagonal(), Vec3::Zero());
}

// ---------------------------------------------------------------------------
// Serialization.

void write_patch(std::ostream& os, const NurbsPatch& patch) {
  os << "lamiga-patch 1\n" << std::setprecision(17);
  os << "degrees";
  for (const auto& kv : patch.space.dirs) os << ' ' << kv.degree();
  os << '\n';
  for (const auto& kv : patch.space.dirs) {
    os << "knots " << kv.knots().size();
    for (double k : kv.knots()) os << ' ' << k;
    os << '\n';
  }
  os << "points " << patch.points.size() << '\n';
  for (std::size_t i = 0; i < patch.points.size(); ++i)
    os << patch.points[i](0) << ' ' << patch.points[i](1) << ' ' << patch.points[i](2) << ' ' << patch.weights[i]
       << '\n';
}

NurbsPatch read_patch(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "lamiga-patch" || version != 1)
    throw GeometryError("patch file: bad header");
  int deg[3];
  if (!(is >> tag >> deg[0] >> deg[1] >> deg[2]) || tag != "degrees") throw GeometryError("patch file: bad degrees");
  NurbsPatch p;
  for (int d = 0; d < 3; ++d) {
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "knots") throw GeometryError("patch file: bad knot vector");
    std::vector<double> k(n);
    for (auto& v : k)
      if (!(is >> v)) throw GeometryError("patch file: truncated knot vector");
    p.space.dirs[d] = KnotVector(deg[d], std::move(k));
  }
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "points") throw GeometryError("patch file: bad point block");
  p.points.resize(n);
  p.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(is >> p.points[i](0) >> p.points[i](1) >> p.points[i](2) >> p.weights[i]))
      throw GeometryError("patch file: truncated point block");
  p.validate();
  return p;
}

}  // namespace lamiga
