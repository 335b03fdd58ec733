#include "lamiga/collocation.hpp"

#include <cmath>

namespace lamiga {

std::vector<CollocationPoint> collocation_grid(const TensorSpace& space) {
  std::array<std::vector<double>, 3> g;
  for (int d = 0; d < 3; ++d) g[d] = greville(space.dirs[d]);
  const auto n = space.counts();
  std::vector<CollocationPoint> pts(static_cast<std::size_t>(space.num_basis()));
  for (int lin = 0; lin < space.num_basis(); ++lin) {
    CollocationPoint& p = pts[static_cast<std::size_t>(lin)];
    p.index = space.multi_index(lin);
    for (int d = 0; d < 3; ++d) {
      p.xi[d] = g[d][static_cast<std::size_t>(p.index[d])];
      if (p.index[d] == 0) p.faces.push_back(static_cast<Face>(2 * d));
      if (p.index[d] == n[d] - 1) p.faces.push_back(static_cast<Face>(2 * d + 1));
    }
    const std::size_t nf = p.faces.size();
    p.role = nf == 0 ? PointRole::Interior : nf == 1 ? PointRole::Face : nf == 2 ? PointRole::Edge : PointRole::Corner;
  }
  return pts;
}

namespace {

struct PointBasis {
  RationalBasis rb;
  MapJet mj;
  std::vector<PhysicalJet> phys;
};

PointBasis point_basis(const NurbsPatch& patch, const std::array<double, 3>& xi, int order) {
  PointBasis pb;
  pb.rb = nurbs_basis_ders(patch.space, patch.weights, xi, std::max(order, 1));
  pb.mj = map_from_basis(patch, pb.rb);
  pb.phys.resize(static_cast<std::size_t>(pb.rb.size()));
  for (int f = 0; f < pb.rb.size(); ++f) to_physical(pb.rb.jet(f), pb.mj, order, pb.phys[static_cast<std::size_t>(f)]);
  return pb;
}

RowBlock empty_block(const PointBasis& pb) {
  RowBlock b;
  b.basis = pb.rb.indices;
  b.coef = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 3 * pb.rb.size());
  b.X = pb.mj.X();
  return b;
}

}  // namespace

RowBlock interior_rows(const NurbsPatch& patch, const Stiffness& C_local, const std::array<double, 3>& xi) {
  const PointBasis pb = point_basis(patch, xi, 2);
  const FrameBundle fb = frame_from_jet(pb.mj, 1);
  std::array<Mat3, 3> dQ{};
  std::array<std::array<Mat3, 3>, 3> ddQ{};
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) dQ[static_cast<std::size_t>(m)](i, a) = fb.At(i, a, m);
  const TensorJet T = rotate_jet(C_local.full, fb.D, dQ, ddQ, 1);
  double V[3][3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j) V[i][k][l] += T.d1[static_cast<std::size_t>(j)](i, j, k, l);
  RowBlock b = empty_block(pb);
  for (int f = 0; f < pb.rb.size(); ++f) {
    const PhysicalJet& N = pb.phys[static_cast<std::size_t>(f)];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) {
          s += V[i][k][l] * N.g[l];
          for (int j = 0; j < 3; ++j) s += T.v(i, j, k, l) * N.h[l][j];
        }
        b.coef(i, 3 * f + k) = s;
      }
  }
  return b;
}

RowBlock traction_rows(const NurbsPatch& patch, const Stiffness& C_local, const std::array<double, 3>& xi,
                       const Vec3& n) {
  const PointBasis pb = point_basis(patch, xi, 1);
  const FrameBundle fb = frame_from_jet(pb.mj, 0);
  const Stiffness Cg = rotate_to_global(C_local, fb.D);
  RowBlock b = empty_block(pb);
  for (int f = 0; f < pb.rb.size(); ++f) {
    const PhysicalJet& N = pb.phys[static_cast<std::size_t>(f)];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
          for (int l = 0; l < 3; ++l) s += Cg(i, j, k, l) * n(j) * N.g[l];
        b.coef(i, 3 * f + k) = s;
      }
  }
  return b;
}

RowBlock displacement_rows(const NurbsPatch& patch, const std::array<double, 3>& xi) {
  const PointBasis pb = point_basis(patch, xi, 0);
  RowBlock b = empty_block(pb);
  for (int f = 0; f < pb.rb.size(); ++f)
    for (int k = 0; k < 3; ++k) b.coef(k, 3 * f + k) = pb.rb(f, 0);
  return b;
}

Vec3 outward_normal(const NurbsPatch& patch, Face face, const std::array<double, 3>& xi) {
  const MapJet mj = map_eval(patch, xi, 1);
  const int d = static_cast<int>(face) / 2;
  const bool upper = static_cast<int>(face) % 2 == 1;
  // grad xi_d is normal to the face and points to increasing xi_d.
  const Vec3 g = mj.G.row(d).transpose();
  return (upper ? 1.0 : -1.0) * g.normalized();
}

StrongSystem assemble_collocation(const NurbsPatch& patch, const Stiffness& C_local, const CollocationBCs& bcs,
                                  const BodyForceFn& body) {
  const std::vector<CollocationPoint> pts = collocation_grid(patch.space);
  const int n = 3 * patch.space.num_basis();
  StrongSystem sys;
  sys.rhs = Eigen::VectorXd::Zero(n);
  sys.interior.assign(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Triplet<double>> trip;
  auto emit = [&](int row, const RowBlock& b, int i, double scale) {
    for (std::size_t f = 0; f < b.basis.size(); ++f)
      for (int k = 0; k < 3; ++k) {
        const double v = scale * b.coef(i, 3 * static_cast<int>(f) + k);
        if (v != 0.0) trip.emplace_back(row, dof_of(b.basis[f], k), v);
      }
  };
  // Replaced rows are assembled separately and merged after pin handling.
  std::vector<char> pinned(static_cast<std::size_t>(n), 0);
  for (const PointConstraint& pc : bcs.pins) {
    if (pc.point < 0 || pc.point >= patch.space.num_basis() || pc.comp < 0 || pc.comp > 2)
      throw DomainError("collocation: pin out of range");
    pinned[static_cast<std::size_t>(dof_of(pc.point, pc.comp))] = 1;
  }
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const CollocationPoint& cp = pts[p];
    const int base = 3 * static_cast<int>(p);
    if (cp.role == PointRole::Interior) {
      const RowBlock b = interior_rows(patch, C_local, cp.xi);
      const Vec3 bf = body ? body(b.X) : Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        if (pinned[static_cast<std::size_t>(base + i)]) continue;
        emit(base + i, b, i, 1.0);
        sys.rhs(base + i) = -bf(i);
        sys.interior[static_cast<std::size_t>(base + i)] = 1;
      }
      continue;
    }
    std::array<bool, 3> fixed{false, false, false};
    Vec3 value = Vec3::Zero();
    const RowBlock disp = displacement_rows(patch, cp.xi);
    for (Face f : cp.faces) {
      const FaceCondition& fc = bcs.faces[static_cast<std::size_t>(f)];
      for (int k = 0; k < 3; ++k) {
        if (!fc.fixed[static_cast<std::size_t>(k)]) continue;
        const double v = fc.displacement ? fc.displacement(disp.X)(k) : 0.0;
        if (fixed[static_cast<std::size_t>(k)] && std::abs(v - value(k)) > 1e-14 * (1.0 + std::abs(v)))
          throw DomainError("collocation: conflicting Dirichlet values at a boundary point");
        fixed[static_cast<std::size_t>(k)] = true;
        value(k) = v;
      }
    }
    for (int k = 0; k < 3; ++k) {
      if (pinned[static_cast<std::size_t>(base + k)] || !fixed[static_cast<std::size_t>(k)]) continue;
      emit(base + k, disp, k, 1.0);
      sys.rhs(base + k) = value(k);
    }
    for (Face f : cp.faces) {
      const FaceCondition& fc = bcs.faces[static_cast<std::size_t>(f)];
      const Vec3 nrm = outward_normal(patch, f, cp.xi);
      const RowBlock tr = traction_rows(patch, C_local, cp.xi, nrm);
      const Vec3 t = fc.traction ? fc.traction(tr.X, nrm) : Vec3::Zero();
      for (int k = 0; k < 3; ++k) {
        if (pinned[static_cast<std::size_t>(base + k)] || fixed[static_cast<std::size_t>(k)]) continue;
        emit(base + k, tr, k, 1.0);
        sys.rhs(base + k) += t(k);
      }
    }
  }
  for (const PointConstraint& pc : bcs.pins) {
    const RowBlock disp = displacement_rows(patch, pts[static_cast<std::size_t>(pc.point)].xi);
    const int row = dof_of(pc.point, pc.comp);
    emit(row, disp, pc.comp, 1.0);
    sys.rhs(row) = pc.value;
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

CollocationSolution solve_collocation(const NurbsPatch& patch, const Stiffness& C_local, const CollocationBCs& bcs,
                                      const BodyForceFn& body) {
  const StrongSystem sys = assemble_collocation(patch, C_local, bcs, body);
  CollocationSolution sol;
  const Eigen::VectorXd u = solve_general(sys.A, sys.rhs, &sol.info);
  const Eigen::VectorXd r = sys.A * u - sys.rhs;
  double rmax = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (sys.interior[static_cast<std::size_t>(i)]) rmax = std::max(rmax, std::abs(r(i)));
  const double bmax = sys.rhs.cwiseAbs().maxCoeff();
  sol.interior_residual = bmax > 0.0 ? rmax / bmax : rmax;
  sol.field.space = patch.space;
  sol.field.coeffs = Eigen::Map<const CoeffMatrix>(u.data(), patch.space.num_basis(), 3);
  return sol;
}

CollocationBCs tube_collocation_bcs(double sigma0, double L) {
  CollocationBCs bc;
  for (Face f : {Face::Xi1Min, Face::Xi1Max}) bc.faces[static_cast<std::size_t>(f)].fixed = {false, true, true};
  bc.faces[static_cast<std::size_t>(Face::Xi2Min)].fixed = {false, true, false};
  bc.faces[static_cast<std::size_t>(Face::Xi2Max)].fixed = {false, false, true};
  bc.faces[static_cast<std::size_t>(Face::Xi3Min)].traction = [sigma0, L](const Vec3& X, const Vec3& n) -> Vec3 {
    return tube_pressure(X, sigma0, L) * n;
  };
  bc.pins.push_back({0, 0, 0.0});
  return bc;
}

}  // namespace lamiga
