#include "lamiga/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lamiga {

std::vector<int> face_basis_indices(const TensorSpace& space, Face face) {
  const int d = static_cast<int>(face) / 2;
  const bool upper = static_cast<int>(face) % 2 == 1;
  const auto n = space.counts();
  const int fixed = upper ? n[d] - 1 : 0;
  std::vector<int> out;
  for (int i2 = 0; i2 < n[2]; ++i2)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i0 = 0; i0 < n[0]; ++i0) {
        const int idx[3] = {i0, i1, i2};
        if (idx[d] == fixed) out.push_back(space.index(i0, i1, i2));
      }
  return out;
}

namespace {

// Contiguous range [lo, hi] of basis functions whose support shares a
// nonempty span with function i.
struct Neighbors1D {
  std::vector<int> lo, hi;
};

Neighbors1D neighbors(const KnotVector& kv) {
  const auto& k = kv.knots();
  const int p = kv.degree(), n = kv.num_basis();
  Neighbors1D nb;
  nb.lo.resize(n);
  nb.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    int lo = i, hi = i;
    while (lo > 0 && std::max(k[i], k[lo - 1]) < std::min(k[i + p + 1], k[lo + p])) --lo;
    while (hi + 1 < n && std::max(k[i], k[hi + 1]) < std::min(k[i + p + 1], k[hi + 1 + p + 1])) ++hi;
    nb.lo[i] = lo;
    nb.hi[i] = hi;
  }
  return nb;
}

// Upper-triangular CSC pattern over DOFs with arithmetic position lookup.
struct Pattern {
  TensorSpace space;
  std::array<Neighbors1D, 3> nb;
  std::array<int, 3> n{};

  explicit Pattern(const TensorSpace& s) : space(s), n(s.counts()) {
    for (int d = 0; d < 3; ++d) nb[d] = neighbors(s.dirs[d]);
  }
  int len(int d, int b) const { return nb[d].hi[b] - nb[d].lo[b] + 1; }
  // Position of node a in the sorted neighbor list of node b.
  int pos(const std::array<int, 3>& a, const std::array<int, 3>& b) const {
    return (a[0] - nb[0].lo[b[0]]) + len(0, b[0]) * ((a[1] - nb[1].lo[b[1]]) + len(1, b[1]) * (a[2] - nb[2].lo[b[2]]));
  }

  SpMat build() const {
    const int nn = space.num_basis();
    const int ndof = 3 * nn;
    std::vector<int> outer(ndof + 1, 0);
    for (int b = 0; b < nn; ++b) {
      const auto bi = space.multi_index(b);
      const int pb = pos(bi, bi);
      for (int j = 0; j < 3; ++j) outer[3 * b + j + 1] = 3 * pb + j + 1;
    }
    for (int c = 0; c < ndof; ++c) outer[c + 1] += outer[c];
    SpMat K(ndof, ndof);
    K.resizeNonZeros(outer[ndof]);
    std::copy(outer.begin(), outer.end(), K.outerIndexPtr());
    int* inner = K.innerIndexPtr();
    for (int b = 0; b < nn; ++b) {
      const auto bi = space.multi_index(b);
      std::vector<int> rows;
      for (int a2 = nb[2].lo[bi[2]]; a2 <= nb[2].hi[bi[2]]; ++a2)
        for (int a1 = nb[1].lo[bi[1]]; a1 <= nb[1].hi[bi[1]]; ++a1)
          for (int a0 = nb[0].lo[bi[0]]; a0 <= nb[0].hi[bi[0]]; ++a0) {
            const int a = space.index(a0, a1, a2);
            if (a > b) goto done;
            rows.push_back(a);
          }
    done:
      for (int j = 0; j < 3; ++j) {
        int* col = inner + outer[3 * b + j];
        int w = 0;
        for (int a : rows)
          for (int i = 0; i < 3; ++i) {
            if (a == b && i > j) break;
            col[w++] = 3 * a + i;
          }
      }
    }
    std::fill(K.valuePtr(), K.valuePtr() + outer[ndof], 0.0);
    return K;
  }
};

// Points of one line rule grouped by span.
std::vector<std::pair<std::size_t, std::size_t>> group_by_span(const LineRule& line) {
  std::vector<std::pair<std::size_t, std::size_t>> g;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (g.empty() || line[i].span != line[g.back().first].span) g.push_back({i, i});
    g.back().second = i + 1;
  }
  return g;
}

Vec3 face_normal_and_area(const MapJet& mj, int d, bool upper, double& area) {
  const Vec3 t1 = mj.J.col((d + 1) % 3);
  const Vec3 t2 = mj.J.col((d + 2) % 3);
  Vec3 c = t1.cross(t2);
  area = c.norm();
  c /= area;
  if (mj.det < 0) c = -c;
  return upper ? c : Vec3(-c);
}

}  // namespace

LinearSystem assemble(const NurbsPatch& patch, std::span<const Stiffness> ply_stiffness, const QuadratureRule& rule) {
  patch.validate();
  const TensorSpace& space = patch.space;
  Pattern pattern(space);
  LinearSystem sys;
  sys.K = pattern.build();
  sys.ndof = static_cast<int>(sys.K.rows());
  sys.f = Eigen::VectorXd::Zero(sys.ndof);
  double* val = sys.K.valuePtr();
  const int* outer = sys.K.outerIndexPtr();

  std::array<std::vector<BasisTable>, 3> tables;
  for (int d = 0; d < 3; ++d)
    for (const auto& p : rule.lines[d]) tables[d].push_back(eval_basis_ders(space.dirs[d], p.xi, 1));
  std::array<std::vector<std::pair<std::size_t, std::size_t>>, 3> groups;
  for (int d = 0; d < 3; ++d) groups[d] = group_by_span(rule.lines[d]);

  const auto deg = space.degrees();
  const int nfn = (deg[0] + 1) * (deg[1] + 1) * (deg[2] + 1);
  RationalBasis rb;
  Eigen::MatrixXd Gs, Hs, Kij;
  Eigen::VectorXd wcol;
  std::vector<std::array<double, 81>> W;

  for (const auto& g2 : groups[2])
    for (const auto& g1 : groups[1])
      for (const auto& g0 : groups[0]) {
        const std::size_t n0 = g0.second - g0.first, n1 = g1.second - g1.first, n2 = g2.second - g2.first;
        const Eigen::Index nq = static_cast<Eigen::Index>(n0 * n1 * n2);
        Gs.setZero(3 * nq, nfn);
        W.resize(static_cast<std::size_t>(nq));
        if (wcol.size() < nq) wcol.resize(nq);
        std::vector<int> idx;
        Eigen::Index q = 0;
        for (std::size_t c = g2.first; c < g2.second; ++c)
          for (std::size_t b = g1.first; b < g1.second; ++b)
            for (std::size_t a = g0.first; a < g0.second; ++a, ++q) {
              rational_basis(space, patch.weights, {tables[0][a], tables[1][b], tables[2][c]}, 1, rb);
              if (idx.empty()) idx = rb.indices;
              const MapJet mj = map_from_basis(patch, rb);
              const double w = rule.lines[0][a].weight * rule.lines[1][b].weight * rule.lines[2][c].weight *
                               std::abs(mj.det);
              const int ply = rule.lines[2][c].ply;
              if (ply < 0 || ply >= static_cast<int>(ply_stiffness.size()))
                throw DomainError("assemble: quadrature ply tag outside the layup");
              const FrameBundle fb = frame_from_jet(mj, 0);
              const Stiffness Cg = rotate_to_global(ply_stiffness[static_cast<std::size_t>(ply)], fb.D);
              for (int m = 0; m < 81; ++m) W[static_cast<std::size_t>(q)][m] = w * Cg.full.c[m];
              for (int f = 0; f < rb.size(); ++f) {
                const double* r = rb.jet(f);
                for (int k = 0; k < 3; ++k)
                  Gs(k * nq + q, f) = r[1] * mj.G(0, k) + r[2] * mj.G(1, k) + r[3] * mj.G(2, k);
              }
            }
        // K^{ij}_{ab} = sum_q sum_kl dR_a/dX_k C_ikjl dR_b/dX_l w
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            Hs.setZero(3 * nq, nfn);
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l) {
                const int m = ((i * 3 + k) * 3 + j) * 3 + l;
                double cmax = 0.0;
                for (Eigen::Index p = 0; p < nq; ++p) {
                  wcol(p) = W[static_cast<std::size_t>(p)][m];
                  cmax = std::max(cmax, std::abs(wcol(p)));
                }
                if (cmax == 0.0) continue;
                Hs.middleRows(k * nq, nq).noalias() += wcol.head(nq).asDiagonal() * Gs.middleRows(l * nq, nq);
              }
            Kij.noalias() = Gs.transpose() * Hs;
            for (int fa = 0; fa < nfn; ++fa) {
              const int A = idx[static_cast<std::size_t>(fa)];
              const auto ai = space.multi_index(A);
              for (int fb = 0; fb < nfn; ++fb) {
                const int B = idx[static_cast<std::size_t>(fb)];
                // Entry (3A+i, 3B+j) or its mirror, whichever is upper.
                // Diagonal blocks are symmetric and fill their own mirror.
                if (3 * A + i <= 3 * B + j) {
                  const auto bi = space.multi_index(B);
                  val[outer[3 * B + j] + 3 * pattern.pos(ai, bi) + i] += Kij(fa, fb);
                } else if (i != j) {
                  const auto bi = space.multi_index(B);
                  val[outer[3 * A + i] + 3 * pattern.pos(bi, ai) + j] += Kij(fa, fb);
                }
              }
            }
          }
      }
  return sys;
}

Eigen::VectorXd assemble_traction(const NurbsPatch& patch, Face face, const TractionFn& t, int extra) {
  const TensorSpace& space = patch.space;
  const int d = static_cast<int>(face) / 2;
  const bool upper = static_cast<int>(face) % 2 == 1;
  const int da = (d + 1) % 3, db = (d + 2) % 3;
  const LineRule la = span_rule(space.dirs[da], space.dirs[da].degree() + 1 + extra);
  const LineRule lb = span_rule(space.dirs[db], space.dirs[db].degree() + 1 + extra);
  const double xf = upper ? space.dirs[d].back() : space.dirs[d].front();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(3 * space.num_basis());
  for (const auto& pa : la)
    for (const auto& pb : lb) {
      std::array<double, 3> xi{};
      xi[d] = xf;
      xi[da] = pa.xi;
      xi[db] = pb.xi;
      const RationalBasis rb = nurbs_basis_ders(space, patch.weights, xi, 1);
      const MapJet mj = map_from_basis(patch, rb);
      double area = 0.0;
      const Vec3 n = face_normal_and_area(mj, d, upper, area);
      const Vec3 tr = t(mj.X(), n) * (area * pa.weight * pb.weight);
      for (int fn = 0; fn < rb.size(); ++fn)
        for (int c = 0; c < 3; ++c) f(dof_of(rb.indices[fn], c)) += rb(fn, 0) * tr(c);
    }
  return f;
}

Eigen::VectorXd assemble_body_force(const NurbsPatch& patch, const QuadratureRule& rule, const BodyForceFn& b) {
  const TensorSpace& space = patch.space;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(3 * space.num_basis());
  std::array<std::vector<BasisTable>, 3> tables;
  for (int d = 0; d < 3; ++d)
    for (const auto& p : rule.lines[d]) tables[d].push_back(eval_basis_ders(space.dirs[d], p.xi, 1));
  RationalBasis rb;
  for (std::size_t c = 0; c < rule.lines[2].size(); ++c)
    for (std::size_t bb = 0; bb < rule.lines[1].size(); ++bb)
      for (std::size_t a = 0; a < rule.lines[0].size(); ++a) {
        rational_basis(space, patch.weights, {tables[0][a], tables[1][bb], tables[2][c]}, 1, rb);
        const MapJet mj = map_from_basis(patch, rb);
        const double w =
            rule.lines[0][a].weight * rule.lines[1][bb].weight * rule.lines[2][c].weight * std::abs(mj.det);
        const Vec3 bf = b(mj.X()) * w;
        for (int fn = 0; fn < rb.size(); ++fn)
          for (int k = 0; k < 3; ++k) f(dof_of(rb.indices[fn], k)) += rb(fn, 0) * bf(k);
      }
  return f;
}

void Dirichlet::set(int dof, double value) {
  if (dof < 0) throw DomainError("Dirichlet: negative DOF");
  if (static_cast<std::size_t>(dof) >= index_.size()) index_.resize(static_cast<std::size_t>(dof) + 1, 0);
  const int at = index_[static_cast<std::size_t>(dof)];
  if (at > 0) {
    if (entries_[static_cast<std::size_t>(at - 1)].second != value)
      throw DomainError("Dirichlet: conflicting values prescribed for one DOF");
    return;
  }
  entries_.emplace_back(dof, value);
  index_[static_cast<std::size_t>(dof)] = static_cast<int>(entries_.size());
}

void Dirichlet::set_face(const TensorSpace& space, Face face, int comp, double value) {
  for (int b : face_basis_indices(space, face)) set(dof_of(b, comp), value);
}

bool Dirichlet::contains(int dof) const {
  return dof >= 0 && static_cast<std::size_t>(dof) < index_.size() && index_[static_cast<std::size_t>(dof)] > 0;
}

GalerkinSolution solve(const LinearSystem& system, const Dirichlet& bcs, const TensorSpace& space) {
  const int n = system.ndof;
  if (n != 3 * space.num_basis()) throw DomainError("solve: system size does not match the space");
  Eigen::VectorXd uc = Eigen::VectorXd::Zero(n);
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (const auto& [dof, v] : bcs.entries()) {
    if (dof >= n) throw DomainError("solve: Dirichlet DOF out of range");
    fixed[static_cast<std::size_t>(dof)] = 1;
    uc(dof) = v;
  }
  Eigen::VectorXd rhs = system.f - system.K.selfadjointView<Eigen::Upper>() * uc;
  SpMat Kc = system.K;
  for (int c = 0; c < n; ++c) {
    for (SpMat::InnerIterator it(Kc, c); it; ++it) {
      const bool fr = fixed[static_cast<std::size_t>(it.row())], fc = fixed[static_cast<std::size_t>(c)];
      if (fr || fc) it.valueRef() = (it.row() == c) ? 1.0 : 0.0;
    }
    if (fixed[static_cast<std::size_t>(c)]) rhs(c) = uc(c);
  }
  GalerkinSolution sol;
  const Eigen::VectorXd u = solve_spd_upper(Kc, rhs, &sol.info);
  sol.reactions = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd r = system.K.selfadjointView<Eigen::Upper>() * u - system.f;
  for (int d = 0; d < n; ++d)
    if (fixed[static_cast<std::size_t>(d)]) sol.reactions(d) = r(d);
  sol.field.space = space;
  sol.field.coeffs = Eigen::Map<const CoeffMatrix>(u.data(), space.num_basis(), 3);
  return sol;
}

double tube_pressure(const Vec3& X, double sigma0, double L) {
  return sigma0 * std::cos(4.0 * tube_theta(X)) * std::sin(std::numbers::pi * X(0) / L);
}

Eigen::VectorXd assemble_tube_load(const NurbsPatch& tube, double sigma0, double L) {
  return assemble_traction(tube, Face::Xi3Min,
                           [&](const Vec3& X, const Vec3& n) -> Vec3 { return tube_pressure(X, sigma0, L) * n; });
}

Dirichlet tube_bcs(const TensorSpace& space) {
  Dirichlet bc;
  for (Face f : {Face::Xi1Min, Face::Xi1Max}) {
    bc.set_face(space, f, 1, 0.0);
    bc.set_face(space, f, 2, 0.0);
  }
  bc.set_face(space, Face::Xi2Min, 1, 0.0);
  bc.set_face(space, Face::Xi2Max, 2, 0.0);
  bc.set(dof_of(0, 0), 0.0);
  return bc;
}

}  // namespace lamiga
