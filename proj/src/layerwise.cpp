#include "lamiga/layerwise.hpp"

#include <algorithm>

namespace lamiga {

KnotVector layerwise_thickness_knots(const Layup& layup, int r, int spans_per_ply) {
  layup.validate();
  if (r < 1) throw DomainError("layerwise: thickness degree must be >= 1");
  if (spans_per_ply < 1) throw DomainError("layerwise: at least one span per ply");
  const std::vector<double> b = layup.boundaries();
  std::vector<double> k(static_cast<std::size_t>(r + 1), 0.0);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    for (int s = 1; s < spans_per_ply; ++s) k.push_back(b[i] + (b[i + 1] - b[i]) * s / spans_per_ply);
    if (i + 2 < b.size()) k.insert(k.end(), static_cast<std::size_t>(r), b[i + 1]);
  }
  k.insert(k.end(), static_cast<std::size_t>(r + 1), 1.0);
  return KnotVector(r, std::move(k));
}

LayerwiseSpace build_layerwise_space(const Layup& layup, int p, int q, int r, const std::array<int, 2>& inplane_counts,
                                     int spans_per_ply) {
  LayerwiseSpace lw;
  lw.space.dirs[0] = KnotVector::open_uniform(p, inplane_counts[0]);
  lw.space.dirs[1] = KnotVector::open_uniform(q, inplane_counts[1]);
  lw.space.dirs[2] = layerwise_thickness_knots(layup, r, spans_per_ply);
  const std::vector<double> b = layup.boundaries();
  lw.interfaces.assign(b.begin() + 1, b.end() - 1);
  lw.spans_per_ply = spans_per_ply;
  lw.thickness_count = lw.space.dirs[2].num_basis();
  return lw;
}

QuadratureRule layerwise_space_rule(const LayerwiseSpace& lw, const Layup& layup) {
  return ply_split_rule(lw.space, layup, 0, lw.space.dirs[2].degree() + 1);
}

GalerkinSolution solve_layerwise(const NurbsPatch& patch, const LayerwiseSpace& lw, const Layup& layup,
                                 const Eigen::VectorXd& f, const Dirichlet& bcs) {
  if (!(patch.space == lw.space)) throw DomainError("solve_layerwise: patch is not on the layerwise space");
  const std::vector<Stiffness> plies = layup.ply_stiffnesses();
  LinearSystem sys = assemble(patch, plies, layerwise_space_rule(lw, layup));
  if (f.size() != sys.ndof) throw DomainError("solve_layerwise: load size does not match the space");
  sys.f = f;
  return solve(sys, bcs, patch.space);
}

LayerwiseSolution solve_layerwise_tube(const NurbsPatch& tube, const LayerwiseSpace& lw, const Layup& layup,
                                       double sigma0, double L) {
  LayerwiseSolution out;
  out.patch = tube.embedded(lw.space);
  out.solution = solve_layerwise(out.patch, lw, layup, assemble_tube_load(out.patch, sigma0, L),
                                 tube_bcs(out.patch.space));
  return out;
}

Mat3 layerwise_local_stress(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup, int ply,
                            const std::array<double, 3>& xi, const std::array<Vec3, 3>& snapshot) {
  if (ply < 0 || ply >= layup.size()) throw DomainError("layerwise_local_stress: ply index out of range");
  const std::vector<double> b = layup.boundaries();
  const double lo = b[static_cast<std::size_t>(ply)], hi = b[static_cast<std::size_t>(ply) + 1];
  const double eps = 1e-12 * (hi - lo);
  std::array<double, 3> x = xi;
  x[2] = std::clamp(x[2], lo + eps, hi - eps);
  return local_stress_jet(patch, field, layup.ply_stiffness(ply), x, snapshot, 0).s;
}

}  // namespace lamiga
