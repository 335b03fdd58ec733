#pragma once

// C0 layerwise reference discretization: one patch whose thickness knot
// vector repeats every ply interface r times, solved with per-ply quadrature
// and sampled with the stiffness of the requested side of an interface.

#include <array>
#include <vector>

#include "lamiga/galerkin.hpp"
#include "lamiga/stress.hpp"

namespace lamiga {

struct LayerwiseSpace {
  TensorSpace space;
  std::vector<double> interfaces;  // normalized interior ply boundaries
  int spans_per_ply = 1;
  int thickness_count = 0;  // (r + spans_per_ply - 1) * n_plies + 1
};

/// Thickness knots of degree r: ends repeated r+1 times, every interface r
/// times, and spans_per_ply - 1 uniform simple knots inside each ply.
KnotVector layerwise_thickness_knots(const Layup& layup, int r, int spans_per_ply = 1);

/// In-plane open uniform knots of degree p, q with the given control counts.
LayerwiseSpace build_layerwise_space(const Layup& layup, int p, int q, int r, const std::array<int, 2>& inplane_counts,
                                     int spans_per_ply = 1);

struct LayerwiseSolution {
  NurbsPatch patch;  // geometry represented on the layerwise space
  GalerkinSolution solution;
};

/// Per-ply Gauss rule with r+1 thickness points per ply sub-interval.
QuadratureRule layerwise_space_rule(const LayerwiseSpace& lw, const Layup& layup);

/// Layerwise stiffness on `patch` (already on the layerwise space) with load
/// `f` and constraints `bcs`.
GalerkinSolution solve_layerwise(const NurbsPatch& patch, const LayerwiseSpace& lw, const Layup& layup,
                                 const Eigen::VectorXd& f, const Dirichlet& bcs);

/// Tube benchmark on the layerwise space: embeds the tube geometry, applies the
/// inner pressure and the benchmark constraints.
LayerwiseSolution solve_layerwise_tube(const NurbsPatch& tube, const LayerwiseSpace& lw, const Layup& layup,
                                       double sigma0, double L);

/// Constitutive stress in the snapshot frame from ply `ply`; xi3 is clamped
/// into that ply so interface samples use the one-sided limit of the ply.
Mat3 layerwise_local_stress(const NurbsPatch& patch, const DisplacementField& field, const Layup& layup, int ply,
                            const std::array<double, 3>& xi, const std::array<Vec3, 3>& snapshot);

}  // namespace lamiga
