#pragma once

// Gauss-Legendre line rules and tensor-product rules over knot spans, with the
// through-thickness points grouped and tagged per ply.

#include <array>
#include <vector>

#include "lamiga/material.hpp"
#include "lamiga/spline.hpp"

namespace lamiga {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1, 1], n >= 1.
GaussRule gauss_legendre(int n);

struct LinePoint {
  double xi = 0.0;
  double weight = 0.0;
  int span = 0;  // knot-vector index of the containing span
  int ply = 0;
};

using LineRule = std::vector<LinePoint>;

/// n points per nonempty span.
LineRule span_rule(const KnotVector& kv, int n);
/// n points per sub-interval obtained by cutting every span at the normalized
/// ply boundaries; each point is tagged with its ply.
LineRule ply_rule(const KnotVector& kv, const std::vector<double>& boundaries, int n);

/// Tensor product of three line rules.
struct QuadratureRule {
  std::array<LineRule, 3> lines;

  std::size_t num_points() const { return lines[0].size() * lines[1].size() * lines[2].size(); }
  double total_weight() const;
};

/// In-plane n_inplane points per span (0 selects degree+1) and r+1 points per
/// ply through the thickness. Requires a single span through the thickness,
/// otherwise throws UnsupportedError.
QuadratureRule layerwise_rule(const TensorSpace& space, const Layup& layup, int n_inplane = 0);
/// Per-ply thickness points for spaces with several thickness spans (ply
/// boundaries cut spans where needed).
QuadratureRule ply_split_rule(const TensorSpace& space, const Layup& layup, int n_inplane = 0,
                              int n_thickness = 0);
/// Standard degree+1 points per span in every direction, all points ply 0.
QuadratureRule homogeneous_rule(const TensorSpace& space, int extra = 0);

}  // namespace lamiga
