#pragma once

// Univariate B-spline bases, trivariate tensor-product NURBS bases with all
// mixed partials up to third order, Greville abscissae and refinement.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lamiga/errors.hpp"

namespace lamiga {

/// Maximum supported polynomial degree in any direction.
inline constexpr int kMaxDegree = 12;

/// Open knot vector of a univariate B-spline basis.
class KnotVector {
 public:
  KnotVector() = default;
  /// Throws DomainError unless the sequence is nondecreasing, open (end knots
  /// repeated degree+1 times) and has at least one nonempty span.
  KnotVector(int degree, std::vector<double> knots);

  /// Open knot vector on [0,1] with uniformly spaced interior knots.
  static KnotVector open_uniform(int degree, int num_basis);

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

  /// Distinct knot values, ascending.
  std::vector<double> breakpoints() const;
  int multiplicity(double value) const;
  /// Number of nonempty knot spans.
  int num_spans() const { return static_cast<int>(breakpoints().size()) - 1; }
  /// Knot-vector indices i of all nonempty spans [knots[i], knots[i+1]).
  std::vector<int> span_indices() const;

  /// Same knot vector with `value` inserted `times` times.
  KnotVector with_inserted(double value, int times = 1) const;
  /// Knot vector whose degree is raised by `t`, every distinct knot gaining t
  /// in multiplicity (the space of the result contains this one).
  KnotVector elevated(int t) const;
  /// True when every function of `coarse` lies in the span of this basis.
  bool contains(const KnotVector& coarse) const;

  bool operator==(const KnotVector&) const = default;

 private:
  int degree_ = 0;
  std::vector<double> knots_;
};

/// Index i with xi in [knots[i], knots[i+1]); xi equal to the last knot maps
/// to the last nonempty span. Throws DomainError outside the knot range.
int find_span(const KnotVector& kv, double xi);

/// Values and derivatives of the degree+1 functions active on one span.
struct BasisTable {
  int span = 0;
  int degree = 0;
  int order = 0;
  std::vector<double> ders;  // (order+1) x (degree+1), row k = k-th derivative

  int first_index() const { return span - degree; }
  int size() const { return degree + 1; }
  double operator()(int k, int j) const { return ders[k * (degree + 1) + j]; }
};

/// Cox-de Boor evaluation with derivatives up to `max_order` (<= 3). Rows
/// beyond the degree are zero.
BasisTable eval_basis_ders(const KnotVector& kv, double xi, int max_order);

/// Knot averages of `degree` consecutive knots, one per basis function.
std::vector<double> greville(const KnotVector& kv);

/// Trivariate tensor-product space. Direction 0 and 1 are in-plane, direction
/// 2 is through the thickness. Linear index: i0 + n0 * (i1 + n1 * i2).
struct TensorSpace {
  std::array<KnotVector, 3> dirs;

  std::array<int, 3> counts() const {
    return {dirs[0].num_basis(), dirs[1].num_basis(), dirs[2].num_basis()};
  }
  std::array<int, 3> degrees() const {
    return {dirs[0].degree(), dirs[1].degree(), dirs[2].degree()};
  }
  int num_basis() const {
    const auto n = counts();
    return n[0] * n[1] * n[2];
  }
  int index(int i0, int i1, int i2) const {
    const auto n = counts();
    return i0 + n[0] * (i1 + n[1] * i2);
  }
  std::array<int, 3> multi_index(int linear) const {
    const auto n = counts();
    return {linear % n[0], (linear / n[0]) % n[1], linear / (n[0] * n[1])};
  }
  bool operator==(const TensorSpace&) const = default;
};

// ---------------------------------------------------------------------------
// Multi-index bookkeeping for trivariate derivatives up to order 3.
// Slot 0 is the value, 1..3 first derivatives, 4..9 second, 10..19 third.

inline constexpr int kNumSlots = 20;

constexpr int num_slots(int order) {
  return order <= 0 ? 1 : order == 1 ? 4 : order == 2 ? 10 : 20;
}

struct MultiIndex {
  int e[3];
  constexpr int total() const { return e[0] + e[1] + e[2]; }
};

inline constexpr std::array<MultiIndex, kNumSlots> kSlots = {{
    {{0, 0, 0}},
    {{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}},
    {{2, 0, 0}}, {{1, 1, 0}}, {{1, 0, 1}}, {{0, 2, 0}}, {{0, 1, 1}}, {{0, 0, 2}},
    {{3, 0, 0}}, {{2, 1, 0}}, {{2, 0, 1}}, {{1, 2, 0}}, {{1, 1, 1}},
    {{1, 0, 2}}, {{0, 3, 0}}, {{0, 2, 1}}, {{0, 1, 2}}, {{0, 0, 3}},
}};

constexpr int slot_of(int a, int b, int c) {
  for (int s = 0; s < kNumSlots; ++s)
    if (kSlots[s].e[0] == a && kSlots[s].e[1] == b && kSlots[s].e[2] == c) return s;
  return -1;
}
constexpr int slot1(int d) { return 1 + d; }
constexpr int slot2(int d, int f) {
  int e[3] = {0, 0, 0};
  ++e[d];
  ++e[f];
  return slot_of(e[0], e[1], e[2]);
}
constexpr int slot3(int d, int f, int g) {
  int e[3] = {0, 0, 0};
  ++e[d];
  ++e[f];
  ++e[g];
  return slot_of(e[0], e[1], e[2]);
}

/// Rational basis functions active at a point, with derivatives in all
/// parametric directions up to `order`.
struct RationalBasis {
  int order = 0;
  int nslots = 1;
  std::vector<int> indices;    // linear basis index per active function
  std::vector<double> values;  // size() x nslots, slot-major per function

  int size() const { return static_cast<int>(indices.size()); }
  double operator()(int fn, int slot) const { return values[fn * nslots + slot]; }
  const double* jet(int fn) const { return values.data() + fn * nslots; }
};

/// Combines precomputed univariate tables into rational basis values by the
/// Leibniz expansion of N w / W. Reuses the storage of `out`.
void rational_basis(const TensorSpace& space, std::span<const double> weights,
                    const std::array<BasisTable, 3>& tables, int order, RationalBasis& out);

/// NURBS basis values and all mixed partials up to `order` (<= 3) at xi.
/// Throws GeometryError if an active weight is not strictly positive.
RationalBasis nurbs_basis_ders(const TensorSpace& space, std::span<const double> weights,
                               const std::array<double, 3>& xi, int order);

// ---------------------------------------------------------------------------
// Refinement. Coefficients are rows of a (num_basis x dim) matrix in the
// linear index order of the space; rational geometry is refined in
// homogeneous coordinates by the caller.

/// Matrix T with coarse coefficients c mapped to fine coefficients T c such
/// that the represented function is unchanged. Throws DomainError when `fine`
/// does not contain `coarse`.
Eigen::MatrixXd transfer_matrix(const KnotVector& coarse, const KnotVector& fine);

/// Represents the coefficients of `space` exactly in `target`.
Eigen::MatrixXd embed(const TensorSpace& space, const Eigen::MatrixXd& coeffs,
                      const TensorSpace& target);

/// Target knot vector reached by degree elevation to `degree` followed by
/// uniform insertion of interior knots up to `count` basis functions. Throws
/// DomainError on shrinking requests or when the uniform knots cannot contain
/// the existing interior knots.
KnotVector refined_knots(const KnotVector& kv, int count, int degree);

struct RefinedCoefficients {
  TensorSpace space;
  Eigen::MatrixXd coeffs;
};

RefinedCoefficients refine(const TensorSpace& space, const Eigen::MatrixXd& coeffs,
                           const std::array<int, 3>& counts, const std::array<int, 3>& degrees);

/// Coefficients interpolating `values` (num_basis x dim, sampled at the
/// tensor grid of Greville points in linear index order).
Eigen::MatrixXd interpolate_at_greville(const TensorSpace& space, const Eigen::MatrixXd& values);

}  // namespace lamiga
