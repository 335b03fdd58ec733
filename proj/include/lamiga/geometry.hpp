#pragma once

// Solid NURBS patches, jets of the geometry map, physical derivatives by the
// chain rule, and the orthonormal moving frame with its derivative tensors.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lamiga/spline.hpp"

namespace lamiga {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Map F from the unit cube to a solid, control points in mm.
struct NurbsPatch {
  TensorSpace space;
  std::vector<Vec3> points;
  std::vector<double> weights;

  /// Throws GeometryError on size mismatch or non-positive weights.
  void validate() const;

  /// Rows (w x, w y, w z, w).
  Eigen::MatrixXd homogeneous() const;
  static NurbsPatch from_homogeneous(const TensorSpace& space, const Eigen::MatrixXd& hw);

  NurbsPatch refined(const std::array<int, 3>& counts, const std::array<int, 3>& degrees) const;
  /// Same map represented in a space containing this one.
  NurbsPatch embedded(const TensorSpace& target) const;
};

/// Geometry map and its parametric derivatives up to third order at one point.
/// d[s] holds the derivative of X for multi-index slot s.
struct MapJet {
  int order = 0;
  std::array<Vec3, kNumSlots> d{};
  Mat3 J = Mat3::Zero();  // J(i, t) = dX_i / dxi^t
  Mat3 G = Mat3::Zero();  // G(t, i) = dxi^t / dX_i
  double det = 0.0;

  const Vec3& X() const { return d[0]; }
};

/// Geometry jet from basis values already evaluated at the point. Throws
/// GeometryError when the Jacobian is singular and order >= 1.
MapJet map_from_basis(const NurbsPatch& patch, const RationalBasis& rb);
MapJet map_eval(const NurbsPatch& patch, const std::array<double, 3>& xi, int order);

/// Cartesian derivatives of a scalar up to third order.
struct PhysicalJet {
  double v = 0.0;
  double g[3] = {};
  double h[3][3] = {};
  double t[3][3][3] = {};
};

/// Chain rule from a parametric jet (kNumSlots layout, valid up to `order`).
void to_physical(const double* jet, const MapJet& mj, int order, PhysicalJet& out);

/// Cartesian derivatives of a vector field: u[i] is component i.
struct DisplacementJet {
  std::array<PhysicalJet, 3> u;

  double value(int i) const { return u[i].v; }
  double d1(int i, int j) const { return u[i].g[j]; }
  double d2(int i, int j, int k) const { return u[i].h[j][k]; }
  double d3(int i, int j, int k, int l) const { return u[i].t[j][k][l]; }
};

using CoeffMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Control-variable field over a tensor space (one displacement 3-vector per
/// basis function, mm).
struct DisplacementField {
  TensorSpace space;
  CoeffMatrix coeffs;
};

/// Global Cartesian derivatives of a spline field on the patch. The field
/// space must equal the patch space.
DisplacementJet physical_derivatives(const NurbsPatch& patch, const DisplacementField& field,
                                     const std::array<double, 3>& xi, int order);
DisplacementJet physical_derivatives(const NurbsPatch& patch, const DisplacementField& field,
                                     const RationalBasis& rb, const MapJet& mj, int order);

/// Moving orthonormal frame a1 = g1/|g1|, a3 = g1 x g2/|g1 x g2|, a2 = a3 x a1
/// and its derivatives. e is the snapshot basis; all tensors with Greek
/// component indices refer to it.
struct FrameBundle {
  int order = 0;
  std::array<Vec3, 3> a;
  std::array<Vec3, 3> e;
  Mat3 C = Mat3::Identity();  // C(i, alpha) = e_alpha . E_i
  Mat3 D = Mat3::Identity();  // D(i, alpha) = a_alpha . E_i
  // Parametric derivatives da[t][alpha], dda[t][f][alpha].
  std::array<std::array<Vec3, 3>, 3> da{};
  std::array<std::array<std::array<Vec3, 3>, 3>, 3> dda{};
  // Cartesian derivatives dX[j][alpha] = d a_alpha / dX_j and
  // dXX[j][k][alpha] = d2 a_alpha / dX_j dX_k.
  std::array<std::array<Vec3, 3>, 3> dX{};
  std::array<std::array<std::array<Vec3, 3>, 3>, 3> dXX{};

  /// A_{psi alpha mu} = (d a_psi / d x_mu) . e_alpha
  double A(int psi, int alpha, int mu) const;
  /// B_{psi alpha mu nu} = (d2 a_psi / d x_mu d x_nu) . e_alpha
  double B(int psi, int alpha, int mu, int nu) const;
  /// Atilde_{i alpha j} = (d a_alpha / d X_j)_i
  double At(int i, int alpha, int j) const { return dX[j][alpha](i); }
};

/// Frame from a map jet of order >= order+1. The snapshot defaults to the
/// frame itself.
FrameBundle frame_from_jet(const MapJet& mj, int order);
FrameBundle frame_from_jet(const MapJet& mj, int order, const std::array<Vec3, 3>& snapshot);
FrameBundle frame_at(const NurbsPatch& patch, const std::array<double, 3>& xi, int order);
FrameBundle frame_at(const NurbsPatch& patch, const std::array<double, 3>& xi, int order,
                     const std::array<Vec3, 3>& snapshot);

// ---------------------------------------------------------------------------
// Builders.

struct TubeDimensions {
  double S = 0.0;
  double h = 0.0;
  double R = 0.0;   // mean radius
  double ri = 0.0;  // inner radius
  double ro = 0.0;  // outer radius
  double L = 0.0;   // axial length
};

TubeDimensions tube_dimensions(double S, double h);
TubeDimensions tube_dimensions(double S, double h, double L);

/// Quarter annular tube: xi1 axial (X1 in [0, L]), xi2 circumferential from
/// theta = pi/2 (X2 = 0) to theta = 0 (X3 = 0), xi3 radial from ri to ro.
/// Single rational quadratic segment in xi2, linear in xi1 and xi3.
NurbsPatch build_quarter_cylinder(const TubeDimensions& dims);

/// Circumferential angle atan2(X3, X2) on the tube.
double tube_theta(const Vec3& X);
/// Parameter xi2 at which the tube reaches angle theta in [0, pi/2].
double tube_xi2_for_theta(const NurbsPatch& tube, double theta);

/// Trilinear box [0,lx] x [0,ly] x [0,lz].
NurbsPatch build_box(double lx, double ly, double lz);
/// Affine image X = M xi + c of the unit cube, trilinear.
NurbsPatch build_affine(const Mat3& M, const Vec3& c);

// ---------------------------------------------------------------------------
// Serialization: degrees, knot vectors, control points and weights as text.

void write_patch(std::ostream& os, const NurbsPatch& patch);
NurbsPatch read_patch(std::istream& is);

}  // namespace lamiga
