#pragma once

// Strong-form isogeometric collocation at the Greville points for a material
// that is constant in the moving frame (homogenized laminate).

#include <array>
#include <functional>
#include <vector>

#include "lamiga/galerkin.hpp"
#include "lamiga/stress.hpp"

namespace lamiga {

enum class PointRole { Interior, Face, Edge, Corner };

struct CollocationPoint {
  std::array<double, 3> xi{};
  std::array<int, 3> index{};  // Greville index per direction
  PointRole role = PointRole::Interior;
  std::vector<Face> faces;  // boundary faces containing the point
};

/// Tensor grid of Greville points in the linear order of the space.
std::vector<CollocationPoint> collocation_grid(const TensorSpace& space);

/// Coefficients of three equations in the displacement control variables of
/// the functions active at a point: coef(i, 3 * f + k) multiplies c_{basis[f], k}.
struct RowBlock {
  std::vector<int> basis;
  Eigen::Matrix<double, 3, Eigen::Dynamic> coef;
  Vec3 X = Vec3::Zero();
};

/// Divergence of the constitutive stress, sigma_ij,j = V_ikl u_k,l +
/// C_ijkl u_k,lj, with C the local stiffness carried by the moving frame.
RowBlock interior_rows(const NurbsPatch& patch, const Stiffness& C_local, const std::array<double, 3>& xi);
/// Traction sigma_ij n_j for a unit normal n.
RowBlock traction_rows(const NurbsPatch& patch, const Stiffness& C_local, const std::array<double, 3>& xi,
                       const Vec3& n);
/// Displacement value u_k at the point.
RowBlock displacement_rows(const NurbsPatch& patch, const std::array<double, 3>& xi);
/// Unit outward normal of a face at a point on it.
Vec3 outward_normal(const NurbsPatch& patch, Face face, const std::array<double, 3>& xi);

using DisplacementFn = std::function<Vec3(const Vec3& X)>;

/// Per-face condition: components with `fixed[k]` are Dirichlet with value
/// displacement(X)(k) (zero when unset); the others carry the traction
/// traction(X, n)(k) (zero when unset).
struct FaceCondition {
  std::array<bool, 3> fixed{false, false, false};
  DisplacementFn displacement;
  TractionFn traction;
};

/// Replaces equation `comp` at collocation point `point` by u_comp = value.
struct PointConstraint {
  int point = 0;
  int comp = 0;
  double value = 0.0;
};

struct CollocationBCs {
  std::array<FaceCondition, 6> faces;  // indexed by Face
  std::vector<PointConstraint> pins;
};

struct StrongSystem {
  SpMat A;  // 3 rows per point, 3 columns per control point
  Eigen::VectorXd rhs;
  std::vector<char> interior;  // per row: interior equilibrium equation
};

/// Interior rows at interior points; at boundary points, Dirichlet rows where
/// any adjacent face fixes the component (values must agree), otherwise the
/// sum of the traction rows of all adjacent faces. Pins are applied last.
StrongSystem assemble_collocation(const NurbsPatch& patch, const Stiffness& C_local, const CollocationBCs& bcs,
                                  const BodyForceFn& body = {});

struct CollocationSolution {
  DisplacementField field;
  SolveInfo info;
  double interior_residual = 0.0;  // max |A u - b| on interior rows / max |b|
};

CollocationSolution solve_collocation(const NurbsPatch& patch, const Stiffness& C_local, const CollocationBCs& bcs,
                                      const BodyForceFn& body = {});

/// Tube benchmark conditions: ends u2 = u3 = 0 with zero axial traction,
/// symmetry faces (u2 = 0 at xi2 = 0, u3 = 0 at xi2 = 1) with zero tangential
/// tractions, inner pressure q n, free outer face, and u1 = 0 at point 0.
CollocationBCs tube_collocation_bcs(double sigma0, double L);

}  // namespace lamiga
