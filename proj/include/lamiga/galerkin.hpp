#pragma once

// Weak-form stiffness and load assembly, strong Dirichlet constraints and the
// symmetric direct solve.

#include <functional>
#include <span>
#include <vector>

#include "lamiga/geometry.hpp"
#include "lamiga/material.hpp"
#include "lamiga/quadrature.hpp"
#include "lamiga/sparse_solve.hpp"

namespace lamiga {

enum class Face { Xi1Min, Xi1Max, Xi2Min, Xi2Max, Xi3Min, Xi3Max };

/// Linear indices of the basis functions that do not vanish on a face (for
/// open knot vectors these interpolate the boundary values).
std::vector<int> face_basis_indices(const TensorSpace& space, Face face);

/// DOF numbering: 3 * basis index + component.
constexpr int dof_of(int basis, int comp) { return 3 * basis + comp; }

struct LinearSystem {
  int ndof = 0;
  SpMat K;  // upper triangle of the symmetric stiffness
  Eigen::VectorXd f;
};

/// Stiffness of the patch. `ply_stiffness[k]` is the local-frame stiffness of
/// ply k; each quadrature point uses the ply of its thickness tag, rotated to
/// the global frame by the point's D(i, alpha).
LinearSystem assemble(const NurbsPatch& patch, std::span<const Stiffness> ply_stiffness, const QuadratureRule& rule);

using TractionFn = std::function<Vec3(const Vec3& X, const Vec3& outward_normal)>;
using BodyForceFn = std::function<Vec3(const Vec3& X)>;

/// Consistent load of a surface traction on one face (degree+1+extra Gauss
/// points per span in both face directions).
Eigen::VectorXd assemble_traction(const NurbsPatch& patch, Face face, const TractionFn& t, int extra = 2);
Eigen::VectorXd assemble_body_force(const NurbsPatch& patch, const QuadratureRule& rule, const BodyForceFn& b);

/// Strongly imposed displacement components.
class Dirichlet {
 public:
  /// Throws DomainError when the DOF is already prescribed with a different
  /// value.
  void set(int dof, double value);
  void set_face(const TensorSpace& space, Face face, int comp, double value);
  bool contains(int dof) const;
  const std::vector<std::pair<int, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<int, double>> entries_;
  std::vector<int> index_;  // dof -> position + 1 (lazily sized)
};

struct GalerkinSolution {
  DisplacementField field;
  Eigen::VectorXd reactions;  // K u - f on constrained DOFs, zero elsewhere
  SolveInfo info;
};

GalerkinSolution solve(const LinearSystem& system, const Dirichlet& bcs, const TensorSpace& space);

/// Normal pressure of the tube benchmark on the inner face:
/// q = sigma0 cos(4 theta) sin(pi X1 / L).
double tube_pressure(const Vec3& X, double sigma0, double L);
/// Traction q n on the inner face with n the outward normal of the solid, so
/// that the normal stress there equals q.
Eigen::VectorXd assemble_tube_load(const NurbsPatch& tube, double sigma0, double L);

/// Simply supported ends (u2 = u3 = 0 at xi1 = 0, 1), symmetry faces (u2 = 0
/// at xi2 = 0 where X2 = 0, u3 = 0 at xi2 = 1 where X3 = 0), and u1 = 0 at the
/// first control point to remove the free axial translation.
Dirichlet tube_bcs(const TensorSpace& space);

}  // namespace lamiga
