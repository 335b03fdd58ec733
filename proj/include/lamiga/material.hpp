#pragma once

// Orthotropic stiffness from engineering constants, Voigt/full conversion,
// rotations, laminate layups and thickness homogenization.
//
// Voigt ordering: (11, 22, 33, 23, 13, 12).

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lamiga/errors.hpp"

namespace lamiga {

using Voigt6 = Eigen::Matrix<double, 6, 6>;

/// Voigt index of the symmetric index pair (i, j), 0-based.
constexpr int voigt_index(int i, int j) {
  if (i == j) return i;
  const int s = i + j;  // 1 -> (0,1), 2 -> (0,2), 3 -> (1,2)
  return s == 1 ? 5 : s == 2 ? 4 : 3;
}

struct EngineeringConstants {
  double E1 = 0, E2 = 0, E3 = 0;
  double G23 = 0, G13 = 0, G12 = 0;
  double nu23 = 0, nu13 = 0, nu12 = 0;

  static EngineeringConstants isotropic(double E, double nu);
};

/// Fourth-order tensor with full index storage.
struct Tensor4 {
  std::array<double, 81> c{};

  double& operator()(int i, int j, int k, int l) { return c[((i * 3 + j) * 3 + k) * 3 + l]; }
  double operator()(int i, int j, int k, int l) const { return c[((i * 3 + j) * 3 + k) * 3 + l]; }
};

Tensor4 to_full(const Voigt6& v);
/// Throws MaterialError if the tensor lacks minor symmetries beyond 1e-10.
Voigt6 to_voigt(const Tensor4& t);

struct Stiffness {
  Voigt6 voigt = Voigt6::Zero();
  Tensor4 full;

  Stiffness() = default;
  explicit Stiffness(const Voigt6& v) : voigt(v), full(to_full(v)) {}
  explicit Stiffness(const Tensor4& t) : voigt(to_voigt(t)), full(t) {}
  double operator()(int i, int j, int k, int l) const { return full(i, j, k, l); }
};

/// Throws MaterialError if the compliance is not symmetric positive definite.
Stiffness stiffness_from_engineering(const EngineeringConstants& ec);

/// t'_{ijkl} = Q_ia Q_jb Q_kc Q_ld t_abcd.
Tensor4 rotate_full(const Tensor4& t, const Eigen::Matrix3d& Q);
/// Rotation about the third local axis by `angle_deg`; the fibre direction
/// moves from the first axis towards the second.
Stiffness rotate_inplane(const Stiffness& st, double angle_deg);
/// Local-frame stiffness expressed in the global frame through D(i, alpha).
/// Throws MaterialError when D is not orthogonal to 1e-8.
Stiffness rotate_to_global(const Stiffness& st, const Eigen::Matrix3d& D);

/// Material properties of the benchmark laminate, MPa.
EngineeringConstants benchmark_material();

struct Ply {
  double thickness = 0.0;  // mm
  double angle_deg = 0.0;
  EngineeringConstants material;
};

/// Plies ordered from the bottom (inner) surface to the top (outer) surface.
struct Layup {
  std::vector<Ply> plies;

  void validate() const;
  int size() const { return static_cast<int>(plies.size()); }
  double total_thickness() const;
  std::vector<double> fractions() const;
  /// Normalized ply boundaries 0 = b_0 < b_1 < ... < b_n = 1.
  std::vector<double> boundaries() const;
  bool is_symmetric(double tol = 1e-12) const;
  /// Stiffness of ply k in the local laminate frame (rotated by its angle).
  Stiffness ply_stiffness(int k) const;
  std::vector<Stiffness> ply_stiffnesses() const;
  /// Ply containing normalized thickness coordinate z in [0, 1]; interface
  /// values belong to the ply above, z = 1 to the last ply.
  int ply_at(double z) const;
};

/// Alternating 0/90 stack of `n` equal plies starting with 0.
Layup cross_ply(int n, double total_thickness, const EngineeringConstants& ec);

struct Homogenized {
  Stiffness C;
  std::vector<std::string> warnings;
};

/// Equivalent single-layer stiffness. In-plane terms with the corrective sum
/// referenced to the first ply, harmonic mean for C33, the Delta-ratio form
/// for C44/C55 and the volume mean for C66. Warns on asymmetric stacks.
Homogenized homogenize(const Layup& layup);

/// Closed-form equivalent stiffness for in-plane and transverse normal terms
/// (diagnostic cross-check of homogenize):
/// C11 = <C11> - <C13^2/C33> + <C13/C33>^2 / <1/C33>, C13 = <C13/C33>/<1/C33>.
Voigt6 sun_li_stiffness(const Layup& layup);

}  // namespace lamiga
