#pragma once

// Direct sparse solves: SPD (CHOLMOD supernodal, then CHOLMOD simplicial, then
// Eigen simplicial LDLT) and general LU (UMFPACK, then Eigen SparseLU). A
// backend whose result fails the residual check is skipped.

#include <string>

#include <Eigen/Sparse>

namespace lamiga {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct SolveInfo {
  std::string backend;
  double relative_residual = 0.0;
  int refinement_steps = 0;
};

/// Solves A x = b with A symmetric positive definite given by its upper
/// triangle. Up to three steps of iterative refinement run while the relative
/// residual exceeds `tol`. Throws SolverError when every backend fails.
Eigen::VectorXd solve_spd_upper(const SpMat& upper, const Eigen::VectorXd& b, SolveInfo* info = nullptr,
                                double tol = 1e-12);

/// Solves a general square sparse system. Throws SolverError when singular.
Eigen::VectorXd solve_general(const SpMat& A, const Eigen::VectorXd& b, SolveInfo* info = nullptr,
                              double tol = 1e-12);

/// The AVX-512 kernels of some OpenBLAS builds return wrong dgemm/dtrsm
/// results on large blocks. On such CPUs this re-executes the program with
/// OPENBLAS_CORETYPE=Haswell unless the variable is already set. Call first
/// thing in main.
void ensure_blas_kernel(char** argv);

}  // namespace lamiga
