#include "lamiga/sparse_solve.hpp"

#include <cstdlib>

#include <unistd.h>

#include "lamiga/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef LAMIGA_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif
#ifdef LAMIGA_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace lamiga {

namespace {

// Residual above which a factorization is considered broken and the next
// backend is tried.
constexpr double kAcceptResidual = 1e-8;

template <class Solver, class Apply>
Eigen::VectorXd solve_refined(Solver& solver, Apply apply, const Eigen::VectorXd& b, SolveInfo* info, double tol) {
  Eigen::VectorXd x = solver.solve(b);
  if (solver.info() != Eigen::Success) throw SolverError("sparse solve failed");
  const double nb = b.norm() > 0.0 ? b.norm() : 1.0;
  Eigen::VectorXd r = b - apply(x);
  int steps = 0;
  while (r.norm() / nb > tol && steps < 3) {
    x += solver.solve(r);
    r = b - apply(x);
    ++steps;
  }
  if (!x.allFinite()) throw SolverError("sparse solve produced non-finite values");
  if (r.norm() / nb > kAcceptResidual) throw SolverError("sparse solve residual too large");
  if (info) {
    info->relative_residual = r.norm() / nb;
    info->refinement_steps = steps;
  }
  return x;
}

// Tries each backend in turn; a backend that fails to factor or leaves a
// large residual is skipped.
template <class First, class... Rest, class Apply>
Eigen::VectorXd solve_chain(const SpMat& A, Apply apply, const Eigen::VectorXd& b, SolveInfo* info, double tol,
                            const char* const* names) {
  try {
    First solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw SolverError("factorization failed");
    Eigen::VectorXd x = solve_refined(solver, apply, b, info, tol);
    if (info) info->backend = names[0];
    return x;
  } catch (const SolverError&) {
    if constexpr (sizeof...(Rest) == 0)
      throw;
    else
      return solve_chain<Rest...>(A, apply, b, info, tol, names + 1);
  }
}

}  // namespace

Eigen::VectorXd solve_spd_upper(const SpMat& upper, const Eigen::VectorXd& b, SolveInfo* info, double tol) {
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return upper.selfadjointView<Eigen::Upper>() * x; };
  try {
#ifdef LAMIGA_HAVE_CHOLMOD
    static const char* const names[] = {"cholmod-supernodal", "cholmod-simplicial", "eigen-simplicial-ldlt"};
    return solve_chain<Eigen::CholmodSupernodalLLT<SpMat, Eigen::Upper>, Eigen::CholmodSimplicialLLT<SpMat, Eigen::Upper>,
                       Eigen::SimplicialLDLT<SpMat, Eigen::Upper>>(upper, apply, b, info, tol, names);
#else
    static const char* const names[] = {"eigen-simplicial-ldlt"};
    return solve_chain<Eigen::SimplicialLDLT<SpMat, Eigen::Upper>>(upper, apply, b, info, tol, names);
#endif
  } catch (const SolverError&) {
    throw SolverError("Cholesky solve failed on every backend (matrix not positive definite?)");
  }
}

Eigen::VectorXd solve_general(const SpMat& A, const Eigen::VectorXd& b, SolveInfo* info, double tol) {
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; };
  try {
#ifdef LAMIGA_HAVE_UMFPACK
    static const char* const names[] = {"umfpack", "eigen-sparselu"};
    return solve_chain<Eigen::UmfPackLU<SpMat>, Eigen::SparseLU<SpMat>>(A, apply, b, info, tol, names);
#else
    static const char* const names[] = {"eigen-sparselu"};
    return solve_chain<Eigen::SparseLU<SpMat>>(A, apply, b, info, tol, names);
#endif
  } catch (const SolverError&) {
    throw SolverError("LU solve failed on every backend (singular system?)");
  }
}

void ensure_blas_kernel(char** argv) {
#if defined(__x86_64__) && (defined(LAMIGA_HAVE_CHOLMOD) || defined(LAMIGA_HAVE_UMFPACK))
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
  __builtin_cpu_init();
  if (!__builtin_cpu_supports("avx512f") || !__builtin_cpu_supports("avx2")) return;
  setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  execv("/proc/self/exe", argv);
  // exec failed: continue, the solvers fall back on bad residuals.
#else
  (void)argv;
#endif
}

}  // namespace lamiga
