#pragma once
#include <Eigen/Dense>
#include <functional>

#include "dmech/errors.hpp"

namespace dmech {

using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

using VectorFn = std::function<RVec(const RVec&)>;
using MatrixFn = std::function<RMat(const RVec&)>;

bool all_finite(const RVec& v);
bool all_finite(const RMat& m);

enum class Damping { None, Halving };

struct NewtonConfig {
    double residual_tolerance = 1e-12;
    int max_iterations = 50;
    double fd_epsilon = 1e-7;
    // Full steps by default; halving engages only when the residual norm increases.
    Damping damping = Damping::Halving;
};

struct NewtonResult {
    RVec x;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Solve A x = b by LU with partial pivoting.
/// Throws SingularJacobian when a pivot falls below 1e-14 times the matrix scale.
RVec solve_linear(RMat A, RVec b);

/// Central-difference Jacobian, column j = (f(x+eps e_j) - f(x-eps e_j)) / (2 eps).
RMat finite_diff_jacobian(const VectorFn& f, const RVec& x, double eps);

/// Damped Newton iteration on residual(x) = 0 starting from x0.
/// Uses `jacobian` when given, otherwise central differences with cfg.fd_epsilon.
/// Returns x with the max-norm of residual(x) at or below cfg.residual_tolerance,
/// together with the iteration count; throws NonConvergence or SingularJacobian.
NewtonResult newton_solve(const VectorFn& residual, const MatrixFn& jacobian,
                          const RVec& x0, const NewtonConfig& cfg = {});

inline NewtonResult newton_solve(const VectorFn& residual, const RVec& x0,
                                 const NewtonConfig& cfg = {}) {
    return newton_solve(residual, MatrixFn{}, x0, cfg);
}

/// Orthonormal basis of ker(A) for a full-row-rank k x m matrix A, as the
/// m x (m-k) matrix of basis columns. Computed by column-pivoted orthogonal
/// factorization of A^T; each column is oriented so its first entry of
/// significant magnitude is positive. Throws RankDeficient when the k-th
/// pivot of A falls below rank_tol times the largest.
RMat nullspace_basis(const RMat& A, double rank_tol);

} // namespace dmech
