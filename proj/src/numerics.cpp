#include "dmech/numerics.hpp"

#include <cmath>

namespace dmech {

bool all_finite(const RVec& v) { return v.allFinite(); }
bool all_finite(const RMat& m) { return m.allFinite(); }

RVec solve_linear(RMat A, RVec b) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n)
        throw Error("solve_linear: dimension mismatch");

    const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    const double pivot_floor = 1e-14 * scale;

    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index piv = col;
        double best = std::abs(A(col, col));
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double a = std::abs(A(r, col));
            if (a > best) { best = a; piv = r; }
        }
        if (best < pivot_floor)
            throw SingularJacobian("solve_linear: pivot " + std::to_string(best) +
                                   " below " + std::to_string(pivot_floor));
        if (piv != col) {
            A.row(piv).swap(A.row(col));
            std::swap(b(piv), b(col));
        }
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            A.row(r).tail(n - col) -= f * A.row(col).tail(n - col);
            b(r) -= f * b(col);
        }
    }
    RVec x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double s = b(r);
        for (Eigen::Index c = r + 1; c < n; ++c) s -= A(r, c) * x(c);
        x(r) = s / A(r, r);
    }
    return x;
}

RMat finite_diff_jacobian(const VectorFn& f, const RVec& x, double eps) {
    if (eps <= 0.0) throw Error("finite_diff_jacobian: eps must be positive");
    RVec xp = x, xm = x;
    RMat J;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        xp(j) += eps;
        xm(j) -= eps;
        const RVec fp = f(xp);
        const RVec fm = f(xm);
        if (J.size() == 0) J.resize(fp.size(), x.size());
        J.col(j) = (fp - fm) / (2.0 * eps);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    if (J.size() == 0) J.resize(0, x.size());
    return J;
}

NewtonResult newton_solve(const VectorFn& residual, const MatrixFn& jacobian,
                          const RVec& x0, const NewtonConfig& cfg) {
    if (!all_finite(x0)) throw Error("newton_solve: non-finite initial guess");

    RVec x = x0;
    RVec r = residual(x);
    if (r.size() != x.size())
        throw Error("newton_solve: residual dimension " + std::to_string(r.size()) +
                    " does not match unknown dimension " + std::to_string(x.size()));
    double rnorm = r.lpNorm<Eigen::Infinity>();

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        if (rnorm <= cfg.residual_tolerance)
            return {x, iter, rnorm};

        const RMat J = jacobian ? jacobian(x)
                                : finite_diff_jacobian(residual, x, cfg.fd_epsilon);
        const RVec dx = solve_linear(J, -r);

        RVec x_new = x + dx;
        RVec r_new = residual(x_new);
        double rnorm_new = r_new.lpNorm<Eigen::Infinity>();

        if (cfg.damping == Damping::Halving && rnorm_new > rnorm) {
            double step = 1.0;
            for (int halvings = 0; halvings < 30 && rnorm_new > rnorm; ++halvings) {
                step *= 0.5;
                x_new = x + step * dx;
                r_new = residual(x_new);
                rnorm_new = r_new.lpNorm<Eigen::Infinity>();
            }
        }
        if (!all_finite(r_new))
            throw Error("newton_solve: residual became non-finite");

        x = x_new;
        r = r_new;
        rnorm = rnorm_new;
    }
    if (rnorm <= cfg.residual_tolerance)
        return {x, cfg.max_iterations, rnorm};
    throw NonConvergence("newton_solve: no convergence after " +
                         std::to_string(cfg.max_iterations) +
                         " iterations, residual " + std::to_string(rnorm),
                         rnorm, cfg.max_iterations);
}

RMat nullspace_basis(const RMat& A, double rank_tol) {
    const Eigen::Index k = A.rows();
    const Eigen::Index m = A.cols();
    if (k >= m) throw Error("nullspace_basis: need fewer rows than columns");

    Eigen::ColPivHouseholderQR<RMat> qr(A.transpose());
    const RMat& R = qr.matrixR();
    const double lead = std::abs(R(0, 0));
    if (lead == 0.0 || std::abs(R(k - 1, k - 1)) < rank_tol * lead)
        throw RankDeficient("nullspace_basis: matrix is rank deficient");

    RMat Q = qr.householderQ();
    RMat B = Q.rightCols(m - k);

    // Orientation convention: first entry of significant magnitude positive.
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::abs(B(i, j)) > 1e-10) {
                if (B(i, j) < 0.0) B.col(j) = -B.col(j);
                break;
            }
        }
    }
    return B;
}

} // namespace dmech
