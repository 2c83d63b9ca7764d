#include "dmech/liegroup.hpp"

#include <cmath>

namespace dmech {

RVec dLtau_eval(const Retraction& r, const RVec& xi, const RVec& eta) {
    return r.dLtau(xi) * eta;
}
RVec dLtau_inv_eval(const Retraction& r, const RVec& xi, const RVec& eta) {
    return r.dLtau_inv(xi) * eta;
}
RVec dLtau_star_eval(const Retraction& r, const RVec& xi, const RVec& alpha) {
    return r.dLtau(xi).transpose() * alpha;
}
RVec dLtau_inv_star_eval(const Retraction& r, const RVec& xi, const RVec& alpha) {
    return r.dLtau_inv(xi).transpose() * alpha;
}

RVec left_trivialized_gradient(const GroupOps& ops, const Retraction& r,
                               const std::function<double(const RVec&)>& F,
                               const RVec& g, double eps) {
    RVec grad(ops.algebra_dim);
    RVec dir = RVec::Zero(ops.algebra_dim);
    for (int i = 0; i < ops.algebra_dim; ++i) {
        dir(i) = eps;
        const double fp = F(ops.compose(g, r.tau(dir)));
        const double fm = F(ops.compose(g, r.tau(-dir)));
        grad(i) = (fp - fm) / (2.0 * eps);
        dir(i) = 0.0;
    }
    return grad;
}

RVec spatial_momentum(const GroupOps& ops, const RVec& g, const RVec& alpha) {
    return ops.Ad_star(ops.inverse(g), alpha);
}

namespace {

// Retraction charts are principal branch; a step increment near the chart
// boundary is rejected rather than wrapped.
void require_in_chart(const RVec& h_xi) {
    const double angle = h_xi.head(3).norm();
    if (angle >= M_PI - 0.1)
        throw OutOfChart("group step increment angle " + std::to_string(angle) +
                         " leaves the retraction chart");
}

} // namespace

LieStepResult step_lie_hamiltonian(const GroupOps& ops, const Retraction& r,
                                   const TrivializedHamiltonian& H,
                                   const RVec& g0, const RVec& alpha0, double h,
                                   const NewtonConfig& cfg) {
    const int n = ops.algebra_dim;
    if (!all_finite(alpha0) || !all_finite(g0))
        throw Error("step_lie_hamiltonian: non-finite input");

    // Unknowns x = (xi, alpha1).
    auto residual = [&](const RVec& x) -> RVec {
        const RVec xi = x.head(n);
        const RVec alpha1 = x.tail(n);
        const RVec mu0 = r.dLtau(h * xi).transpose() * alpha1;
        RVec res(2 * n);
        res.head(n) = xi - H.dH_dalpha(g0, mu0);
        res.tail(n) = -alpha0 + ops.Ad_star(r.tau(-h * xi), alpha1) + h * H.dH_dg(g0, mu0);
        return res;
    };

    RVec x0(2 * n);
    x0 << H.dH_dalpha(g0, alpha0), alpha0;
    const NewtonResult sol = newton_solve(residual, x0, cfg);

    LieStepResult out;
    out.xi = sol.x.head(n);
    out.alpha1 = sol.x.tail(n);
    require_in_chart(h * out.xi);
    out.g1 = ops.compose(g0, r.tau(h * out.xi));
    out.mu0 = r.dLtau(h * out.xi).transpose() * out.alpha1;
    out.newton_iterations = sol.iterations;
    out.residual_norm = sol.residual_norm;
    return out;
}

LieStepResult step_lie_lagrangian(const GroupOps& ops, const Retraction& r,
                                  const TrivializedLagrangian& L,
                                  const RVec& g0, const RVec& xi_guess, const RVec& alpha0,
                                  double h, const NewtonConfig& cfg) {
    const int n = ops.algebra_dim;

    auto residual = [&](const RVec& x) -> RVec {
        const RVec xi = x.head(n);
        const RVec alpha1 = x.tail(n);
        RVec res(2 * n);
        res.head(n) = r.dLtau(h * xi).transpose() * alpha1 - L.dL_dxi(g0, xi);
        res.tail(n) = -alpha0 + ops.Ad_star(r.tau(-h * xi), alpha1) - h * L.dL_dg(g0, xi);
        return res;
    };

    RVec x0(2 * n);
    x0 << xi_guess, alpha0;
    const NewtonResult sol = newton_solve(residual, x0, cfg);

    LieStepResult out;
    out.xi = sol.x.head(n);
    out.alpha1 = sol.x.tail(n);
    require_in_chart(h * out.xi);
    out.g1 = ops.compose(g0, r.tau(h * out.xi));
    out.mu0 = r.dLtau(h * out.xi).transpose() * out.alpha1;
    out.newton_iterations = sol.iterations;
    out.residual_norm = sol.residual_norm;
    return out;
}

LieConstrainedResult step_lie_constrained(const GroupOps& ops, const Retraction& r,
                                          const TrivializedLagrangian& L,
                                          const GroupConstraintSet& gcs,
                                          const RVec& g0, const RVec& alpha0, double h,
                                          const NewtonConfig& cfg) {
    const int n = ops.algebra_dim;
    const int k = gcs.count;

    if (k == 0) {
        const LieStepResult base =
            step_lie_lagrangian(ops, r, L, g0, L.xi_from_alpha(g0, alpha0), alpha0, h, cfg);
        return {base.g1, base.alpha1, base.xi, RVec(0), RVec(0),
                base.newton_iterations, base.residual_norm};
    }

    const double phi0 = gcs.phi(g0).lpNorm<Eigen::Infinity>();
    const double tang0 =
        (gcs.trivialized_grad(g0) * L.xi_from_alpha(g0, alpha0)).lpNorm<Eigen::Infinity>();
    if (std::max(phi0, tang0) > 1e-8)
        throw Error("step_lie_constrained: initial condition violates the group Legendre "
                    "condition by " + std::to_string(std::max(phi0, tang0)));

    // Unknowns x = (xi, alpha1, lambda, lambda_tilde).
    auto residual = [&](const RVec& x) -> RVec {
        const RVec xi = x.segment(0, n);
        const RVec alpha1 = x.segment(n, n);
        const RVec lam = x.segment(2 * n, k);
        const RVec lamt = x.segment(2 * n + k, k);

        const RVec g1 = ops.compose(g0, r.tau(h * xi));
        const RMat c1 = gcs.trivialized_grad(g1);        // k x n, rows at g1
        const RMat dlt = r.dLtau(h * xi);

        // xi-gradient of phi(g0 tau(h xi)): rows h * c1 dlt; trivialized
        // g-gradient of the same function at g0: rows c1 Ad_{tau(-h xi)}.
        const RVec tau_neg = r.tau(-h * xi);
        RMat c1_shift(k, n);
        for (int a = 0; a < k; ++a)
            c1_shift.row(a) = ops.Ad_star(tau_neg, c1.row(a).transpose()).transpose();

        RVec res(2 * n + 2 * k);
        res.segment(0, n) = dlt.transpose() * alpha1 - L.dL_dxi(g0, xi) -
                            h * dlt.transpose() * (c1.transpose() * lamt);
        res.segment(n, n) = -alpha0 + ops.Ad_star(tau_neg, alpha1) - h * L.dL_dg(g0, xi) -
                            h * gcs.trivialized_grad(g0).transpose() * lam -
                            h * c1_shift.transpose() * lamt;
        res.segment(2 * n, k) = gcs.phi(g1);
        res.segment(2 * n + k, k) = c1 * L.xi_from_alpha(g1, alpha1);
        return res;
    };

    RVec x0 = RVec::Zero(2 * n + 2 * k);
    x0.segment(0, n) = L.xi_from_alpha(g0, alpha0);
    x0.segment(n, n) = alpha0;
    const NewtonResult sol = newton_solve(residual, x0, cfg);

    LieConstrainedResult out;
    out.xi = sol.x.segment(0, n);
    out.alpha1 = sol.x.segment(n, n);
    out.lambda = sol.x.segment(2 * n, k);
    out.lambda_tilde = sol.x.segment(2 * n + k, k);
    require_in_chart(h * out.xi);
    out.g1 = ops.compose(g0, r.tau(h * out.xi));
    out.newton_iterations = sol.iterations;
    out.residual_norm = sol.residual_norm;
    return out;
}

LieTrajectory integrate_lie_hamiltonian(const GroupOps& ops, const Retraction& r,
                                        const TrivializedHamiltonian& H,
                                        const RVec& g0, const RVec& alpha0, double h,
                                        long steps, const NewtonConfig& cfg) {
    LieTrajectory traj;
    traj.h = h;
    traj.times.push_back(0.0);
    traj.g.push_back(g0);
    traj.alpha.push_back(alpha0);
    RVec g = g0, alpha = alpha0;
    for (long i = 0; i < steps; ++i) {
        const LieStepResult s = step_lie_hamiltonian(ops, r, H, g, alpha, h, cfg);
        g = s.g1;
        alpha = s.alpha1;
        traj.times.push_back(h * static_cast<double>(i + 1));
        traj.g.push_back(g);
        traj.alpha.push_back(alpha);
        traj.newton_iterations.push_back(s.newton_iterations);
        traj.residual_norms.push_back(s.residual_norm);
    }
    return traj;
}

LieTrajectory integrate_lie_constrained(const GroupOps& ops, const Retraction& r,
                                        const TrivializedLagrangian& L,
                                        const GroupConstraintSet& gcs,
                                        const RVec& g0, const RVec& alpha0, double h,
                                        long steps, const NewtonConfig& cfg) {
    LieTrajectory traj;
    traj.h = h;
    traj.times.push_back(0.0);
    traj.g.push_back(g0);
    traj.alpha.push_back(alpha0);
    RVec g = g0, alpha = alpha0;
    for (long i = 0; i < steps; ++i) {
        const LieConstrainedResult s = step_lie_constrained(ops, r, L, gcs, g, alpha, h, cfg);
        g = s.g1;
        alpha = s.alpha1;
        traj.times.push_back(h * static_cast<double>(i + 1));
        traj.g.push_back(g);
        traj.alpha.push_back(alpha);
        traj.newton_iterations.push_back(s.newton_iterations);
        traj.residual_norms.push_back(s.residual_norm);
    }
    return traj;
}

// ---- SO(3) -----------------------------------------------------------------

Eigen::Matrix3d so3_hat(const Eigen::Vector3d& w) {
    Eigen::Matrix3d S;
    S << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
        -w.y(), w.x(), 0.0;
    return S;
}

Eigen::Vector3d so3_vee(const Eigen::Matrix3d& S) {
    return {S(2, 1), S(0, 2), S(1, 0)};
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& xi) {
    const double t = xi.norm();
    const Eigen::Matrix3d S = so3_hat(xi);
    double a, b;
    if (t < 1e-4) {
        a = 1.0 - t * t / 6.0;
        b = 0.5 - t * t / 24.0;
    } else {
        a = std::sin(t) / t;
        b = (1.0 - std::cos(t)) / (t * t);
    }
    return Eigen::Matrix3d::Identity() + a * S + b * S * S;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
    const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double t = std::acos(c);
    if (t >= M_PI - 0.1)
        throw OutOfChart("so3_log: rotation angle " + std::to_string(t) +
                         " too close to pi");
    const Eigen::Vector3d w = so3_vee(0.5 * (R - R.transpose()));
    if (t < 1e-4) return (1.0 + t * t / 6.0) * w;
    return (t / std::sin(t)) * w;
}

Eigen::Matrix3d so3_cayley(const Eigen::Vector3d& xi) {
    const Eigen::Matrix3d S = 0.5 * so3_hat(xi);
    const Eigen::Matrix3d A = Eigen::Matrix3d::Identity() - S;
    const Eigen::Matrix3d B = Eigen::Matrix3d::Identity() + S;
    return A.partialPivLu().solve(B);
}

Eigen::Vector3d so3_cayley_inverse(const Eigen::Matrix3d& R) {
    const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
    if (std::acos(c) >= M_PI - 0.1)
        throw OutOfChart("so3_cayley_inverse: rotation angle too close to the pole");
    // xi^ = 2 (R - I)(R + I)^{-1}, computed through the transposed solve.
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d S =
        2.0 * (R + I).transpose().partialPivLu().solve((R - I).transpose()).transpose();
    return so3_vee(0.5 * (S - S.transpose()));
}

RVec so3_flatten(const Eigen::Matrix3d& R) {
    RVec g(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(3 * i + j) = R(i, j);
    return g;
}

Eigen::Matrix3d so3_unflatten(const RVec& g) {
    Eigen::Matrix3d R;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R(i, j) = g(3 * i + j);
    return R;
}

GroupOps so3_ops() {
    GroupOps ops;
    ops.elem_size = 9;
    ops.algebra_dim = 3;
    ops.identity = so3_flatten(Eigen::Matrix3d::Identity());
    ops.compose = [](const RVec& a, const RVec& b) {
        return so3_flatten(so3_unflatten(a) * so3_unflatten(b));
    };
    ops.inverse = [](const RVec& g) {
        return so3_flatten(so3_unflatten(g).transpose());
    };
    ops.Ad = [](const RVec& g, const RVec& xi) -> RVec {
        return so3_unflatten(g) * xi;
    };
    ops.Ad_star = [](const RVec& g, const RVec& alpha) -> RVec {
        return so3_unflatten(g).transpose() * alpha;
    };
    ops.ad = [](const RVec& xi, const RVec& eta) -> RVec {
        return Eigen::Vector3d(xi).cross(Eigen::Vector3d(eta));
    };
    ops.ad_star = [](const RVec& xi, const RVec& alpha) -> RVec {
        return Eigen::Vector3d(alpha).cross(Eigen::Vector3d(xi));
    };
    return ops;
}

namespace {

Eigen::Matrix3d dl_exp_matrix(const Eigen::Vector3d& xi) {
    const double t = xi.norm();
    const Eigen::Matrix3d S = so3_hat(xi);
    double b, c;
    if (t < 1e-4) {
        b = 0.5 - t * t / 24.0;
        c = 1.0 / 6.0 - t * t / 120.0;
    } else {
        b = (1.0 - std::cos(t)) / (t * t);
        c = (t - std::sin(t)) / (t * t * t);
    }
    return Eigen::Matrix3d::Identity() - b * S + c * S * S;
}

Eigen::Matrix3d dl_exp_inv_matrix(const Eigen::Vector3d& xi) {
    const double t = xi.norm();
    const Eigen::Matrix3d S = so3_hat(xi);
    double c;
    if (t < 1e-4) {
        c = 1.0 / 12.0 + t * t / 720.0;
    } else {
        c = (1.0 - 0.5 * t / std::tan(0.5 * t)) / (t * t);
    }
    return Eigen::Matrix3d::Identity() + 0.5 * S + c * S * S;
}

Eigen::Matrix3d dl_cayley_matrix(const Eigen::Vector3d& xi) {
    // Columns of eta -> vee((I + xi^/2)^{-1} eta^ (I - xi^/2)^{-1}).
    const Eigen::Matrix3d Sm = Eigen::Matrix3d::Identity() - 0.5 * so3_hat(xi);
    const Eigen::Matrix3d Sp = Eigen::Matrix3d::Identity() + 0.5 * so3_hat(xi);
    const auto lu_p = Sp.partialPivLu();
    const auto lu_m = Sm.partialPivLu();
    Eigen::Matrix3d out;
    for (int j = 0; j < 3; ++j) {
        const Eigen::Matrix3d E = so3_hat(Eigen::Vector3d::Unit(j));
        const Eigen::Matrix3d T = lu_p.solve(E) * lu_m.solve(Eigen::Matrix3d::Identity());
        out.col(j) = so3_vee(0.5 * (T - T.transpose()));
    }
    return out;
}

Eigen::Matrix3d dl_cayley_inv_matrix(const Eigen::Vector3d& xi) {
    const Eigen::Matrix3d Sm = Eigen::Matrix3d::Identity() - 0.5 * so3_hat(xi);
    const Eigen::Matrix3d Sp = Eigen::Matrix3d::Identity() + 0.5 * so3_hat(xi);
    Eigen::Matrix3d out;
    for (int j = 0; j < 3; ++j) {
        const Eigen::Matrix3d E = so3_hat(Eigen::Vector3d::Unit(j));
        const Eigen::Matrix3d T = Sp * E * Sm;
        out.col(j) = so3_vee(0.5 * (T - T.transpose()));
    }
    return out;
}

} // namespace

Retraction so3_exp_retraction() {
    Retraction r;
    r.name = "exp";
    r.tau = [](const RVec& xi) { return so3_flatten(so3_exp(xi)); };
    r.tau_inverse = [](const RVec& g) -> RVec { return so3_log(so3_unflatten(g)); };
    r.dLtau = [](const RVec& xi) -> RMat { return dl_exp_matrix(xi); };
    r.dLtau_inv = [](const RVec& xi) -> RMat { return dl_exp_inv_matrix(xi); };
    return r;
}

Retraction so3_cayley_retraction() {
    Retraction r;
    r.name = "cayley";
    r.tau = [](const RVec& xi) { return so3_flatten(so3_cayley(xi)); };
    r.tau_inverse = [](const RVec& g) -> RVec { return so3_cayley_inverse(so3_unflatten(g)); };
    r.dLtau = [](const RVec& xi) -> RMat { return dl_cayley_matrix(xi); };
    r.dLtau_inv = [](const RVec& xi) -> RMat { return dl_cayley_inv_matrix(xi); };
    return r;
}

// ---- SO(3) x R^3 ------------------------------------------------------------

GroupOps so3r3_ops() {
    GroupOps ops;
    ops.elem_size = 12;
    ops.algebra_dim = 6;
    ops.identity = RVec::Zero(12);
    ops.identity.head(9) = so3_flatten(Eigen::Matrix3d::Identity());
    ops.compose = [](const RVec& a, const RVec& b) {
        RVec out(12);
        out.head(9) = so3_flatten(so3_unflatten(a.head(9)) * so3_unflatten(b.head(9)));
        out.tail(3) = a.tail(3) + b.tail(3);
        return out;
    };
    ops.inverse = [](const RVec& g) {
        RVec out(12);
        out.head(9) = so3_flatten(so3_unflatten(g.head(9)).transpose());
        out.tail(3) = -g.tail(3);
        return out;
    };
    ops.Ad = [](const RVec& g, const RVec& xi) {
        RVec out(6);
        out.head(3) = so3_unflatten(g.head(9)) * xi.head(3);
        out.tail(3) = xi.tail(3);
        return out;
    };
    ops.Ad_star = [](const RVec& g, const RVec& alpha) {
        RVec out(6);
        out.head(3) = so3_unflatten(g.head(9)).transpose() * alpha.head(3);
        out.tail(3) = alpha.tail(3);
        return out;
    };
    ops.ad = [](const RVec& xi, const RVec& eta) {
        RVec out = RVec::Zero(6);
        out.head(3) = Eigen::Vector3d(xi.head(3)).cross(Eigen::Vector3d(eta.head(3)));
        return out;
    };
    ops.ad_star = [](const RVec& xi, const RVec& alpha) {
        RVec out = RVec::Zero(6);
        out.head(3) = Eigen::Vector3d(alpha.head(3)).cross(Eigen::Vector3d(xi.head(3)));
        return out;
    };
    return ops;
}

Retraction so3r3_retraction(const Retraction& so3_part) {
    Retraction r;
    r.name = so3_part.name + "+translation";
    r.tau = [so3_part](const RVec& xi) {
        RVec out(12);
        out.head(9) = so3_part.tau(xi.head(3));
        out.tail(3) = xi.tail(3);
        return out;
    };
    r.tau_inverse = [so3_part](const RVec& g) {
        RVec out(6);
        out.head(3) = so3_part.tau_inverse(g.head(9));
        out.tail(3) = g.tail(3);
        return out;
    };
    r.dLtau = [so3_part](const RVec& xi) {
        RMat out = RMat::Identity(6, 6);
        out.topLeftCorner(3, 3) = so3_part.dLtau(xi.head(3));
        return out;
    };
    r.dLtau_inv = [so3_part](const RVec& xi) {
        RMat out = RMat::Identity(6, 6);
        out.topLeftCorner(3, 3) = so3_part.dLtau_inv(xi.head(3));
        return out;
    };
    return r;
}

} // namespace dmech
