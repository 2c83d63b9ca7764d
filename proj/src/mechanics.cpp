#include "dmech/mechanics.hpp"

#include <cmath>

namespace dmech {

MechanicalSystem make_mechanical_system(RMat mass,
                                        std::function<double(const RVec&)> potential,
                                        std::function<RVec(const RVec&)> grad_potential,
                                        const std::vector<RVec>& check_points) {
    const Eigen::Index m = mass.rows();
    if (mass.cols() != m || m == 0)
        throw Error("make_mechanical_system: mass matrix must be square and nonempty");
    if (!all_finite(mass))
        throw Error("make_mechanical_system: mass matrix has non-finite entries");
    if ((mass - mass.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, mass.lpNorm<Eigen::Infinity>()))
        throw Error("make_mechanical_system: mass matrix is not symmetric");

    Eigen::LLT<RMat> llt(mass);
    if (llt.info() != Eigen::Success)
        throw Error("make_mechanical_system: mass matrix is not positive definite");

    for (const RVec& q : check_points) {
        auto scalar = [&](const RVec& x) {
            RVec out(1);
            out(0) = potential(x);
            return out;
        };
        const RMat g_fd = finite_diff_jacobian(scalar, q, 1e-6);
        const RVec g = grad_potential(q);
        if ((g_fd.transpose() - g).lpNorm<Eigen::Infinity>() > 1e-5 * std::max(1.0, g.lpNorm<Eigen::Infinity>()))
            throw Error("make_mechanical_system: grad_potential disagrees with finite differences");
    }

    MechanicalSystem sys;
    sys.dim = static_cast<int>(m);
    sys.mass = std::move(mass);
    sys.mass_inverse = llt.solve(RMat::Identity(m, m));
    sys.potential = std::move(potential);
    sys.grad_potential = std::move(grad_potential);
    return sys;
}

ExtendedLagrangian mechanical_lagrangian(const MechanicalSystem& sys) {
    ExtendedLagrangian ext;
    ext.d_v = [M = sys.mass](const RVec&, const RVec& v) -> RVec { return M * v; };
    ext.d_q = [grad = sys.grad_potential](const RVec& q, const RVec&) -> RVec {
        return -grad(q);
    };
    return ext;
}

ConstraintSet make_constraint_set(int count,
                                  std::function<RVec(const RVec&)> phi,
                                  std::function<RMat(const RVec&)> jac_phi,
                                  const std::vector<RVec>& check_points) {
    for (const RVec& q : check_points) {
        const RMat J_fd = finite_diff_jacobian(phi, q, 1e-6);
        const RMat J = jac_phi(q);
        if ((J_fd - J).lpNorm<Eigen::Infinity>() > 1e-5 * std::max(1.0, J.lpNorm<Eigen::Infinity>()))
            throw Error("make_constraint_set: jac_phi disagrees with finite differences");
    }
    return {count, std::move(phi), std::move(jac_phi)};
}

std::pair<RVec, RVec> eval_modified_constraints(const ModifiedConstraints& mc,
                                                const RVec& q, const RVec& v) {
    auto [q0, q1] = mc.map.forward(q, v, mc.h);
    if (!all_finite(q0) || !all_finite(q1))
        throw OutOfChart("eval_modified_constraints: point left the chart");
    return {mc.constraints.phi(q0), mc.constraints.phi(q1)};
}

ConstraintPartials modified_constraint_partials(const ModifiedConstraints& mc,
                                                const RVec& q, const RVec& v) {
    const Eigen::Index m = q.size();
    auto [q0, q1] = mc.map.forward(q, v, mc.h);
    const RMat J = mc.map.jacobian(q, v, mc.h);
    if (!all_finite(J))
        throw OutOfChart("modified_constraint_partials: point left the chart");

    const RMat G0 = mc.constraints.jac_phi(q0);
    const RMat G1 = mc.constraints.jac_phi(q1);
    ConstraintPartials out;
    out.dq_phi1 = G0 * J.topLeftCorner(m, m);
    out.dv_phi1 = G0 * J.topRightCorner(m, m);
    out.dq_phi2 = G1 * J.bottomLeftCorner(m, m);
    out.dv_phi2 = G1 * J.bottomRightCorner(m, m);
    return out;
}

RVec legendre_residual(const MechanicalSystem& sys, const ConstraintSet& cs,
                       const RVec& q, const RVec& p) {
    const RVec c = cs.phi(q);
    const RVec t = cs.jac_phi(q) * (sys.mass_inverse * p);
    RVec out(c.size() + t.size());
    out << c, t;
    return out;
}

std::pair<RVec, RVec> project_initial_condition(const MechanicalSystem& sys,
                                                const ConstraintSet& cs,
                                                const RVec& q_guess, const RVec& p_guess,
                                                const NewtonConfig& cfg) {
    // Gauss-Newton with minimal-norm corrections along the constraint gradients.
    RVec q = q_guess;
    bool converged = false;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const RVec c = cs.phi(q);
        if (c.lpNorm<Eigen::Infinity>() <= cfg.residual_tolerance) {
            converged = true;
            break;
        }
        const RMat J = cs.jac_phi(q);
        RMat JJt = J * J.transpose();
        RVec mu;
        try {
            mu = solve_linear(JJt, c);
        } catch (const SingularJacobian&) {
            throw RankDeficient("project_initial_condition: constraint Jacobian rank deficient");
        }
        q -= J.transpose() * mu;
    }
    if (!converged && cs.phi(q).lpNorm<Eigen::Infinity>() > cfg.residual_tolerance)
        throw NonConvergence("project_initial_condition: feasibility iteration stalled",
                             cs.phi(q).lpNorm<Eigen::Infinity>(), cfg.max_iterations);

    const RMat J = cs.jac_phi(q);
    const RMat JMi = J * sys.mass_inverse;
    RMat C = JMi * J.transpose();
    RVec p = p_guess;
    try {
        p -= J.transpose() * solve_linear(C, JMi * p_guess);
    } catch (const SingularJacobian&) {
        throw RankDeficient("project_initial_condition: constraint Jacobian rank deficient");
    }
    return {q, p};
}

RVec project_momentum_to_N(const ConstraintSet& cs, const RVec& q, const RVec& pQ,
                           double rank_tol) {
    if (cs.phi(q).lpNorm<Eigen::Infinity>() > kFeasibilityTolerance)
        throw Error("project_momentum_to_N: q is not on the constraint set");
    const RMat B = nullspace_basis(cs.jac_phi(q), rank_tol);
    return B.transpose() * pQ;
}

} // namespace dmech
