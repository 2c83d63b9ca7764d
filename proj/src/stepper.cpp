#include "dmech/stepper.hpp"

#include <cmath>

namespace dmech {

namespace {

double inf_norm(const RVec& v) {
    return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

void require_feasible(const MechanicalSystem& sys, const ConstraintSet& cs,
                      const RVec& q0, const RVec& p0, const char* who) {
    const double r = inf_norm(legendre_residual(sys, cs, q0, p0));
    if (r > kFeasibilityTolerance)
        throw Error(std::string(who) + ": initial condition violates the Legendre condition by " +
                    std::to_string(r));
}

/// Newton solve over packed unknowns (q1, p1, lambda1, lambda2).
StepResult solve_step(const ConstraintSet& cs, const RVec& q0, const RVec& p0,
                      const NewtonConfig& cfg, const MultiplierGuess* warm,
                      const std::function<RVec(const StepUnknowns&)>& residual) {
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;

    auto unpack = [m, k](const RVec& x) {
        StepUnknowns u;
        u.q1 = x.segment(0, m);
        u.p1 = x.segment(m, m);
        u.lambda1 = x.segment(2 * m, k);
        u.lambda2 = x.segment(2 * m + k, k);
        return u;
    };
    auto packed_residual = [&](const RVec& x) { return residual(unpack(x)); };

    RVec x0 = RVec::Zero(2 * m + 2 * k);
    x0.segment(0, m) = q0;
    x0.segment(m, m) = p0;
    if (warm && warm->lambda1.size() == k && warm->lambda2.size() == k) {
        x0.segment(2 * m, k) = warm->lambda1;
        x0.segment(2 * m + k, k) = warm->lambda2;
    }

    const NewtonResult sol = newton_solve(packed_residual, x0, cfg);
    StepUnknowns u = unpack(sol.x);
    return {u.q1, u.p1, u.lambda1, u.lambda2, sol.iterations, sol.residual_norm};
}

} // namespace

RVec assemble_step_residual(const DiscretizationMap& map, const MechanicalSystem& sys,
                            const ExtendedLagrangian& ext, const ConstraintSet& cs,
                            const RVec& q0, const RVec& p0,
                            const StepUnknowns& u, double h) {
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;

    const CotangentSample s = cotangent_lift_inverse(map, q0, p0, u.q1, u.p1, h);
    const ModifiedConstraints mc{map, cs, h};
    const ConstraintPartials d = modified_constraint_partials(mc, s.q, s.qdot);

    RVec r(2 * m + 2 * k);
    r.segment(0, m) = s.p - ext.d_v(s.q, s.qdot);
    r.segment(m, m) = s.pdot - ext.d_q(s.q, s.qdot);
    if (k > 0) {
        r.segment(0, m) -= d.dv_phi1.transpose() * u.lambda1 + d.dv_phi2.transpose() * u.lambda2;
        r.segment(m, m) -= d.dq_phi1.transpose() * u.lambda1 + d.dq_phi2.transpose() * u.lambda2;
        r.segment(2 * m, k) = cs.phi(u.q1);
        r.segment(2 * m + k, k) = cs.jac_phi(u.q1) * (sys.mass_inverse * u.p1);
    }
    return r;
}

StepResult step_generic(const DiscretizationMap& map, const MechanicalSystem& sys,
                        const ExtendedLagrangian& ext, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg,
                        const MultiplierGuess* warm) {
    require_feasible(sys, cs, q0, p0, "step_generic");
    return solve_step(cs, q0, p0, cfg, warm, [&](const StepUnknowns& u) {
        return assemble_step_residual(map, sys, ext, cs, q0, p0, u, h);
    });
}

StepResult step_euler_a(const MechanicalSystem& sys, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg,
                        const MultiplierGuess* warm) {
    require_feasible(sys, cs, q0, p0, "step_euler_a");
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;
    const RMat G0 = cs.jac_phi(q0);
    const RVec gradV0 = sys.grad_potential(q0);

    // Impulse scaling: the printed equations times h, so the residual floor
    // stays near machine epsilon for small steps.
    return solve_step(cs, q0, p0, cfg, warm, [&, G0, gradV0](const StepUnknowns& u) {
        const RVec Mdq = sys.mass * (u.q1 - q0);
        RVec r(2 * m + 2 * k);
        r.segment(0, m) = h * u.p1 - Mdq;
        r.segment(m, m) = u.p1 - p0 + h * gradV0;
        if (k > 0) {
            const RMat G1 = cs.jac_phi(u.q1);
            r.segment(0, m) -= h * h * G1.transpose() * u.lambda2;
            r.segment(m, m) -=
                h * (G0.transpose() * u.lambda1 + G1.transpose() * u.lambda2);
            r.segment(2 * m, k) = cs.phi(u.q1);
            r.segment(2 * m + k, k) = G1 * (sys.mass_inverse * u.p1);
        }
        return r;
    });
}

StepResult step_euler_b(const MechanicalSystem& sys, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg,
                        const MultiplierGuess* warm) {
    require_feasible(sys, cs, q0, p0, "step_euler_b");
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;
    const RMat G0 = cs.jac_phi(q0);

    return solve_step(cs, q0, p0, cfg, warm, [&, G0](const StepUnknowns& u) {
        const RVec Mdq = sys.mass * (u.q1 - q0);
        RVec r(2 * m + 2 * k);
        r.segment(0, m) = h * p0 - Mdq;
        r.segment(m, m) = h * u.p1 - Mdq + h * h * sys.grad_potential(u.q1);
        if (k > 0) {
            const RMat G1 = cs.jac_phi(u.q1);
            r.segment(0, m) += h * h * G0.transpose() * u.lambda1;
            r.segment(m, m) -= h * h * G1.transpose() * u.lambda2;
            r.segment(2 * m, k) = cs.phi(u.q1);
            r.segment(2 * m + k, k) = G1 * (sys.mass_inverse * u.p1);
        }
        return r;
    });
}

StepResult step_midpoint(const MechanicalSystem& sys, const ConstraintSet& cs,
                         const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg,
                         const MultiplierGuess* warm) {
    require_feasible(sys, cs, q0, p0, "step_midpoint");
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;
    const RMat G0 = cs.jac_phi(q0);

    return solve_step(cs, q0, p0, cfg, warm, [&, G0](const StepUnknowns& u) {
        const RVec Mdq = sys.mass * (u.q1 - q0);
        const RVec mid = 0.5 * (q0 + u.q1);
        RVec r(2 * m + 2 * k);
        r.segment(0, m) = 0.5 * h * (p0 + u.p1) - Mdq;
        r.segment(m, m) = u.p1 - p0 + h * sys.grad_potential(mid);
        if (k > 0) {
            const RMat G1 = cs.jac_phi(u.q1);
            r.segment(0, m) += 0.5 * h * h * G0.transpose() * u.lambda1 -
                               0.5 * h * h * G1.transpose() * u.lambda2;
            r.segment(m, m) -=
                h * (G0.transpose() * u.lambda1 + G1.transpose() * u.lambda2);
            r.segment(2 * m, k) = cs.phi(u.q1);
            r.segment(2 * m + k, k) = G1 * (sys.mass_inverse * u.p1);
        }
        return r;
    });
}

StepResult step_rattle(const MechanicalSystem& sys, const ConstraintSet& cs,
                       const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg,
                       const MultiplierGuess* warm) {
    require_feasible(sys, cs, q0, p0, "step_rattle");
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;
    const RMat G0 = cs.jac_phi(q0);
    const RVec gradV0 = sys.grad_potential(q0);

    return solve_step(cs, q0, p0, cfg, warm, [&, G0, gradV0](const StepUnknowns& u) {
        const RVec Mdq = sys.mass * (u.q1 - q0);
        RVec r(2 * m + 2 * k);
        r.segment(0, m) = h * p0 - Mdq - 0.5 * h * h * gradV0;
        r.segment(m, m) = h * u.p1 - Mdq + 0.5 * h * h * sys.grad_potential(u.q1);
        if (k > 0) {
            const RMat G1 = cs.jac_phi(u.q1);
            r.segment(0, m) += 0.5 * h * h * G0.transpose() * u.lambda1;
            r.segment(m, m) -= 0.5 * h * h * G1.transpose() * u.lambda2;
            r.segment(2 * m, k) = cs.phi(u.q1);
            r.segment(2 * m + k, k) = G1 * (sys.mass_inverse * u.p1);
        }
        return r;
    });
}

StepResult step_nullspace(const DiscretizationMap& map, const MechanicalSystem& sys,
                          const ExtendedLagrangian& ext, const ConstraintSet& cs,
                          const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg) {
    require_feasible(sys, cs, q0, p0, "step_nullspace");
    const Eigen::Index m = q0.size();
    const Eigen::Index k = cs.count;

    if (k == 0)
        return step_generic(map, sys, ext, cs, q0, p0, h, cfg);

    const double rank_tol = 1e-10;
    const bool separated = map.theta.has_value();
    const double theta = map.theta.value_or(0.0);
    const RMat B0 = separated ? nullspace_basis(cs.jac_phi(q0), rank_tol) : RMat();
    const ModifiedConstraints mc{map, cs, h};

    // Momentum-equation blocks with the multiplier terms left out.
    auto free_blocks = [&](const RVec& q1, const RVec& p1) -> std::pair<RVec, RVec> {
        const CotangentSample s = cotangent_lift_inverse(map, q0, p0, q1, p1, h);
        return {s.p - ext.d_v(s.q, s.qdot), s.pdot - ext.d_q(s.q, s.qdot)};
    };

    // Residual of the reduced system with the projection bases held fixed.
    auto reduced = [&](const RVec& x, const RMat& P1basis, const RMat& W) -> RVec {
        const RVec q1 = x.head(m);
        const RVec p1 = x.tail(m);
        auto [a, b] = free_blocks(q1, p1);
        RVec r(2 * m);
        if (separated) {
            const RVec p0eq = a - (1.0 - theta) * h * b;
            const RVec p1eq = a + theta * h * b;
            r.segment(0, m - k) = B0.transpose() * p0eq;
            r.segment(m - k, m - k) = P1basis.transpose() * p1eq;
        } else {
            RVec stacked(2 * m);
            stacked << a, b;
            r.segment(0, 2 * (m - k)) = W.transpose() * stacked;
        }
        r.segment(2 * (m - k), k) = cs.phi(q1);
        r.segment(2 * (m - k) + k, k) = cs.jac_phi(q1) * (sys.mass_inverse * p1);
        return r;
    };

    auto bases_at = [&](const RVec& x) -> std::pair<RMat, RMat> {
        const RVec q1 = x.head(m);
        if (separated) return {nullspace_basis(cs.jac_phi(q1), rank_tol), RMat()};
        const CotangentSample s = cotangent_lift_inverse(map, q0, p0, q1, x.tail(m), h);
        const ConstraintPartials d = modified_constraint_partials(mc, s.q, s.qdot);
        RMat K(2 * k, 2 * m);
        K.topLeftCorner(k, m) = d.dv_phi1;
        K.topRightCorner(k, m) = d.dq_phi1;
        K.bottomLeftCorner(k, m) = d.dv_phi2;
        K.bottomRightCorner(k, m) = d.dq_phi2;
        return {RMat(), nullspace_basis(K, rank_tol)};
    };

    RVec x(2 * m);
    x << q0, p0;
    int iterations = 0;
    double rnorm = 0.0;
    for (;; ++iterations) {
        const std::pair<RMat, RMat> bases = bases_at(x);
        const RMat& P1basis = bases.first;
        const RMat& W = bases.second;
        auto frozen = [&](const RVec& y) { return reduced(y, P1basis, W); };
        const RVec r = frozen(x);
        rnorm = inf_norm(r);
        if (rnorm <= cfg.residual_tolerance) break;
        if (iterations >= cfg.max_iterations)
            throw NonConvergence("step_nullspace: no convergence", rnorm, iterations);

        const RMat J = finite_diff_jacobian(frozen, x, cfg.fd_epsilon);
        const RVec dx = solve_linear(J, -r);
        RVec x_new = x + dx;
        if (cfg.damping == Damping::Halving) {
            double step_len = 1.0;
            for (int halvings = 0;
                 halvings < 30 && inf_norm(frozen(x_new)) > rnorm; ++halvings) {
                step_len *= 0.5;
                x_new = x + step_len * dx;
            }
        }
        x = x_new;
    }

    StepResult result;
    result.q1 = x.head(m);
    result.p1 = x.tail(m);
    result.newton_iterations = iterations;
    result.residual_norm = rnorm;

    // Multiplier recovery by least squares on the unprojected momentum blocks.
    auto [a, b] = free_blocks(result.q1, result.p1);
    if (separated) {
        const RMat G0 = cs.jac_phi(q0);
        const RMat G1 = cs.jac_phi(result.q1);
        const RVec p0eq = a - (1.0 - theta) * h * b;
        const RVec p1eq = a + theta * h * b;
        result.lambda1 = RMat(-h * G0.transpose()).colPivHouseholderQr().solve(p0eq);
        result.lambda2 = RMat(h * G1.transpose()).colPivHouseholderQr().solve(p1eq);
    } else {
        const CotangentSample s = cotangent_lift_inverse(map, q0, p0, result.q1, result.p1, h);
        const ConstraintPartials d = modified_constraint_partials(mc, s.q, s.qdot);
        RMat Kt(2 * m, 2 * k);
        Kt.topLeftCorner(m, k) = d.dv_phi1.transpose();
        Kt.topRightCorner(m, k) = d.dv_phi2.transpose();
        Kt.bottomLeftCorner(m, k) = d.dq_phi1.transpose();
        Kt.bottomRightCorner(m, k) = d.dq_phi2.transpose();
        RVec stacked(2 * m);
        stacked << a, b;
        const RVec lambda = Kt.colPivHouseholderQr().solve(stacked);
        result.lambda1 = lambda.head(k);
        result.lambda2 = lambda.tail(k);
    }
    return result;
}

StepResult step(const StepperSpec& spec, const MechanicalSystem& sys, const ConstraintSet& cs,
                const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg) {
    switch (spec.kind) {
        case StepperKind::EulerA:   return step_euler_a(sys, cs, q0, p0, h, cfg);
        case StepperKind::EulerB:   return step_euler_b(sys, cs, q0, p0, h, cfg);
        case StepperKind::Midpoint: return step_midpoint(sys, cs, q0, p0, h, cfg);
        case StepperKind::Rattle:   return step_rattle(sys, cs, q0, p0, h, cfg);
        case StepperKind::GenericTheta:
            return step_generic(theta_method(spec.theta), sys, mechanical_lagrangian(sys), cs,
                                q0, p0, h, cfg);
        case StepperKind::Nullspace:
            return step_nullspace(theta_method(spec.theta), sys, mechanical_lagrangian(sys), cs,
                                  q0, p0, h, cfg);
    }
    throw Error("step: unknown stepper kind");
}

IntegrateResult integrate(const StepperSpec& spec, const MechanicalSystem& sys,
                          const ConstraintSet& cs, const RVec& q0, const RVec& p0,
                          double h, long steps, const NewtonConfig& cfg, bool auto_project,
                          bool warm_start) {
    if (h <= 0.0) throw Error("integrate: h must be positive");
    if (steps < 0) throw Error("integrate: steps must be nonnegative");

    RVec q = q0, p = p0;
    if (auto_project) std::tie(q, p) = project_initial_condition(sys, cs, q, p, cfg);
    require_feasible(sys, cs, q, p, "integrate");

    // Bind the heavier steppers once, outside the loop.
    const DiscretizationMap map = (spec.kind == StepperKind::GenericTheta ||
                                   spec.kind == StepperKind::Nullspace)
                                      ? theta_method(spec.theta)
                                      : DiscretizationMap{};
    const ExtendedLagrangian ext = mechanical_lagrangian(sys);
    MultiplierGuess carried;
    auto one_step = [&](const RVec& qa, const RVec& pa) -> StepResult {
        const MultiplierGuess* warm =
            (warm_start && carried.lambda1.size() == cs.count) ? &carried : nullptr;
        switch (spec.kind) {
            case StepperKind::EulerA:   return step_euler_a(sys, cs, qa, pa, h, cfg, warm);
            case StepperKind::EulerB:   return step_euler_b(sys, cs, qa, pa, h, cfg, warm);
            case StepperKind::Midpoint: return step_midpoint(sys, cs, qa, pa, h, cfg, warm);
            case StepperKind::Rattle:   return step_rattle(sys, cs, qa, pa, h, cfg, warm);
            case StepperKind::GenericTheta:
                return step_generic(map, sys, ext, cs, qa, pa, h, cfg, warm);
            case StepperKind::Nullspace:
                return step_nullspace(map, sys, ext, cs, qa, pa, h, cfg);
        }
        throw Error("integrate: unknown stepper kind");
    };

    IntegrateResult out;
    Trajectory& traj = out.trajectory;
    traj.h = h;
    traj.times.push_back(0.0);
    traj.q.push_back(q);
    traj.p.push_back(p);

    for (long i = 0; i < steps; ++i) {
        try {
            const StepResult r = one_step(q, p);
            q = r.q1;
            p = r.p1;
            if (warm_start) carried = {r.lambda1, r.lambda2};
            traj.times.push_back(h * static_cast<double>(i + 1));
            traj.q.push_back(q);
            traj.p.push_back(p);
            traj.lambda1.push_back(r.lambda1);
            traj.lambda2.push_back(r.lambda2);
            traj.newton_iterations.push_back(r.newton_iterations);
            traj.residual_norms.push_back(r.residual_norm);
        } catch (const Error& e) {
            out.error = IntegrationError{i, e.what()};
            break;
        }
    }
    return out;
}

} // namespace dmech
