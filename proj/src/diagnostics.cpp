#include "dmech/diagnostics.hpp"

#include <cmath>

namespace dmech {

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

} // namespace

double symplecticity_defect(const ChartedModel& model, const PhaseMap& one_step,
                            const RVec& z, double fd_eps) {
    const Eigen::Index d = 2 * model.dim;
    auto charted = [&](const RVec& zz) -> RVec {
        auto [q, p] = model.to_phase(zz);
        auto [q1, p1] = one_step(q, p);
        return model.from_phase(q1, p1);
    };
    const RMat J = finite_diff_jacobian(charted, z, fd_eps);

    RMat Omega = RMat::Zero(d, d);
    Omega.topRightCorner(model.dim, model.dim).setIdentity();
    Omega.bottomLeftCorner(model.dim, model.dim) =
        -RMat::Identity(model.dim, model.dim);

    return (J.transpose() * Omega * J - Omega).lpNorm<Eigen::Infinity>();
}

ViolationSeries constraint_violation_series(const MechanicalSystem& sys,
                                            const ConstraintSet& cs,
                                            const Trajectory& traj) {
    ViolationSeries out;
    for (size_t i = 0; i < traj.q.size(); ++i) {
        const RVec c = cs.phi(traj.q[i]);
        const RVec t = cs.jac_phi(traj.q[i]) * (sys.mass_inverse * traj.p[i]);
        const double cn = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
        const double tn = t.size() ? t.lpNorm<Eigen::Infinity>() : 0.0;
        out.constraint.push_back(cn);
        out.tangency.push_back(tn);
        out.max_constraint = std::max(out.max_constraint, cn);
        out.max_tangency = std::max(out.max_tangency, tn);
    }
    return out;
}

EnergySeries energy_series(const MechanicalSystem& sys, const Trajectory& traj) {
    EnergySeries out;
    std::vector<double> idx;
    for (size_t i = 0; i < traj.q.size(); ++i) {
        const double T = 0.5 * traj.p[i].dot(sys.mass_inverse * traj.p[i]);
        out.energy.push_back(T + sys.potential(traj.q[i]));
        idx.push_back(static_cast<double>(i));
    }
    if (out.energy.size() >= 2) out.drift_slope = ls_slope(idx, out.energy);
    return out;
}

DiagnosticsReport summarize_trajectory(const MechanicalSystem& sys, const ConstraintSet& cs,
                                       const Trajectory& traj) {
    DiagnosticsReport report;
    const ViolationSeries v = constraint_violation_series(sys, cs, traj);
    report.max_constraint_violation = v.max_constraint;
    report.max_tangency_violation = v.max_tangency;
    report.energy_drift_slope = energy_series(sys, traj).drift_slope;
    return report;
}

double convergence_order(const StepperSpec& spec, const MechanicalSystem& sys,
                         const ConstraintSet& cs, const RVec& q0, const RVec& p0,
                         const std::vector<double>& h_list, double T_final,
                         const NewtonConfig& cfg) {
    if (h_list.size() < 3) throw Error("convergence_order: need at least three step sizes");
    for (size_t i = 1; i < h_list.size(); ++i)
        if (h_list[i] >= h_list[i - 1])
            throw Error("convergence_order: h_list must be descending");

    auto run_to = [&](double h) -> std::pair<RVec, RVec> {
        const long steps = std::lround(T_final / h);
        if (std::abs(steps * h - T_final) > 1e-9 * T_final)
            throw Error("convergence_order: T_final is not a multiple of h");
        const IntegrateResult res = integrate(spec, sys, cs, q0, p0, h, steps, cfg);
        if (res.error)
            throw NonConvergence("convergence_order: step failed at h = " + std::to_string(h),
                                 0.0, 0);
        return {res.trajectory.q.back(), res.trajectory.p.back()};
    };

    const auto [q_ref, p_ref] = run_to(h_list.back() / 20.0);

    std::vector<double> log_h, log_e;
    for (double h : h_list) {
        const auto [q, p] = run_to(h);
        const double err = std::max((q - q_ref).lpNorm<Eigen::Infinity>(),
                                    (p - p_ref).lpNorm<Eigen::Infinity>());
        log_h.push_back(std::log(h));
        log_e.push_back(std::log(err));
    }
    return ls_slope(log_h, log_e);
}

std::pair<RVec, RVec> naive_projected_euler_step(const MechanicalSystem& sys,
                                                 const ConstraintSet& cs,
                                                 const RVec& q, const RVec& p, double h,
                                                 const NewtonConfig& cfg) {
    const RVec q_free = q + h * (sys.mass_inverse * p);
    const RVec p_free = p - h * sys.grad_potential(q);
    return project_initial_condition(sys, cs, q_free, p_free, cfg);
}

} // namespace dmech
