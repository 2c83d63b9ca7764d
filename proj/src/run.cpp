#include "dmech/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dmech/models.hpp"

namespace dmech {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("model_file", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

HolonomicModel build_holonomic(const RunConfig& cfg) {
    if (cfg.model == "pendulum") return make_pendulum();
    if (cfg.model == "spherical_pendulum") return make_spherical_pendulum();
    if (cfg.model == "double_pendulum_constrained") return make_double_pendulum();
    if (cfg.model == "rigid_body_constrained") return make_rigid_body_model(RigidBodyParams{});
    if (cfg.model == "custom") {
        const CustomModelSpec spec = parse_custom_model(read_file(cfg.model_file));
        const int n = spec.dim;
        RMat M(n, n), K(n, n);
        RVec b(n);
        for (int i = 0; i < n; ++i) {
            b(i) = spec.linear[static_cast<size_t>(i)];
            for (int j = 0; j < n; ++j) {
                M(i, j) = spec.mass[static_cast<size_t>(n * i + j)];
                K(i, j) = spec.stiffness[static_cast<size_t>(n * i + j)];
            }
        }
        return make_quadratic_model(std::move(M), std::move(K), std::move(b),
                                    spec.unit_sphere);
    }
    throw ValidationError("model", "not an ambient model: " + cfg.model);
}

StepperSpec stepper_of(const RunConfig& cfg) {
    switch (cfg.method) {
        case Method::EulerA: return {StepperKind::EulerA, 0.0};
        case Method::EulerB: return {StepperKind::EulerB, 1.0};
        case Method::Midpoint: return {StepperKind::Midpoint, 0.5};
        case Method::Rattle: return {StepperKind::Rattle, 0.5};
        case Method::GenericTheta: return {StepperKind::GenericTheta, cfg.theta};
        case Method::Nullspace: return {StepperKind::Nullspace, cfg.theta};
        default: throw ValidationError("method", "not an ambient method");
    }
}

void split_state(const RunConfig& cfg, const HolonomicModel& model, RVec& q0, RVec& p0) {
    const Eigen::Index m = model.system.dim;
    if (cfg.initial_state.empty()) {
        q0 = model.default_q0;
        p0 = model.default_p0;
        return;
    }
    if (static_cast<Eigen::Index>(cfg.initial_state.size()) != 2 * m)
        throw ValidationError("initial_state", "expected " + std::to_string(2 * m) +
                                                   " numbers for model " + cfg.model);
    q0.resize(m);
    p0.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        q0(i) = cfg.initial_state[static_cast<size_t>(i)];
        p0(i) = cfg.initial_state[static_cast<size_t>(m + i)];
    }
}

NewtonConfig newton_of(const RunConfig& cfg) {
    NewtonConfig n;
    n.residual_tolerance = cfg.tolerance;
    return n;
}

Retraction retraction_of(const RunConfig& cfg) {
    return cfg.retraction == "cayley" ? so3_cayley_retraction() : so3_exp_retraction();
}

struct LieState {
    RVec g, alpha;
};

LieState lie_state_of(const RunConfig& cfg, const LieRigidBody& body) {
    if (cfg.initial_state.empty()) return {body.default_g0, body.default_alpha0};
    if (cfg.initial_state.size() != 18)
        throw ValidationError("initial_state",
                              "expected 18 numbers (R row-major, x, alpha_rot, alpha_lin)");
    RVec g(12), alpha(6);
    for (int i = 0; i < 12; ++i) g(i) = cfg.initial_state[static_cast<size_t>(i)];
    for (int i = 0; i < 6; ++i) alpha(i) = cfg.initial_state[static_cast<size_t>(12 + i)];
    return {g, alpha};
}

double lie_energy(const LieRigidBody& body, const RVec& alpha) {
    const RVec xi = body.hamiltonian.dH_dalpha(RVec(), alpha);
    return 0.5 * alpha.dot(xi);
}

double orthogonality_defect(const RVec& g) {
    const Eigen::Matrix3d R = so3_unflatten(g.head(9));
    return (R.transpose() * R - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>();
}

int simulate_holonomic(const RunConfig& cfg, std::ostream& out) {
    const HolonomicModel model = build_holonomic(cfg);
    RVec q0, p0;
    split_state(cfg, model, q0, p0);
    if (!cfg.project_initial) {
        const RVec lr = legendre_residual(model.system, model.constraints, q0, p0);
        if (lr.size() > 0 && lr.lpNorm<Eigen::Infinity>() > kFeasibilityTolerance)
            throw ValidationError("initial_state",
                                  "violates the constraint or tangency condition; set "
                                  "project_initial = true to restore feasibility");
    }

    const IntegrateResult res = integrate(stepper_of(cfg), model.system, model.constraints,
                                          q0, p0, cfg.h, cfg.steps, newton_of(cfg),
                                          cfg.project_initial);
    const Trajectory& traj = res.trajectory;
    const ViolationSeries viol = constraint_violation_series(model.system, model.constraints, traj);
    const EnergySeries energy = energy_series(model.system, traj);

    std::ofstream file(cfg.output_path);
    if (!file) throw ValidationError("output_path", "cannot open '" + cfg.output_path + "'");
    const Eigen::Index m = model.system.dim;
    file << "step,time";
    for (Eigen::Index i = 0; i < m; ++i) file << ",q" << i;
    for (Eigen::Index i = 0; i < m; ++i) file << ",p" << i;
    file << ",phi_max,tangency_max,energy,newton_iterations\n";
    for (size_t s = 0; s < traj.q.size(); ++s) {
        file << s << ',' << fmt17(traj.times[s]);
        for (Eigen::Index i = 0; i < m; ++i) file << ',' << fmt17(traj.q[s](i));
        for (Eigen::Index i = 0; i < m; ++i) file << ',' << fmt17(traj.p[s](i));
        file << ',' << fmt17(viol.constraint[s]) << ',' << fmt17(viol.tangency[s]) << ','
             << fmt17(energy.energy[s]) << ','
             << (s == 0 ? 0 : traj.newton_iterations[s - 1]) << '\n';
    }
    if (res.error)
        file << "# aborted at step " << res.error->step_index << ": " << res.error->what
             << '\n';

    out << "model " << cfg.model << ", method " << method_name(cfg.method) << ", h " << cfg.h
        << ", steps completed " << (traj.q.size() - 1) << "/" << cfg.steps << "\n"
        << "max |phi|       " << viol.max_constraint << "\n"
        << "max tangency    " << viol.max_tangency << "\n"
        << "energy drift    " << energy.drift_slope << " per step\n"
        << "output          " << cfg.output_path << "\n";
    if (res.error) {
        out << "aborted: " << res.error->what << "\n";
        return 2;
    }
    return 0;
}

int simulate_lie(const RunConfig& cfg, std::ostream& out) {
    const LieRigidBody body =
        make_lie_rigid_body(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal(), 1.0,
                            retraction_of(cfg));
    const LieState s0 = lie_state_of(cfg, body);

    LieTrajectory traj;
    std::string abort_reason;
    try {
        if (cfg.method == Method::LieHamiltonian)
            traj = integrate_lie_hamiltonian(body.ops, body.retraction, body.hamiltonian,
                                             s0.g, s0.alpha, cfg.h, cfg.steps, newton_of(cfg));
        else
            traj = integrate_lie_constrained(body.ops, body.retraction, body.lagrangian,
                                             body.sphere_constraint, s0.g, s0.alpha, cfg.h,
                                             cfg.steps, newton_of(cfg));
    } catch (const Error& e) {
        abort_reason = e.what();
    }
    if (traj.g.empty()) {
        traj.h = cfg.h;
        traj.times.push_back(0.0);
        traj.g.push_back(s0.g);
        traj.alpha.push_back(s0.alpha);
    }

    const RVec pi0 = spatial_momentum(body.ops, traj.g.front(), traj.alpha.front());
    double max_defect = 0.0, max_feas = 0.0, max_constraint = 0.0;
    for (size_t s = 0; s < traj.g.size(); ++s) {
        const RVec pi = spatial_momentum(body.ops, traj.g[s], traj.alpha[s]);
        max_defect = std::max(max_defect, (pi - pi0).lpNorm<Eigen::Infinity>());
        max_feas = std::max(max_feas, orthogonality_defect(traj.g[s]));
        if (cfg.method == Method::LieConstrained)
            max_constraint = std::max(
                max_constraint, body.sphere_constraint.phi(traj.g[s]).lpNorm<Eigen::Infinity>());
    }

    std::ofstream file(cfg.output_path);
    if (!file) throw ValidationError("output_path", "cannot open '" + cfg.output_path + "'");
    file << "step,time";
    for (int i = 0; i < 12; ++i) file << ",g" << i;
    for (int i = 0; i < 6; ++i) file << ",alpha" << i;
    file << ",phi_max,tangency_max,energy,newton_iterations\n";
    for (size_t s = 0; s < traj.g.size(); ++s) {
        const double phi_row =
            cfg.method == Method::LieConstrained
                ? std::max(orthogonality_defect(traj.g[s]),
                           body.sphere_constraint.phi(traj.g[s]).lpNorm<Eigen::Infinity>())
                : orthogonality_defect(traj.g[s]);
        const double tang_row =
            cfg.method == Method::LieConstrained
                ? (body.sphere_constraint.trivialized_grad(traj.g[s]) *
                   body.lagrangian.xi_from_alpha(traj.g[s], traj.alpha[s]))
                      .lpNorm<Eigen::Infinity>()
                : 0.0;
        file << s << ',' << fmt17(traj.times[s]);
        for (int i = 0; i < 12; ++i) file << ',' << fmt17(traj.g[s](i));
        for (int i = 0; i < 6; ++i) file << ',' << fmt17(traj.alpha[s](i));
        file << ',' << fmt17(phi_row) << ',' << fmt17(tang_row) << ','
             << fmt17(lie_energy(body, traj.alpha[s])) << ','
             << (s == 0 ? 0 : traj.newton_iterations[s - 1]) << '\n';
    }
    if (!abort_reason.empty())
        file << "# aborted at step " << (traj.g.size() - 1) << ": " << abort_reason << '\n';

    out << "model " << cfg.model << ", method " << method_name(cfg.method) << " ("
        << cfg.retraction << "), h " << cfg.h << ", steps completed " << (traj.g.size() - 1)
        << "/" << cfg.steps << "\n"
        << "max |R^T R - I|          " << max_feas << "\n"
        << "max spatial momentum defect " << max_defect << "\n";
    if (cfg.method == Method::LieConstrained)
        out << "max |phi|                " << max_constraint << "\n";
    out << "output          " << cfg.output_path << "\n";
    if (!abort_reason.empty()) {
        out << "aborted: " << abort_reason << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    try {
        return is_lie_method(cfg.method) ? simulate_lie(cfg, out) : simulate_holonomic(cfg, out);
    } catch (const ValidationError& e) {
        out << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        out << "config error: " << e.what() << "\n";
        return 1;
    }
}

CheckKind parse_check_kind(const std::string& name) {
    if (name == "axioms") return CheckKind::Axioms;
    if (name == "symplectic") return CheckKind::Symplectic;
    if (name == "convergence") return CheckKind::Convergence;
    if (name == "conservation") return CheckKind::Conservation;
    throw ValidationError("kind", "must be axioms, symplectic, convergence or conservation");
}

namespace {

double theta_of_method(const RunConfig& cfg) {
    switch (cfg.method) {
        case Method::EulerA: return 0.0;
        case Method::EulerB: return 1.0;
        case Method::Midpoint: return 0.5;
        case Method::GenericTheta:
        case Method::Nullspace: return cfg.theta;
        default:
            throw ValidationError("method", "check = axioms needs a theta-family method");
    }
}

int check_axioms(const RunConfig& cfg, std::ostream& out) {
    const HolonomicModel model = build_holonomic(cfg);
    const double theta = theta_of_method(cfg);
    const DiscretizationMap map = theta_method(theta);

    std::vector<QPair> samples;
    const Eigen::Index m = model.system.dim;
    samples.emplace_back(model.default_q0, RVec::Ones(m));
    for (Eigen::Index i = 0; i < m; ++i)
        samples.emplace_back(model.default_q0, RVec::Unit(m, i));

    try {
        const AxiomReport rep = check_discretization_axioms(map, samples, cfg.h);
        out << "zero-section defect " << rep.zero_section_defect << "\n"
            << "derivative defect   " << rep.derivative_defect << "\n"
            << "axioms: PASS\n";
        return 0;
    } catch (const AxiomViolation& e) {
        out << "zero-section defect " << e.zero_section_defect << "\n"
            << "derivative defect   " << e.derivative_defect << "\n"
            << "axioms: FAIL\n";
        return 3;
    }
}

int check_symplectic(const RunConfig& cfg, std::ostream& out) {
    const HolonomicModel model = build_holonomic(cfg);
    if (!model.chart)
        throw ValidationError("model", "check = symplectic needs a charted model "
                                       "(pendulum or spherical_pendulum)");
    RVec q0, p0;
    split_state(cfg, model, q0, p0);
    const NewtonConfig ncfg = newton_of(cfg);
    const StepperSpec spec = stepper_of(cfg);

    auto one_step = [&](const RVec& q, const RVec& p) {
        const StepResult r = step(spec, model.system, model.constraints, q, p, cfg.h, ncfg);
        return std::make_pair(r.q1, r.p1);
    };
    auto control_step = [&](const RVec& q, const RVec& p) {
        return naive_projected_euler_step(model.system, model.constraints, q, p, cfg.h, ncfg);
    };

    const RVec z = model.chart->from_phase(q0, p0);
    const double defect = symplecticity_defect(*model.chart, one_step, z);
    const double control = symplecticity_defect(*model.chart, control_step, z);
    const bool pass = defect <= 1e-5;
    out << "symplectic defect " << defect << " (threshold 1e-5)\n"
        << "projected-Euler control " << control << " (reference, grows with momentum)\n"
        << "symplectic: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 3;
}

int check_convergence(const RunConfig& cfg, std::ostream& out) {
    const HolonomicModel model = build_holonomic(cfg);
    RVec q0, p0;
    split_state(cfg, model, q0, p0);

    double expected = 1.0;
    if (cfg.method == Method::Midpoint || cfg.method == Method::Rattle) expected = 2.0;
    if ((cfg.method == Method::GenericTheta || cfg.method == Method::Nullspace) &&
        cfg.theta == 0.5)
        expected = 2.0;

    const std::vector<double> h_list{0.02, 0.01, 0.005, 0.0025};
    const double slope = convergence_order(stepper_of(cfg), model.system, model.constraints,
                                           q0, p0, h_list, 1.0, newton_of(cfg));
    const bool pass = std::abs(slope - expected) <= 0.1;
    out << "convergence slope " << slope << " (expected " << expected << " +- 0.1)\n"
        << "convergence: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 3;
}

int check_conservation(const RunConfig& cfg, std::ostream& out) {
    if (is_lie_method(cfg.method)) {
        const LieRigidBody body =
            make_lie_rigid_body(Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal(), 1.0,
                                retraction_of(cfg));
        const LieState s0 = lie_state_of(cfg, body);
        LieTrajectory traj;
        if (cfg.method == Method::LieHamiltonian)
            traj = integrate_lie_hamiltonian(body.ops, body.retraction, body.hamiltonian,
                                             s0.g, s0.alpha, cfg.h, cfg.steps, newton_of(cfg));
        else
            traj = integrate_lie_constrained(body.ops, body.retraction, body.lagrangian,
                                             body.sphere_constraint, s0.g, s0.alpha, cfg.h,
                                             cfg.steps, newton_of(cfg));
        const RVec pi0 = spatial_momentum(body.ops, traj.g.front(), traj.alpha.front());
        double max_defect = 0.0, max_feas = 0.0;
        for (size_t s = 0; s < traj.g.size(); ++s) {
            const RVec pi = spatial_momentum(body.ops, traj.g[s], traj.alpha[s]);
            if (cfg.method == Method::LieHamiltonian)
                max_defect = std::max(max_defect, (pi - pi0).lpNorm<Eigen::Infinity>());
            max_feas = std::max(max_feas, orthogonality_defect(traj.g[s]));
        }
        const bool pass = max_feas <= 1e-12 &&
                          (cfg.method != Method::LieHamiltonian || max_defect <= 1e-9);
        out << "max |R^T R - I| " << max_feas << " (threshold 1e-12)\n";
        if (cfg.method == Method::LieHamiltonian)
            out << "max spatial momentum defect " << max_defect << " (threshold 1e-9)\n";
        out << "conservation: " << (pass ? "PASS" : "FAIL") << "\n";
        return pass ? 0 : 3;
    }

    const HolonomicModel model = build_holonomic(cfg);
    RVec q0, p0;
    split_state(cfg, model, q0, p0);
    const IntegrateResult res = integrate(stepper_of(cfg), model.system, model.constraints,
                                          q0, p0, cfg.h, cfg.steps, newton_of(cfg),
                                          cfg.project_initial);
    if (res.error) {
        out << "conservation: FAIL (aborted at step " << res.error->step_index << ")\n";
        return 3;
    }
    const DiagnosticsReport report =
        summarize_trajectory(model.system, model.constraints, res.trajectory);

    const double feas_threshold = 100.0 * cfg.tolerance;
    const bool second_order = cfg.method == Method::Midpoint || cfg.method == Method::Rattle;
    bool pass = report.max_constraint_violation <= feas_threshold &&
                report.max_tangency_violation <= feas_threshold;
    out << "max |phi|    " << report.max_constraint_violation << " (threshold "
        << feas_threshold << ")\n"
        << "max tangency " << report.max_tangency_violation << " (threshold "
        << feas_threshold << ")\n"
        << "energy drift " << report.energy_drift_slope << " per step";
    if (second_order) {
        pass = pass && std::abs(report.energy_drift_slope) < 1e-8;
        out << " (threshold 1e-8)";
    }
    out << "\nconservation: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 3;
}

} // namespace

int cmd_check(const RunConfig& cfg, CheckKind kind, std::ostream& out) {
    try {
        switch (kind) {
            case CheckKind::Axioms: return check_axioms(cfg, out);
            case CheckKind::Symplectic: return check_symplectic(cfg, out);
            case CheckKind::Convergence: return check_convergence(cfg, out);
            case CheckKind::Conservation: return check_conservation(cfg, out);
        }
    } catch (const ValidationError& e) {
        out << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        out << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        out << "check failed: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace dmech
