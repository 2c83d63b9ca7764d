#include <doctest.h>

#include <random>

#include "dmech/models.hpp"
#include "oracles.hpp"

using namespace dmech;

namespace {

RVec vec2(double a, double b) {
    RVec v(2);
    v << a, b;
    return v;
}

MechanicalSystem free_particle(int dim) {
    return make_mechanical_system(RMat::Identity(dim, dim),
                                  [](const RVec&) { return 0.0; },
                                  [dim](const RVec&) { return RVec(RVec::Zero(dim)); });
}

ConstraintSet no_constraints(int dim) {
    return make_constraint_set(0, [](const RVec&) { return RVec(0); },
                               [dim](const RVec&) { return RMat(0, dim); });
}

double legendre_norm(const HolonomicModel& m, const RVec& q, const RVec& p) {
    return legendre_residual(m.system, m.constraints, q, p).lpNorm<Eigen::Infinity>();
}

} // namespace

TEST_CASE("assemble_step_residual: Euler-B block (a) matches the closed form") {
    const HolonomicModel pend = make_pendulum();
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    const DiscretizationMap map = theta_method(1.0);
    const double h = 0.02;
    oracles::PendulumSampler sample;

    for (int trial = 0; trial < 10; ++trial) {
        auto [q0, p0] = sample();
        StepUnknowns u;
        u.q1 = q0 + vec2(0.01, -0.02);
        u.p1 = p0 + vec2(0.05, 0.03);
        u.lambda1 = RVec::Constant(1, 0.7);
        u.lambda2 = RVec::Constant(1, -0.4);

        const RVec r = assemble_step_residual(map, pend.system, ext, pend.constraints,
                                              q0, p0, u, h);
        const RVec v = (u.q1 - q0) / h;
        const RVec expected_a = p0 - v + h * u.lambda1(0) * 2.0 * q0;  // M = I
        CHECK((r.segment(0, 2) - expected_a).lpNorm<Eigen::Infinity>() <= 1e-11);

        const RVec expected_b = (u.p1 - p0) / h +
                                pend.system.grad_potential(u.q1) -
                                u.lambda1(0) * 2.0 * q0 - u.lambda2(0) * 2.0 * u.q1;
        CHECK((r.segment(2, 2) - expected_b).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("assemble_step_residual: unconstrained explicit pair solves exactly") {
    const int dim = 2;
    RMat K(2, 2);
    K << 2.0, 0.0, 0.0, 0.5;
    MechanicalSystem sys = make_mechanical_system(
        RMat::Identity(dim, dim),
        [K](const RVec& q) { return 0.5 * q.dot(K * q); },
        [K](const RVec& q) { return RVec(K * q); });
    const ConstraintSet cs = no_constraints(dim);
    const ExtendedLagrangian ext = mechanical_lagrangian(sys);
    const DiscretizationMap map = theta_method(0.0);
    const double h = 0.05;

    const RVec q0 = vec2(0.4, -0.7), p0 = vec2(0.2, 0.1);
    StepUnknowns u;
    u.lambda1 = RVec(0);
    u.lambda2 = RVec(0);

    // The explicit-Euler pair: p1 = (q1 - q0)/h and (p1 - p0)/h = -grad V(q0).
    u.p1 = p0 - h * sys.grad_potential(q0);
    u.q1 = q0 + h * u.p1;
    RVec r = assemble_step_residual(map, sys, ext, cs, q0, p0, u, h);
    CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-12);

    u.p1 += vec2(1e-3, 0.0);
    r = assemble_step_residual(map, sys, ext, cs, q0, p0, u, h);
    CHECK(r.lpNorm<Eigen::Infinity>() > 1e-5);
}

TEST_CASE("assemble_step_residual: diagonal evaluation") {
    const HolonomicModel pend = make_pendulum();
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    RVec q0 = vec2(0.6, -0.8), p0 = vec2(-0.8, -0.6);
    StepUnknowns u{q0, p0, RVec::Zero(1), RVec::Zero(1)};
    const RVec r = assemble_step_residual(theta_method(0.5), pend.system, ext,
                                          pend.constraints, q0, p0, u, 0.01);
    CHECK(std::abs(r(4)) <= 1e-14);                       // phi(q1)
    CHECK(std::abs(r(5)) <= 1e-14);                       // tangency
    CHECK(r.segment(2, 2).lpNorm<Eigen::Infinity>() > 1.0);  // gravity is not balanced
}

TEST_CASE("step_generic: pendulum Euler-B keeps the constraint pair") {
    const HolonomicModel pend = make_pendulum(9.81);
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    const RVec q0 = vec2(1.0, 0.0), p0 = vec2(0.0, -1.0);
    const StepResult r = step_generic(theta_method(1.0), pend.system, ext, pend.constraints,
                                      q0, p0, 0.001);
    CHECK(std::abs(pend.constraints.phi(r.q1)(0)) <= 1e-11);
    CHECK(std::abs(2.0 * r.q1.dot(r.p1)) <= 1e-11);

    // Independent solve of the printed equations.
    auto residual = [&](const RVec& x) -> RVec {
        const RVec q1 = x.segment(0, 2), p1 = x.segment(2, 2);
        const double lam = x(4), lamt = x(5);
        const RVec v = (q1 - q0) / 0.001;
        RVec rr(6);
        rr.segment(0, 2) = p0 - v + 0.001 * lam * 2.0 * q0;
        rr.segment(2, 2) = p1 - v + 0.001 * pend.system.grad_potential(q1) -
                           0.001 * lamt * 2.0 * q1;
        rr(4) = q1.squaredNorm() - 1.0;
        rr(5) = 2.0 * q1.dot(p1);
        return rr;
    };
    RVec x0(6);
    x0 << q0, p0, 0.0, 0.0;
    const RVec ref = oracles::naive_newton(residual, x0, 1e-13, 60);
    CHECK((r.q1 - ref.segment(0, 2)).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((r.p1 - ref.segment(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("step_generic: free particle flies straight for any theta") {
    MechanicalSystem sys = free_particle(2);
    const ConstraintSet cs = no_constraints(2);
    const ExtendedLagrangian ext = mechanical_lagrangian(sys);
    const RVec q0 = vec2(1.0, 2.0), p0 = vec2(-0.3, 0.4);
    for (double theta : {0.0, 0.3, 0.5, 1.0}) {
        const StepResult r = step_generic(theta_method(theta), sys, ext, cs, q0, p0, 0.25);
        CHECK((r.q1 - (q0 + 0.25 * p0)).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK((r.p1 - p0).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("closed forms agree with the generic stepper on random feasible states") {
    const HolonomicModel pend = make_pendulum(9.81);
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    oracles::PendulumSampler sample;
    const double h = 0.01;

    for (int trial = 0; trial < 20; ++trial) {
        auto [q0, p0] = sample();

        const StepResult a = step_euler_a(pend.system, pend.constraints, q0, p0, h);
        const StepResult ga = step_generic(theta_method(0.0), pend.system, ext,
                                           pend.constraints, q0, p0, h);
        CHECK((a.q1 - ga.q1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((a.p1 - ga.p1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((a.lambda2 - ga.lambda2).lpNorm<Eigen::Infinity>() <= 1e-10);

        const StepResult b = step_euler_b(pend.system, pend.constraints, q0, p0, h);
        const StepResult gb = step_generic(theta_method(1.0), pend.system, ext,
                                           pend.constraints, q0, p0, h);
        CHECK((b.q1 - gb.q1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((b.p1 - gb.p1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((b.lambda1 - gb.lambda1).lpNorm<Eigen::Infinity>() <= 1e-10);

        const StepResult m = step_midpoint(pend.system, pend.constraints, q0, p0, h);
        const StepResult gm = step_generic(theta_method(0.5), pend.system, ext,
                                           pend.constraints, q0, p0, h);
        CHECK((m.q1 - gm.q1).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK((m.p1 - gm.p1).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("step_euler_a: stays on the circle, free flight without constraints") {
    const HolonomicModel pend = make_pendulum(1.0);
    const StepResult r = step_euler_a(pend.system, pend.constraints,
                                      vec2(0.0, -1.0), vec2(1.0, 0.0), 0.01);
    CHECK(std::abs(r.q1.squaredNorm() - 1.0) <= 1e-11);

    MechanicalSystem sys = free_particle(3);
    const ConstraintSet cs = no_constraints(3);
    RVec q0(3), p0(3);
    q0 << 1.0, 0.0, -1.0;
    p0 << 0.5, 0.25, 0.0;
    const StepResult f = step_euler_a(sys, cs, q0, p0, 0.1);
    CHECK((f.q1 - (q0 + 0.1 * p0)).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((f.p1 - p0).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("step_euler_b: two consecutive steps satisfy the position-level recursion") {
    const HolonomicModel pend = make_pendulum(9.81);
    const RVec q0 = vec2(1.0, 0.0), p0 = vec2(0.0, -1.0);
    const double h = 0.01;

    const StepResult s1 = step_euler_b(pend.system, pend.constraints, q0, p0, h);
    const StepResult s2 = step_euler_b(pend.system, pend.constraints, s1.q1, s1.p1, h);

    // M (q2 - 2 q1 + q0)/h^2 + grad V(q1) must lie along grad phi(q1).
    const RVec second_diff = (s2.q1 - 2.0 * s1.q1 + q0) / (h * h);
    const RVec r = second_diff + pend.system.grad_potential(s1.q1);
    const RVec g = pend.constraints.jac_phi(s1.q1).transpose().col(0);
    const RVec orth = r - g * (g.dot(r) / g.squaredNorm());
    CHECK(orth.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("step_midpoint: self-adjointness (reversibility)") {
    const HolonomicModel pend = make_pendulum(9.81);
    oracles::PendulumSampler sample;
    for (int trial = 0; trial < 5; ++trial) {
        auto [q0, p0] = sample();
        const StepResult fwd = step_midpoint(pend.system, pend.constraints, q0, p0, 0.01);
        const StepResult back =
            step_midpoint(pend.system, pend.constraints, fwd.q1, -fwd.p1, 0.01);
        CHECK((back.q1 - q0).lpNorm<Eigen::Infinity>() <= 1e-9);
        CHECK((back.p1 + p0).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("step_rattle: agrees with the textbook two-stage implementation") {
    const HolonomicModel pend = make_pendulum(9.81);
    RVec q = vec2(1.0, 0.0), p = vec2(0.0, -0.5);
    const double h = 0.01;
    for (int i = 0; i < 100; ++i) {
        const StepResult mine = step_rattle(pend.system, pend.constraints, q, p, h);
        const auto [qr, pr] = oracles::textbook_rattle(pend.system, pend.constraints, q, p, h);
        CHECK((mine.q1 - qr).lpNorm<Eigen::Infinity>() <= 1e-9);
        CHECK((mine.p1 - pr).lpNorm<Eigen::Infinity>() <= 1e-9);
        q = mine.q1;
        p = mine.p1;
    }
}

TEST_CASE("step_rattle: no secular energy drift over a thousand steps") {
    const HolonomicModel pend = make_pendulum(9.81);
    const double a = 0.3;
    const IntegrateResult res = integrate({StepperKind::Rattle}, pend.system, pend.constraints,
                                          vec2(std::sin(a), -std::cos(a)), vec2(0.0, 0.0),
                                          0.01, 1000);
    REQUIRE(!res.error);
    const EnergySeries es = energy_series(pend.system, res.trajectory);
    CHECK(std::abs(es.drift_slope) < 1e-8);
    double dev = 0.0;
    for (double e : es.energy) dev = std::max(dev, std::abs(e - es.energy.front()));
    CHECK(dev < 1e-3);  // bounded error, not just a flat fit
}

TEST_CASE("step_nullspace: matches Euler-B on the pendulum, recovers multipliers") {
    const HolonomicModel pend = make_pendulum(9.81);
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    oracles::PendulumSampler sample;
    const double h = 0.01;

    for (int trial = 0; trial < 10; ++trial) {
        auto [q0, p0] = sample();
        const StepResult ns = step_nullspace(theta_method(1.0), pend.system, ext,
                                             pend.constraints, q0, p0, h);
        const StepResult eb = step_euler_b(pend.system, pend.constraints, q0, p0, h);
        CHECK((ns.q1 - eb.q1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((ns.p1 - eb.p1).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((ns.lambda1 - eb.lambda1).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK((ns.lambda2 - eb.lambda2).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
}

TEST_CASE("step_nullspace: empty constraint set reduces to the generic stepper") {
    MechanicalSystem sys = free_particle(2);
    const ConstraintSet cs = no_constraints(2);
    const ExtendedLagrangian ext = mechanical_lagrangian(sys);
    const RVec q0 = vec2(0.0, 1.0), p0 = vec2(1.0, -1.0);
    const StepResult ns = step_nullspace(theta_method(0.5), sys, ext, cs, q0, p0, 0.1);
    const StepResult g = step_generic(theta_method(0.5), sys, ext, cs, q0, p0, 0.1);
    CHECK((ns.q1 - g.q1).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((ns.p1 - g.p1).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("step_nullspace: generic-map path (no theta tag)") {
    const HolonomicModel pend = make_pendulum(9.81);
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    // Same map as theta = 1 but without the theta descriptor, forcing the
    // stacked-kernel projection.
    DiscretizationMap map = theta_method(1.0);
    map.theta.reset();
    const RVec q0 = vec2(0.6, -0.8), p0 = vec2(-0.4, -0.3);
    const StepResult ns = step_nullspace(map, pend.system, ext, pend.constraints, q0, p0, 0.01);
    const StepResult eb = step_euler_b(pend.system, pend.constraints, q0, p0, 0.01);
    CHECK((ns.q1 - eb.q1).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((ns.p1 - eb.p1).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("step_generic: user-defined nonlinear map preserves structure") {
    // A genuine discretization map outside the theta family: the velocity
    // enters through s(v) = h v + 0.1 h^2 v^2 componentwise.
    auto stretch = [](const RVec& v, double h) -> RVec {
        return h * v + 0.1 * h * h * RVec(v.array().square());
    };
    const DiscretizationMap bent = make_map(
        "bent",
        [stretch](const RVec& q, const RVec& v, double h) -> QPair {
            const RVec s = stretch(v, h);
            return {q - 0.25 * s, q + 0.75 * s};
        },
        [](const RVec& q0, const RVec& q1, double h) -> QPair {
            const RVec s = q1 - q0;
            RVec v = s / h;
            for (int it = 0; it < 60; ++it) {
                const RVec f = h * v + 0.1 * h * h * RVec(v.array().square()) - s;
                const RVec df = RVec::Constant(v.size(), h) + 0.2 * h * h * v;
                v -= RVec(f.array() / df.array());
            }
            return {q0 + 0.25 * s, v};
        },
        [](const RVec& q, const RVec& v, double h) -> RMat {
            const Eigen::Index m = q.size();
            const RVec ds = RVec::Constant(m, h) + 0.2 * h * h * v;
            RMat J = RMat::Zero(2 * m, 2 * m);
            J.topLeftCorner(m, m).setIdentity();
            J.bottomLeftCorner(m, m).setIdentity();
            J.topRightCorner(m, m) = RMat((-0.25 * ds).asDiagonal());
            J.bottomRightCorner(m, m) = RMat((0.75 * ds).asDiagonal());
            return J;
        });

    std::vector<QPair> samples{{vec2(1.0, 0.0), vec2(0.3, -0.4)}};
    CHECK_NOTHROW(check_discretization_axioms(bent, samples, 0.01));

    const HolonomicModel pend = make_pendulum(9.81);
    const ExtendedLagrangian ext = mechanical_lagrangian(pend.system);
    RVec q = vec2(1.0, 0.0), p = vec2(0.0, -0.5);
    for (int i = 0; i < 200; ++i) {
        const StepResult r = step_generic(bent, pend.system, ext, pend.constraints, q, p,
                                          0.01);
        q = r.q1;
        p = r.p1;
        CHECK(std::abs(pend.constraints.phi(q)(0)) <= 1e-11);
        CHECK(std::abs(2.0 * q.dot(p)) <= 1e-11);
    }

    auto one = [&](const RVec& qq, const RVec& pp) {
        const StepResult r = step_generic(bent, pend.system, ext, pend.constraints, qq, pp,
                                          0.01);
        return std::make_pair(r.q1, r.p1);
    };
    RVec z(2);
    z << 0.8, 0.5;
    CHECK(symplecticity_defect(*pend.chart, one, z) <= 1e-5);
}

TEST_CASE("multiplier-shift consistency at the step level") {
    const HolonomicModel pend = make_pendulum(9.81);
    const RVec q0 = vec2(0.6, 0.8);
    const RVec p0 = vec2(-0.8, 0.6) * 0.9;
    const RVec shift = pend.constraints.jac_phi(q0).transpose().col(0) * 2.5;

    auto [qa, pa] = project_initial_condition(pend.system, pend.constraints, q0, p0);
    auto [qb, pb] = project_initial_condition(pend.system, pend.constraints, q0, p0 + shift);
    CHECK((qa - qb).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((pa - pb).lpNorm<Eigen::Infinity>() <= 1e-12);

    const StepResult ra = step_euler_b(pend.system, pend.constraints, qa, pa, 0.01);
    const StepResult rb = step_euler_b(pend.system, pend.constraints, qb, pb, 0.01);
    const RVec na = project_momentum_to_N(pend.constraints, ra.q1, ra.p1);
    const RVec nb = project_momentum_to_N(pend.constraints, rb.q1, rb.p1);
    CHECK((na - nb).lpNorm<Eigen::Infinity>() <= 1e-11);
}

TEST_CASE("integrate: zero steps, feasibility enforcement, trajectory invariants") {
    const HolonomicModel pend = make_pendulum(9.81);
    const IntegrateResult empty = integrate({StepperKind::EulerB}, pend.system,
                                            pend.constraints, vec2(1.0, 0.0), vec2(0.0, 0.0),
                                            0.01, 0);
    CHECK(empty.trajectory.q.size() == 1);
    CHECK(!empty.error);

    CHECK_THROWS_AS(integrate({StepperKind::EulerB}, pend.system, pend.constraints,
                              vec2(1.5, 0.0), vec2(0.0, 0.0), 0.01, 5),
                    Error);

    // Auto-projection admits infeasible guesses.
    const IntegrateResult fixed = integrate({StepperKind::EulerB}, pend.system,
                                            pend.constraints, vec2(1.5, 0.0), vec2(0.4, 0.7),
                                            0.01, 5, {}, true);
    CHECK(!fixed.error);
    CHECK(fixed.trajectory.q.size() == 6);

    const IntegrateResult run = integrate({StepperKind::EulerB}, pend.system, pend.constraints,
                                          vec2(1.0, 0.0), vec2(0.0, 0.0), 0.01, 1000);
    REQUIRE(!run.error);
    const HolonomicModel& m = pend;
    for (size_t i = 0; i < run.trajectory.q.size(); ++i)
        CHECK(legendre_norm(m, run.trajectory.q[i], run.trajectory.p[i]) <= 1e-10);
}

TEST_CASE("integrate: multiplier warm start reproduces the cold trajectory") {
    const HolonomicModel pend = make_pendulum(9.81);
    const RVec q0 = vec2(1.0, 0.0), p0 = vec2(0.0, 0.0);
    const IntegrateResult cold = integrate({StepperKind::Rattle}, pend.system,
                                           pend.constraints, q0, p0, 0.01, 200);
    const IntegrateResult warm = integrate({StepperKind::Rattle}, pend.system,
                                           pend.constraints, q0, p0, 0.01, 200, {}, false,
                                           true);
    REQUIRE(!cold.error);
    REQUIRE(!warm.error);
    long cold_iters = 0, warm_iters = 0;
    for (size_t i = 0; i < cold.trajectory.q.size(); ++i) {
        CHECK((cold.trajectory.q[i] - warm.trajectory.q[i]).lpNorm<Eigen::Infinity>() <=
              1e-10);
        CHECK((cold.trajectory.p[i] - warm.trajectory.p[i]).lpNorm<Eigen::Infinity>() <=
              1e-10);
    }
    for (int n : cold.trajectory.newton_iterations) cold_iters += n;
    for (int n : warm.trajectory.newton_iterations) warm_iters += n;
    CHECK(warm_iters <= cold_iters);
}

TEST_CASE("integrate: spherical pendulum stays on the sphere") {
    const HolonomicModel sph = make_spherical_pendulum(9.81);
    const IntegrateResult run = integrate({StepperKind::EulerB}, sph.system, sph.constraints,
                                          sph.default_q0, sph.default_p0, 0.005, 2000);
    REQUIRE(!run.error);
    const ViolationSeries v = constraint_violation_series(sph.system, sph.constraints,
                                                          run.trajectory);
    CHECK(v.max_constraint <= 1e-10);
    CHECK(v.max_tangency <= 1e-10);
}

TEST_CASE("integrate: double pendulum keeps both links rigid") {
    const HolonomicModel dp = make_double_pendulum();
    RVec p0 = RVec::Zero(4);
    const IntegrateResult run = integrate({StepperKind::Rattle}, dp.system, dp.constraints,
                                          dp.default_q0, p0, 0.005, 500);
    REQUIRE(!run.error);
    const ViolationSeries v = constraint_violation_series(dp.system, dp.constraints,
                                                          run.trajectory);
    CHECK(v.max_constraint <= 1e-10);
    CHECK(v.max_tangency <= 1e-10);
}
