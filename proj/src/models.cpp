#include "dmech/models.hpp"

#include <cmath>

namespace dmech {

HolonomicModel make_pendulum(double gravity) {
    HolonomicModel model;
    model.name = "pendulum";
    model.system = make_mechanical_system(
        RMat::Identity(2, 2),
        [gravity](const RVec& q) { return gravity * q(1); },
        [gravity](const RVec&) -> RVec {
            RVec g(2);
            g << 0.0, gravity;
            return g;
        });
    model.constraints = make_constraint_set(
        1,
        [](const RVec& q) -> RVec {
            RVec c(1);
            c(0) = q.squaredNorm() - 1.0;
            return c;
        },
        [](const RVec& q) -> RMat { return 2.0 * q.transpose(); });
    model.default_q0 = RVec(2);
    model.default_q0 << 1.0, 0.0;
    model.default_p0 = RVec::Zero(2);

    ChartedModel chart;
    chart.id = "pendulum-angle";
    chart.dim = 1;
    chart.to_phase = [](const RVec& z) -> std::pair<RVec, RVec> {
        const double a = z(0), pa = z(1);
        RVec q(2), p(2);
        q << std::sin(a), -std::cos(a);
        p << pa * std::cos(a), pa * std::sin(a);
        return {q, p};
    };
    chart.from_phase = [](const RVec& q, const RVec& p) -> RVec {
        const double a = std::atan2(q(0), -q(1));
        RVec z(2);
        z << a, p(0) * std::cos(a) + p(1) * std::sin(a);
        return z;
    };
    model.chart = chart;
    return model;
}

HolonomicModel make_spherical_pendulum(double gravity) {
    HolonomicModel model;
    model.name = "spherical_pendulum";
    model.system = make_mechanical_system(
        RMat::Identity(3, 3),
        [gravity](const RVec& q) { return gravity * q(2); },
        [gravity](const RVec&) -> RVec {
            RVec g(3);
            g << 0.0, 0.0, gravity;
            return g;
        });
    model.constraints = make_constraint_set(
        1,
        [](const RVec& q) -> RVec {
            RVec c(1);
            c(0) = q.squaredNorm() - 1.0;
            return c;
        },
        [](const RVec& q) -> RMat { return 2.0 * q.transpose(); });
    model.default_q0 = RVec(3);
    model.default_q0 << 1.0, 0.0, 0.0;
    model.default_p0 = RVec(3);
    model.default_p0 << 0.0, 0.6, 0.0;

    // Stereographic chart from the north pole; the momentum lift solves the
    // tangency condition in the range of the chart differential.
    ChartedModel chart;
    chart.id = "sphere-stereographic";
    chart.dim = 2;
    auto embed = [](const Eigen::Vector2d& u) -> Eigen::Vector3d {
        const double s = u.squaredNorm();
        return Eigen::Vector3d(2.0 * u(0), 2.0 * u(1), s - 1.0) / (1.0 + s);
    };
    auto tangent = [](const Eigen::Vector2d& u) -> Eigen::Matrix<double, 3, 2> {
        const double s = u.squaredNorm();
        const double w = 2.0 / ((1.0 + s) * (1.0 + s));
        Eigen::Matrix<double, 3, 2> T;
        T << w * (1.0 + s - 2.0 * u(0) * u(0)), -w * 2.0 * u(0) * u(1),
            -w * 2.0 * u(0) * u(1), w * (1.0 + s - 2.0 * u(1) * u(1)),
            w * 2.0 * u(0), w * 2.0 * u(1);
        return T;
    };
    chart.to_phase = [embed, tangent](const RVec& z) -> std::pair<RVec, RVec> {
        const Eigen::Vector2d u = z.head(2);
        const Eigen::Vector2d pu = z.tail(2);
        const Eigen::Matrix<double, 3, 2> T = tangent(u);
        const Eigen::Vector3d q = embed(u);
        const Eigen::Vector3d p = T * (T.transpose() * T).inverse() * pu;
        return {RVec(q), RVec(p)};
    };
    chart.from_phase = [tangent](const RVec& q, const RVec& p) -> RVec {
        const Eigen::Vector2d u(q(0) / (1.0 - q(2)), q(1) / (1.0 - q(2)));
        const Eigen::Matrix<double, 3, 2> T = tangent(u);
        RVec z(4);
        z.head(2) = u;
        z.tail(2) = T.transpose() * Eigen::Vector3d(p);
        return z;
    };
    model.chart = chart;
    return model;
}

HolonomicModel make_double_pendulum(double m1, double m2, double l1, double l2,
                                    double gravity) {
    HolonomicModel model;
    model.name = "double_pendulum_constrained";
    RMat M = RMat::Zero(4, 4);
    M(0, 0) = M(1, 1) = m1;
    M(2, 2) = M(3, 3) = m2;
    model.system = make_mechanical_system(
        std::move(M),
        [gravity, m1, m2](const RVec& q) { return gravity * (m1 * q(1) + m2 * q(3)); },
        [gravity, m1, m2](const RVec&) -> RVec {
            RVec g(4);
            g << 0.0, gravity * m1, 0.0, gravity * m2;
            return g;
        });
    model.constraints = make_constraint_set(
        2,
        [l1, l2](const RVec& q) -> RVec {
            RVec c(2);
            c(0) = q.head(2).squaredNorm() - l1 * l1;
            c(1) = (q.tail(2) - q.head(2)).squaredNorm() - l2 * l2;
            return c;
        },
        [](const RVec& q) -> RMat {
            RMat J = RMat::Zero(2, 4);
            J(0, 0) = 2.0 * q(0);
            J(0, 1) = 2.0 * q(1);
            const RVec d = q.tail(2) - q.head(2);
            J(1, 0) = -2.0 * d(0);
            J(1, 1) = -2.0 * d(1);
            J(1, 2) = 2.0 * d(0);
            J(1, 3) = 2.0 * d(1);
            return J;
        });
    model.default_q0 = RVec(4);
    model.default_q0 << l1, 0.0, l1, -l2;
    model.default_p0 = RVec::Zero(4);
    return model;
}

HolonomicModel make_rigid_body_model(const RigidBodyParams& params) {
    AmbientRigidBody body = rigid_body_ambient(params);
    HolonomicModel model;
    model.name = "rigid_body_constrained";
    model.system = std::move(body.system);
    model.constraints = std::move(body.constraints);

    RigidBodyState s;
    const Eigen::Vector3d omega(0.3, 0.05, 0.0);
    s.P = s.R * so3_hat(omega) * params.inertia;  // Rdot J with Rdot = R hat(omega)
    model.default_q0 = rigid_body_pack_q(s);
    model.default_p0 = rigid_body_pack_p(s);
    return model;
}

HolonomicModel make_quadratic_model(RMat mass, RMat stiffness, RVec linear,
                                    bool unit_sphere_constraint) {
    const Eigen::Index m = mass.rows();
    if (stiffness.rows() != m || stiffness.cols() != m || linear.size() != m)
        throw Error("make_quadratic_model: inconsistent dimensions");

    HolonomicModel model;
    model.name = "custom";
    RMat K = 0.5 * (stiffness + stiffness.transpose());
    model.system = make_mechanical_system(
        std::move(mass),
        [K, linear](const RVec& q) { return 0.5 * q.dot(K * q) + linear.dot(q); },
        [K, linear](const RVec& q) -> RVec { return K * q + linear; });
    if (unit_sphere_constraint) {
        model.constraints = make_constraint_set(
            1,
            [](const RVec& q) -> RVec {
                RVec c(1);
                c(0) = q.squaredNorm() - 1.0;
                return c;
            },
            [](const RVec& q) -> RMat { return 2.0 * q.transpose(); });
    } else {
        model.constraints = make_constraint_set(
            0, [m](const RVec&) { return RVec(0); },
            [m](const RVec&) { return RMat(0, m); });
    }
    model.default_q0 = RVec::Zero(m);
    if (unit_sphere_constraint) model.default_q0(0) = 1.0;
    model.default_p0 = RVec::Zero(m);
    return model;
}

LieFreeBody make_so3_free_body(const Eigen::Matrix3d& angular_inertia,
                               const Retraction& retraction) {
    LieFreeBody body;
    body.ops = so3_ops();
    body.retraction = retraction;
    const Eigen::Matrix3d Ib = angular_inertia;
    const Eigen::Matrix3d Ib_inv = Ib.inverse();
    body.hamiltonian.dH_dalpha = [Ib_inv](const RVec&, const RVec& a) -> RVec {
        return Ib_inv * a;
    };
    body.hamiltonian.dH_dg = [](const RVec&, const RVec&) -> RVec {
        return RVec::Zero(3);
    };
    body.lagrangian.dL_dxi = [Ib](const RVec&, const RVec& xi) -> RVec { return Ib * xi; };
    body.lagrangian.dL_dg = [](const RVec&, const RVec&) -> RVec { return RVec::Zero(3); };
    body.lagrangian.xi_from_alpha = [Ib_inv](const RVec&, const RVec& a) -> RVec {
        return Ib_inv * a;
    };
    return body;
}

LieRigidBody make_lie_rigid_body(const Eigen::Matrix3d& mass_tensor, double mass,
                                 const Retraction& so3_retraction) {
    LieRigidBody body;
    body.ops = so3r3_ops();
    body.retraction = so3r3_retraction(so3_retraction);

    const Eigen::Matrix3d Ib =
        mass_tensor.trace() * Eigen::Matrix3d::Identity() - mass_tensor;
    const Eigen::Matrix3d Ib_inv = Ib.inverse();

    body.hamiltonian.dH_dalpha = [Ib_inv, mass](const RVec&, const RVec& a) -> RVec {
        RVec xi(6);
        xi.head(3) = Ib_inv * a.head(3);
        xi.tail(3) = a.tail(3) / mass;
        return xi;
    };
    body.hamiltonian.dH_dg = [](const RVec&, const RVec&) -> RVec { return RVec::Zero(6); };
    body.lagrangian.dL_dxi = [Ib, mass](const RVec&, const RVec& xi) -> RVec {
        RVec a(6);
        a.head(3) = Ib * xi.head(3);
        a.tail(3) = mass * xi.tail(3);
        return a;
    };
    body.lagrangian.dL_dg = [](const RVec&, const RVec&) -> RVec { return RVec::Zero(6); };
    body.lagrangian.xi_from_alpha = [Ib_inv, mass](const RVec&, const RVec& a) -> RVec {
        RVec xi(6);
        xi.head(3) = Ib_inv * a.head(3);
        xi.tail(3) = a.tail(3) / mass;
        return xi;
    };

    body.sphere_constraint.count = 1;
    body.sphere_constraint.phi = [](const RVec& g) -> RVec {
        RVec c(1);
        c(0) = g.tail(3).squaredNorm() - 1.0;
        return c;
    };
    body.sphere_constraint.trivialized_grad = [](const RVec& g) -> RMat {
        RMat grad = RMat::Zero(1, 6);
        grad.block(0, 3, 1, 3) = 2.0 * g.tail(3).transpose();
        return grad;
    };

    body.default_g0 = body.ops.identity;
    body.default_g0.tail(3) << 1.0, 0.0, 0.0;
    body.default_alpha0 = RVec::Zero(6);
    body.default_alpha0.head(3) << 1.0, 0.1, 0.0;
    body.default_alpha0.tail(3) << 0.0, 0.5, 0.0;
    return body;
}

} // namespace dmech
