#include "dmech/rigid_body.hpp"

#include "dmech/liegroup.hpp"

namespace dmech {

namespace {

Eigen::Matrix3d unflatten_block(const RVec& q, int offset) {
    Eigen::Matrix3d M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = q(offset + 3 * i + j);
    return M;
}

void flatten_block(const Eigen::Matrix3d& M, RVec& out, int offset) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(offset + 3 * i + j) = M(i, j);
}

double frob_half(const Eigen::Matrix3d& A, const Eigen::Matrix3d& B) {
    return 0.5 * (A.array() * B.array()).sum();
}

} // namespace

const std::vector<Eigen::Matrix3d>& symmetric_basis() {
    static const std::vector<Eigen::Matrix3d> basis = [] {
        std::vector<Eigen::Matrix3d> b;
        for (int i = 0; i < 3; ++i) {
            Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
            E(i, i) = 1.0;
            b.push_back(E);
        }
        const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
        for (auto [i, j] : pairs) {
            Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
            E(i, j) = 1.0;
            E(j, i) = 1.0;
            b.push_back(E);
        }
        return b;
    }();
    return basis;
}

RVec rigid_body_pack_q(const RigidBodyState& s) {
    RVec q(12);
    flatten_block(s.R, q, 0);
    q.tail(3) = s.x;
    return q;
}

RVec rigid_body_pack_p(const RigidBodyState& s) {
    RVec p(12);
    flatten_block(s.P, p, 0);
    p.tail(3) = s.p;
    return p;
}

RigidBodyState rigid_body_unpack(const RVec& q, const RVec& p) {
    RigidBodyState s;
    s.R = unflatten_block(q, 0);
    s.x = q.tail(3);
    s.P = unflatten_block(p, 0);
    s.p = p.tail(3);
    return s;
}

AmbientRigidBody rigid_body_ambient(const RigidBodyParams& params) {
    RMat M = RMat::Zero(12, 12);
    for (int row = 0; row < 3; ++row)
        M.block(3 * row, 3 * row, 3, 3) = params.inertia;
    M.bottomRightCorner(3, 3) = params.mass * RMat::Identity(3, 3);

    auto potential = [params](const RVec& q) -> double {
        if (!params.potential) return 0.0;
        return params.potential(unflatten_block(q, 0), q.tail(3));
    };
    auto grad_potential = [params](const RVec& q) -> RVec {
        RVec g = RVec::Zero(12);
        if (params.grad_R) flatten_block(params.grad_R(unflatten_block(q, 0), q.tail(3)), g, 0);
        if (params.grad_x) g.tail(3) = params.grad_x(unflatten_block(q, 0), q.tail(3));
        return g;
    };

    auto phi = [](const RVec& q) -> RVec {
        const Eigen::Matrix3d S = unflatten_block(q, 0).transpose() * unflatten_block(q, 0) -
                                  Eigen::Matrix3d::Identity();
        const auto& basis = symmetric_basis();
        RVec out(6);
        for (int a = 0; a < 6; ++a) out(a) = frob_half(S, basis[a]);
        return out;
    };
    auto jac = [](const RVec& q) -> RMat {
        const Eigen::Matrix3d R = unflatten_block(q, 0);
        const auto& basis = symmetric_basis();
        RMat J = RMat::Zero(6, 12);
        RVec row(12);
        for (int a = 0; a < 6; ++a) {
            row.setZero();
            flatten_block(R * basis[a], row, 0);
            J.row(a) = row;
        }
        return J;
    };

    AmbientRigidBody body;
    body.system = make_mechanical_system(std::move(M), std::move(potential),
                                         std::move(grad_potential));
    body.constraints = make_constraint_set(6, std::move(phi), std::move(jac));
    return body;
}

RigidBodyStepResult rigid_body_constrained_step(const RigidBodyParams& params,
                                                const RigidBodyState& s0, double h,
                                                const NewtonConfig& cfg) {
    const AmbientRigidBody body = rigid_body_ambient(params);
    const StepResult r = step_rattle(body.system, body.constraints,
                                     rigid_body_pack_q(s0), rigid_body_pack_p(s0), h, cfg);

    RigidBodyStepResult out;
    out.state = rigid_body_unpack(r.q1, r.p1);
    const auto& basis = symmetric_basis();
    for (int a = 0; a < 6; ++a) {
        out.lambda += r.lambda1(a) * basis[a];
        out.lambda_tilde += r.lambda2(a) * basis[a];
    }
    out.newton_iterations = r.newton_iterations;
    out.residual_norm = r.residual_norm;
    return out;
}

RigidBodyStepResult rigid_body_constrained_step_nullspace(const RigidBodyParams& params,
                                                          const RigidBodyState& s0, double h,
                                                          const NewtonConfig& cfg) {
    if ((s0.R.transpose() * s0.R - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>() > 1e-8)
        throw Error("rigid_body_constrained_step_nullspace: R0 is not orthogonal");
    const Eigen::Matrix3d Jinv = params.inertia.inverse();
    {
        const Eigen::Matrix3d T = s0.R.transpose() * s0.P * Jinv;
        if ((T + T.transpose()).lpNorm<Eigen::Infinity>() > 2e-8)
            throw Error("rigid_body_constrained_step_nullspace: initial momentum violates tangency");
    }

    const Eigen::Matrix3d gradR0 =
        params.grad_R ? params.grad_R(s0.R, s0.x) : Eigen::Matrix3d::Zero();
    const Eigen::Vector3d gradx0 =
        params.grad_x ? params.grad_x(s0.R, s0.x) : Eigen::Vector3d::Zero();

    // Unknowns y = (R1 row-major, x1, P1 row-major, p1).
    auto residual = [&](const RVec& y) -> RVec {
        const Eigen::Matrix3d R1 = unflatten_block(y, 0);
        const Eigen::Vector3d x1 = y.segment(9, 3);
        const Eigen::Matrix3d P1 = unflatten_block(y, 12);
        const Eigen::Vector3d p1 = y.tail(3);

        const Eigen::Matrix3d MV = (R1 - s0.R) * params.inertia / h;
        const Eigen::Matrix3d gradR1 =
            params.grad_R ? params.grad_R(R1, x1) : Eigen::Matrix3d::Zero();
        const Eigen::Vector3d gradx1 =
            params.grad_x ? params.grad_x(R1, x1) : Eigen::Vector3d::Zero();

        const Eigen::Matrix3d E0 = s0.P - MV - 0.5 * h * gradR0;
        const Eigen::Matrix3d E1 = P1 - MV + 0.5 * h * gradR1;

        RVec res(24);
        for (int i = 0; i < 3; ++i) {
            const Eigen::Matrix3d Xi = so3_hat(Eigen::Vector3d::Unit(i));
            res(i) = frob_half(E0, s0.R * Xi);
            res(6 + i) = frob_half(E1, R1 * Xi);
        }
        res.segment(3, 3) = s0.p - params.mass * (x1 - s0.x) / h - 0.5 * h * gradx0;
        res.segment(9, 3) = p1 - params.mass * (x1 - s0.x) / h + 0.5 * h * gradx1;

        const Eigen::Matrix3d O = R1.transpose() * R1 - Eigen::Matrix3d::Identity();
        const Eigen::Matrix3d T = R1.transpose() * P1 * Jinv;
        const Eigen::Matrix3d Tsym = T + T.transpose();
        int idx = 12;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                res(idx) = O(i, j);
                res(idx + 6) = Tsym(i, j);
                ++idx;
            }
        return res;
    };

    RVec y0(24);
    flatten_block(s0.R, y0, 0);
    y0.segment(9, 3) = s0.x;
    flatten_block(s0.P, y0, 12);
    y0.tail(3) = s0.p;

    const NewtonResult sol = newton_solve(residual, y0, cfg);

    RigidBodyStepResult out;
    out.state.R = unflatten_block(sol.x, 0);
    out.state.x = sol.x.segment(9, 3);
    out.state.P = unflatten_block(sol.x, 12);
    out.state.p = sol.x.tail(3);
    out.newton_iterations = sol.iterations;
    out.residual_norm = sol.residual_norm;
    return out;
}

} // namespace dmech
