#include "dmech/discretization.hpp"

#include <cmath>

namespace dmech {

std::pair<RVec, RVec> theta_forward(double theta, const RVec& q, const RVec& v, double h) {
    return {q - theta * h * v, q + (1.0 - theta) * h * v};
}

std::pair<RVec, RVec> theta_inverse(double theta, const RVec& q0, const RVec& q1, double h) {
    return {(1.0 - theta) * q0 + theta * q1, (q1 - q0) / h};
}

DiscretizationMap theta_method(double theta) {
    DiscretizationMap map;
    map.name = "theta:" + std::to_string(theta);
    map.theta = theta;
    map.forward = [theta](const RVec& q, const RVec& v, double h) {
        return theta_forward(theta, q, v, h);
    };
    map.inverse = [theta](const RVec& q0, const RVec& q1, double h) {
        return theta_inverse(theta, q0, q1, h);
    };
    map.jacobian = [theta](const RVec& q, const RVec&, double h) {
        const Eigen::Index m = q.size();
        RMat J = RMat::Zero(2 * m, 2 * m);
        J.topLeftCorner(m, m).setIdentity();
        J.bottomLeftCorner(m, m).setIdentity();
        J.topRightCorner(m, m) = -theta * h * RMat::Identity(m, m);
        J.bottomRightCorner(m, m) = (1.0 - theta) * h * RMat::Identity(m, m);
        return J;
    };
    return map;
}

DiscretizationMap make_map(std::string name,
                           std::function<QPair(const RVec&, const RVec&, double)> forward,
                           std::function<QPair(const RVec&, const RVec&, double)> inverse,
                           std::function<RMat(const RVec&, const RVec&, double)> jacobian) {
    DiscretizationMap map;
    map.name = std::move(name);
    map.forward = std::move(forward);
    map.inverse = std::move(inverse);
    if (jacobian) {
        map.jacobian = std::move(jacobian);
    } else {
        // Central differences with the velocity step scaled by 1/h, so that
        // the v-block noise stays bounded after the lift divides by h.
        auto fwd = map.forward;
        map.jacobian = [fwd](const RVec& q, const RVec& v, double h) {
            const Eigen::Index m = q.size();
            const double eps = 1e-7;
            RMat J(2 * m, 2 * m);
            auto stack = [m](const QPair& pair) {
                RVec out(2 * m);
                out << pair.first, pair.second;
                return out;
            };
            for (Eigen::Index j = 0; j < m; ++j) {
                RVec qp = q, qm = q;
                qp(j) += eps;
                qm(j) -= eps;
                J.col(j) = (stack(fwd(qp, v, h)) - stack(fwd(qm, v, h))) / (2.0 * eps);
            }
            const double eps_v = eps / h;
            for (Eigen::Index j = 0; j < m; ++j) {
                RVec vp = v, vm = v;
                vp(j) += eps_v;
                vm(j) -= eps_v;
                J.col(m + j) = (stack(fwd(q, vp, h)) - stack(fwd(q, vm, h))) / (2.0 * eps_v);
            }
            return J;
        };
    }
    return map;
}

AxiomReport check_discretization_axioms(const DiscretizationMap& map,
                                        const std::vector<QPair>& samples, double h) {
    if (samples.empty())
        throw Error("check_discretization_axioms: no sample points");

    AxiomReport report;
    for (const auto& [q, v] : samples) {
        const Eigen::Index m = q.size();
        const RVec zero = RVec::Zero(m);

        auto [a0, b0] = map.forward(q, zero, h);
        report.zero_section_defect =
            std::max(report.zero_section_defect,
                     std::max((a0 - q).lpNorm<Eigen::Infinity>(),
                              (b0 - q).lpNorm<Eigen::Infinity>()));

        // (d/dv)(pr2 - pr1) at v = 0 should equal h * Id.
        const double eps = 1e-6;
        RMat D = RMat::Zero(m, m);
        RVec dir = zero;
        for (Eigen::Index j = 0; j < m; ++j) {
            dir(j) = eps;
            auto [ap, bp] = map.forward(q, dir, h);
            auto [am, bm] = map.forward(q, -dir, h);
            D.col(j) = ((bp - ap) - (bm - am)) / (2.0 * eps);
            dir(j) = 0.0;
        }
        const double defect = (D / h - RMat::Identity(m, m)).lpNorm<Eigen::Infinity>();
        report.derivative_defect = std::max(report.derivative_defect, defect);
    }
    if (report.zero_section_defect > 1e-6 || report.derivative_defect > 1e-6)
        throw AxiomViolation("discretization axioms violated: zero-section defect " +
                                 std::to_string(report.zero_section_defect) +
                                 ", derivative defect " +
                                 std::to_string(report.derivative_defect),
                             report.zero_section_defect, report.derivative_defect);
    return report;
}

namespace {

struct LiftBlocks {
    RMat A, B, C, D;  // dq0/dq, dq0/dv, dq1/dq, dq1/dv
};

LiftBlocks jacobian_blocks(const DiscretizationMap& map, const RVec& q, const RVec& v, double h) {
    const Eigen::Index m = q.size();
    const RMat J = map.jacobian(q, v, h);
    if (J.rows() != 2 * m || J.cols() != 2 * m)
        throw Error("discretization map jacobian has wrong shape");
    return {J.topLeftCorner(m, m), J.topRightCorner(m, m),
            J.bottomLeftCorner(m, m), J.bottomRightCorner(m, m)};
}

} // namespace

CotangentSample cotangent_lift_inverse(const DiscretizationMap& map,
                                       const RVec& q0, const RVec& p0,
                                       const RVec& q1, const RVec& p1, double h) {
    const Eigen::Index m = q0.size();
    if (p0.size() != m || q1.size() != m || p1.size() != m)
        throw Error("cotangent_lift_inverse: dimension mismatch");
    if (h <= 0.0) throw Error("cotangent_lift_inverse: h must be positive");

    auto [q, v] = map.inverse(q0, q1, h);
    if (!all_finite(q) || !all_finite(v))
        throw OutOfChart("cotangent_lift_inverse: map inverse failed at the given pair");

    const auto blk = jacobian_blocks(map, q, v, h);
    CotangentSample s;
    s.q = q;
    s.qdot = v;
    s.p = (-blk.B.transpose() * p0 + blk.D.transpose() * p1) / h;
    s.pdot = (-blk.A.transpose() * p0 + blk.C.transpose() * p1) / h;
    return s;
}

PhasePair cotangent_lift_forward(const DiscretizationMap& map,
                                 const CotangentSample& s, double h) {
    const Eigen::Index m = s.q.size();
    auto [q0, q1] = map.forward(s.q, s.qdot, h);

    const auto blk = jacobian_blocks(map, s.q, s.qdot, h);
    RMat S(2 * m, 2 * m);
    S.topLeftCorner(m, m) = -blk.B.transpose();
    S.topRightCorner(m, m) = blk.D.transpose();
    S.bottomLeftCorner(m, m) = -blk.A.transpose();
    S.bottomRightCorner(m, m) = blk.C.transpose();

    RVec rhs(2 * m);
    rhs << h * s.p, h * s.pdot;

    RVec momenta;
    try {
        momenta = solve_linear(S, rhs);
    } catch (const SingularJacobian&) {
        throw SingularLift("cotangent_lift_forward: block system singular");
    }
    return {q0, momenta.head(m), q1, momenta.tail(m)};
}

} // namespace dmech
