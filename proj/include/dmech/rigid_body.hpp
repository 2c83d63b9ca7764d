#pragma once
#include "dmech/stepper.hpp"

namespace dmech {

/// Free or forced rigid body treated extrinsically on R^{3x3} x R^3 with the
/// six orthogonality constraints R^T R = Id. J is the symmetric mass tensor
/// of the body (kinetic energy (1/2) tr(Rdot J Rdot^T) + (1/2) m |xdot|^2).
struct RigidBodyParams {
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();
    double mass = 1.0;
    // Leave unset for the free body.
    std::function<double(const Eigen::Matrix3d& R, const Eigen::Vector3d& x)> potential;
    std::function<Eigen::Matrix3d(const Eigen::Matrix3d& R, const Eigen::Vector3d& x)> grad_R;
    std::function<Eigen::Vector3d(const Eigen::Matrix3d& R, const Eigen::Vector3d& x)> grad_x;
};

struct RigidBodyState {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    Eigen::Matrix3d P = Eigen::Matrix3d::Zero();  // conjugate to R: P = Rdot J
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

struct RigidBodyStepResult {
    RigidBodyState state;
    Eigen::Matrix3d lambda = Eigen::Matrix3d::Zero();        // symmetric multiplier
    Eigen::Matrix3d lambda_tilde = Eigen::Matrix3d::Zero();  // symmetric multiplier
    int newton_iterations = 0;
    double residual_norm = 0.0;
};

/// The rigid body as an ambient mechanical system: 12 coordinates
/// (row-major R, then x), block mass matrix diag(J,J,J,mI), and the six
/// constraints phi_i(R) = (1/2) tr[(R^T R - Id) Lambda_i] over a basis of
/// symmetric matrices.
struct AmbientRigidBody {
    MechanicalSystem system;
    ConstraintSet constraints;
};
AmbientRigidBody rigid_body_ambient(const RigidBodyParams& params);

/// Symmetric-matrix basis used for the constraints and multipliers.
const std::vector<Eigen::Matrix3d>& symmetric_basis();

RVec rigid_body_pack_q(const RigidBodyState& s);
RVec rigid_body_pack_p(const RigidBodyState& s);
RigidBodyState rigid_body_unpack(const RVec& q, const RVec& p);

/// One step of the composition method on the ambient system, solved with the
/// symmetric-matrix Lagrange multipliers. Requires R0 orthogonal and the
/// Legendre condition within 1e-8.
RigidBodyStepResult rigid_body_constrained_step(const RigidBodyParams& params,
                                                const RigidBodyState& s0, double h,
                                                const NewtonConfig& cfg = {});

/// Multiplier-free formulation: the rotational momentum equations are paired
/// against the moving body frame directions R e_i under A.B = (1/2) tr(A B^T),
/// with the orthogonality and tangency conditions closing the system.
RigidBodyStepResult rigid_body_constrained_step_nullspace(const RigidBodyParams& params,
                                                          const RigidBodyState& s0, double h,
                                                          const NewtonConfig& cfg = {});

} // namespace dmech
