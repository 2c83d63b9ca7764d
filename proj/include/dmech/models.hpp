#pragma once
#include <optional>

#include "dmech/diagnostics.hpp"
#include "dmech/liegroup.hpp"
#include "dmech/rigid_body.hpp"

namespace dmech {

/// A ready-to-integrate constrained mechanical model.
struct HolonomicModel {
    std::string name;
    MechanicalSystem system;
    ConstraintSet constraints;
    RVec default_q0, default_p0;
    std::optional<ChartedModel> chart;
};

/// Planar pendulum: M = Id on R^2, V = g q2, phi = |q|^2 - 1.
/// Chart coordinates (angle from the downward vertical, conjugate momentum).
HolonomicModel make_pendulum(double gravity = 9.81);

/// Spherical pendulum: M = Id on R^3, V = g q3, phi = |q|^2 - 1.
/// Stereographic chart from the north pole, valid away from the poles.
HolonomicModel make_spherical_pendulum(double gravity = 9.81);

/// Two coupled planar links as a constrained system on R^4:
/// phi1 = |q_a|^2 - L1^2, phi2 = |q_b - q_a|^2 - L2^2.
HolonomicModel make_double_pendulum(double m1 = 1.0, double m2 = 1.0,
                                    double l1 = 1.0, double l2 = 1.0,
                                    double gravity = 9.81);

/// The free rigid body of rigid_body.hpp wrapped as an ambient model on R^12.
HolonomicModel make_rigid_body_model(const RigidBodyParams& params);

/// Custom quadratic-potential system V = (1/2) q^T K q + b^T q, optionally
/// constrained to the unit sphere.
HolonomicModel make_quadratic_model(RMat mass, RMat stiffness, RVec linear,
                                    bool unit_sphere_constraint);

/// Free rigid body on SO(3) x R^3 in the trivialized Hamiltonian form,
/// H = (1/2) alpha_rot . I_b^{-1} alpha_rot + |alpha_lin|^2 / (2 m), where
/// I_b = tr(J) Id - J is the angular inertia induced by the mass tensor J.
struct LieRigidBody {
    GroupOps ops;
    Retraction retraction;
    TrivializedHamiltonian hamiltonian;
    TrivializedLagrangian lagrangian;
    GroupConstraintSet sphere_constraint;  // |x|^2 = 1 on the translation factor
    RVec default_g0, default_alpha0;
};
LieRigidBody make_lie_rigid_body(const Eigen::Matrix3d& mass_tensor, double mass,
                                 const Retraction& so3_retraction);

/// SO(3)-only free rigid body with angular inertia I_b given directly
/// (H = (1/2) alpha . I_b^{-1} alpha).
struct LieFreeBody {
    GroupOps ops;
    Retraction retraction;
    TrivializedHamiltonian hamiltonian;
    TrivializedLagrangian lagrangian;
};
LieFreeBody make_so3_free_body(const Eigen::Matrix3d& angular_inertia,
                               const Retraction& retraction);

} // namespace dmech
