#pragma once
#include <functional>
#include <vector>

#include "dmech/numerics.hpp"

namespace dmech {

/// Operations of a matrix Lie group with elements stored as flattened dense
/// coordinates and algebra elements as coefficient vectors in a fixed basis.
/// Ad and its dual act on coefficient vectors; ad_star is the coadjoint
/// operator, ad_star(xi, alpha) paired with eta equals alpha paired with
/// ad(xi, eta).
struct GroupOps {
    int elem_size = 0;    // length of a flattened group element
    int algebra_dim = 0;  // dimension of the Lie algebra
    RVec identity;
    std::function<RVec(const RVec& g, const RVec& h)> compose;
    std::function<RVec(const RVec& g)> inverse;
    std::function<RVec(const RVec& g, const RVec& xi)> Ad;
    std::function<RVec(const RVec& g, const RVec& alpha)> Ad_star;
    std::function<RVec(const RVec& xi, const RVec& eta)> ad;
    std::function<RVec(const RVec& xi, const RVec& alpha)> ad_star;
};

/// Retraction tau: algebra -> group, an analytic local diffeomorphism around
/// the identity with tau(xi) tau(-xi) = e, together with the left-trivialized
/// tangent map d^L tau and its inverse as algebra matrices. Dual maps are the
/// transposes.
struct Retraction {
    std::string name;
    std::function<RVec(const RVec& xi)> tau;
    std::function<RVec(const RVec& g)> tau_inverse;  // principal branch; throws OutOfChart
    std::function<RMat(const RVec& xi)> dLtau;
    std::function<RMat(const RVec& xi)> dLtau_inv;
};

RVec dLtau_eval(const Retraction& r, const RVec& xi, const RVec& eta);
RVec dLtau_inv_eval(const Retraction& r, const RVec& xi, const RVec& eta);
RVec dLtau_star_eval(const Retraction& r, const RVec& xi, const RVec& alpha);
RVec dLtau_inv_star_eval(const Retraction& r, const RVec& xi, const RVec& alpha);

/// Left-trivialized gradient of a scalar function on the group, estimated by
/// central differences of F(g tau(eps e_i)).
RVec left_trivialized_gradient(const GroupOps& ops, const Retraction& r,
                               const std::function<double(const RVec&)>& F,
                               const RVec& g, double eps = 1e-6);

/// Trivialized derivatives of a Hamiltonian on G x g*; dH_dg is already
/// left-trivialized (the pullback by left translation applied).
struct TrivializedHamiltonian {
    std::function<RVec(const RVec& g, const RVec& alpha)> dH_dalpha;  // -> algebra
    std::function<RVec(const RVec& g, const RVec& alpha)> dH_dg;      // -> dual
};

/// Trivialized derivatives of a Lagrangian on G x g, plus the inverse
/// Legendre velocity (needed for tangency conditions on constrained steps).
struct TrivializedLagrangian {
    std::function<RVec(const RVec& g, const RVec& xi)> dL_dxi;   // -> dual
    std::function<RVec(const RVec& g, const RVec& xi)> dL_dg;    // -> dual
    std::function<RVec(const RVec& g, const RVec& alpha)> xi_from_alpha;  // -> algebra
};

/// Constraints on the group with analytic left-trivialized gradients: row
/// alpha of trivialized_grad(g) is the coefficient vector of L*_g applied to
/// the differential of phi^alpha at g.
struct GroupConstraintSet {
    int count = 0;
    std::function<RVec(const RVec& g)> phi;
    std::function<RMat(const RVec& g)> trivialized_grad;  // k x algebra_dim
};

struct LieStepResult {
    RVec g1, alpha1;
    RVec xi;    // algebra increment: g1 = g0 tau(h xi)
    RVec mu0;   // momentum of the continuous-side sample
    int newton_iterations = 0;
    double residual_norm = 0.0;
};

/// One step of the discrete Hamilton equations generated by the group
/// discretization pair (g, g tau(h xi)):
///   xi   = dH_dalpha(g0, mu0),        mu0 = dLtau(h xi)^T alpha1,
///   -alpha0 + Ad*_{tau(-h xi)} alpha1 = -h dH_dg(g0, mu0),
///   g1   = g0 tau(h xi).
/// For g-independent H the spatial momentum Ad*_{g^-1} alpha is conserved
/// exactly at the solved root.
LieStepResult step_lie_hamiltonian(const GroupOps& ops, const Retraction& r,
                                   const TrivializedHamiltonian& H,
                                   const RVec& g0, const RVec& alpha0, double h,
                                   const NewtonConfig& cfg = {});

/// Lagrangian-side variant:
///   dLtau(h xi)^T alpha1 = dL_dxi(g0, xi),
///   -alpha0 + Ad*_{tau(-h xi)} alpha1 = h dL_dg(g0, xi).
LieStepResult step_lie_lagrangian(const GroupOps& ops, const Retraction& r,
                                  const TrivializedLagrangian& L,
                                  const RVec& g0, const RVec& xi_guess, const RVec& alpha0,
                                  double h, const NewtonConfig& cfg = {});

struct LieConstrainedResult {
    RVec g1, alpha1, xi;
    RVec lambda, lambda_tilde;
    int newton_iterations = 0;
    double residual_norm = 0.0;
};

/// Constrained variant: the two momentum equations gain multiplier terms
/// along the pulled-back constraint gradients (the xi-gradient and the
/// trivialized g-gradient of phi(g tau(h xi))), and both endpoints must
/// satisfy phi = 0 with the trivialized tangency condition.
LieConstrainedResult step_lie_constrained(const GroupOps& ops, const Retraction& r,
                                          const TrivializedLagrangian& L,
                                          const GroupConstraintSet& gcs,
                                          const RVec& g0, const RVec& alpha0, double h,
                                          const NewtonConfig& cfg = {});

/// Ad*_{g^-1} alpha.
RVec spatial_momentum(const GroupOps& ops, const RVec& g, const RVec& alpha);

struct LieTrajectory {
    double h = 0.0;
    std::vector<double> times;
    std::vector<RVec> g, alpha;
    std::vector<int> newton_iterations;
    std::vector<double> residual_norms;
};

LieTrajectory integrate_lie_hamiltonian(const GroupOps& ops, const Retraction& r,
                                        const TrivializedHamiltonian& H,
                                        const RVec& g0, const RVec& alpha0, double h,
                                        long steps, const NewtonConfig& cfg = {});

LieTrajectory integrate_lie_constrained(const GroupOps& ops, const Retraction& r,
                                        const TrivializedLagrangian& L,
                                        const GroupConstraintSet& gcs,
                                        const RVec& g0, const RVec& alpha0, double h,
                                        long steps, const NewtonConfig& cfg = {});

// ---- SO(3) ----------------------------------------------------------------

Eigen::Matrix3d so3_hat(const Eigen::Vector3d& xi);
Eigen::Vector3d so3_vee(const Eigen::Matrix3d& S);

/// Rotation by the Rodrigues formula; orthogonal with unit determinant.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& xi);
/// Principal-branch logarithm; throws OutOfChart for angles >= pi - 0.1.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);
/// Cayley transform (I - xi^/2)^{-1} (I + xi^/2).
Eigen::Matrix3d so3_cayley(const Eigen::Vector3d& xi);
/// Inverse Cayley; throws OutOfChart near the angle-pi pole.
Eigen::Vector3d so3_cayley_inverse(const Eigen::Matrix3d& R);

GroupOps so3_ops();
Retraction so3_exp_retraction();
Retraction so3_cayley_retraction();

RVec so3_flatten(const Eigen::Matrix3d& R);           // row-major
Eigen::Matrix3d so3_unflatten(const RVec& g);

// ---- direct product SO(3) x R^3 -------------------------------------------
// Elements are (R row-major, x); algebra elements (omega, u).

GroupOps so3r3_ops();
Retraction so3r3_retraction(const Retraction& so3_part);

} // namespace dmech
