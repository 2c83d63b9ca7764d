#pragma once
#include <utility>

#include "dmech/discretization.hpp"
#include "dmech/numerics.hpp"

namespace dmech {

/// A mechanical system on R^m with kinetic energy (1/2) v^T M v and
/// configuration-dependent potential.
struct MechanicalSystem {
    int dim = 0;
    RMat mass;
    RMat mass_inverse;
    std::function<double(const RVec&)> potential;
    std::function<RVec(const RVec&)> grad_potential;
};

/// Validates symmetry and positive definiteness of M and cross-checks
/// grad_potential against finite differences of the potential at the given
/// sample points (within 1e-5). Precomputes the inverse mass matrix.
MechanicalSystem make_mechanical_system(RMat mass,
                                        std::function<double(const RVec&)> potential,
                                        std::function<RVec(const RVec&)> grad_potential,
                                        const std::vector<RVec>& check_points = {});

/// Fiber and base derivatives of an extension of the Lagrangian to the
/// ambient tangent bundle.
struct ExtendedLagrangian {
    std::function<RVec(const RVec& q, const RVec& v)> d_v;
    std::function<RVec(const RVec& q, const RVec& v)> d_q;
};

/// The mechanical extension: d_v = M v, d_q = -grad V.
ExtendedLagrangian mechanical_lagrangian(const MechanicalSystem& sys);

/// k holonomic constraint functions with their k x m Jacobian.
struct ConstraintSet {
    int count = 0;
    std::function<RVec(const RVec&)> phi;
    std::function<RMat(const RVec&)> jac_phi;
};

ConstraintSet make_constraint_set(int count,
                                  std::function<RVec(const RVec&)> phi,
                                  std::function<RMat(const RVec&)> jac_phi,
                                  const std::vector<RVec>& check_points = {});

/// The constraint pair pulled back through a discretization map at fixed h:
/// phi1 = phi(pr1(forward(q,v,h))), phi2 = phi(pr2(forward(q,v,h))).
struct ModifiedConstraints {
    DiscretizationMap map;
    ConstraintSet constraints;
    double h = 0.0;
};

std::pair<RVec, RVec> eval_modified_constraints(const ModifiedConstraints& mc,
                                                const RVec& q, const RVec& v);

struct ConstraintPartials {
    RMat dq_phi1, dv_phi1, dq_phi2, dv_phi2;  // each k x m
};

/// Chain rule through the forward map: D phi_l = jac_phi(pr_l) * [d pr_l/dq, d pr_l/dv].
ConstraintPartials modified_constraint_partials(const ModifiedConstraints& mc,
                                                const RVec& q, const RVec& v);

/// Concatenation (phi(q), jac_phi(q) M^{-1} p): zero exactly on the image of
/// the constrained Legendre transform.
RVec legendre_residual(const MechanicalSystem& sys, const ConstraintSet& cs,
                       const RVec& q, const RVec& p);

/// Least-squares feasibility restoration: q is corrected along grad-phi
/// directions until phi(q) meets tolerance, then the momentum component
/// normal to the constraint (in the M^{-1} pairing) is removed,
///   p <- p - J^T (J M^{-1} J^T)^{-1} J M^{-1} p,  J = jac_phi(q).
std::pair<RVec, RVec> project_initial_condition(const MechanicalSystem& sys,
                                                const ConstraintSet& cs,
                                                const RVec& q_guess, const RVec& p_guess,
                                                const NewtonConfig& cfg = {});

/// Coefficients of the intrinsic momentum in the orthonormal kernel basis of
/// jac_phi(q): entry a equals the pairing of the ambient momentum with the
/// a-th tangent basis vector. Invariant under shifts of pQ along the
/// constraint gradients.
RVec project_momentum_to_N(const ConstraintSet& cs, const RVec& q, const RVec& pQ,
                           double rank_tol = 1e-10);

/// Tolerance for "q lies on the constraint set" checks, distinct from the
/// solver tolerance: inputs may come from files with fewer digits.
inline constexpr double kFeasibilityTolerance = 1e-8;

} // namespace dmech
