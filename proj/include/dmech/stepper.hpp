#pragma once
#include <optional>
#include <string>
#include <vector>

#include "dmech/mechanics.hpp"

namespace dmech {

/// Unknowns of one implicit step: the forward phase point and the two
/// multiplier families attached to the pulled-back constraints.
struct StepUnknowns {
    RVec q1, p1, lambda1, lambda2;
};

struct StepResult {
    RVec q1, p1;
    RVec lambda1, lambda2;
    int newton_iterations = 0;
    double residual_norm = 0.0;
};

/// Residual of the implicit step equations for an arbitrary discretization
/// map, as a 2m+2k vector. With s the lifted sample of (q0,p0,q1,p1) and the
/// constraint partials taken at (s.q, s.qdot):
///   (a)  s.p    - d_v L(s.q, s.qdot) - dv_phi1^T l1 - dv_phi2^T l2
///   (b)  s.pdot - d_q L(s.q, s.qdot) - dq_phi1^T l1 - dq_phi2^T l2
///   (c)  phi(q1)
///   (d)  jac_phi(q1) M^{-1} p1
/// Blocks (c)+(d) are the forward-endpoint Legendre condition.
RVec assemble_step_residual(const DiscretizationMap& map, const MechanicalSystem& sys,
                            const ExtendedLagrangian& ext, const ConstraintSet& cs,
                            const RVec& q0, const RVec& p0,
                            const StepUnknowns& u, double h);

/// Optional multiplier warm start; the phase unknowns always start at the
/// zero section (q1 = q0, p1 = p0).
struct MultiplierGuess {
    RVec lambda1, lambda2;
};

/// Newton solve of assemble_step_residual from (q1,p1,l1,l2) = (q0,p0,0,0).
StepResult step_generic(const DiscretizationMap& map, const MechanicalSystem& sys,
                        const ExtendedLagrangian& ext, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h,
                        const NewtonConfig& cfg = {}, const MultiplierGuess* warm = nullptr);

// Closed-form steppers. Each solves the printed step equations of the
// corresponding one-step rule together with the forward Legendre blocks.
StepResult step_euler_a(const MechanicalSystem& sys, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h,
                        const NewtonConfig& cfg = {}, const MultiplierGuess* warm = nullptr);
StepResult step_euler_b(const MechanicalSystem& sys, const ConstraintSet& cs,
                        const RVec& q0, const RVec& p0, double h,
                        const NewtonConfig& cfg = {}, const MultiplierGuess* warm = nullptr);
StepResult step_midpoint(const MechanicalSystem& sys, const ConstraintSet& cs,
                         const RVec& q0, const RVec& p0, double h,
                         const NewtonConfig& cfg = {}, const MultiplierGuess* warm = nullptr);
/// Composition of the two symplectic Euler variants; second order.
StepResult step_rattle(const MechanicalSystem& sys, const ConstraintSet& cs,
                       const RVec& q0, const RVec& p0, double h,
                       const NewtonConfig& cfg = {}, const MultiplierGuess* warm = nullptr);

/// Multiplier-free formulation: the momentum equations are projected onto
/// kernel bases of the constraint Jacobian at the two endpoints and the
/// unknowns reduce to (q1,p1); multipliers are recovered afterwards by least
/// squares and the full residual is re-checked before the step is accepted.
StepResult step_nullspace(const DiscretizationMap& map, const MechanicalSystem& sys,
                          const ExtendedLagrangian& ext, const ConstraintSet& cs,
                          const RVec& q0, const RVec& p0, double h,
                          const NewtonConfig& cfg = {});

enum class StepperKind { EulerA, EulerB, Midpoint, Rattle, GenericTheta, Nullspace };

struct StepperSpec {
    StepperKind kind = StepperKind::Rattle;
    double theta = 0.5;  // used by GenericTheta and Nullspace
};

StepResult step(const StepperSpec& spec, const MechanicalSystem& sys, const ConstraintSet& cs,
                const RVec& q0, const RVec& p0, double h, const NewtonConfig& cfg = {});

struct Trajectory {
    double h = 0.0;
    std::vector<double> times;
    std::vector<RVec> q, p;                  // length steps+1
    std::vector<RVec> lambda1, lambda2;      // length steps
    std::vector<int> newton_iterations;      // length steps
    std::vector<double> residual_norms;      // length steps
};

struct IntegrationError {
    long step_index = 0;
    std::string what;
};

struct IntegrateResult {
    Trajectory trajectory;
    std::optional<IntegrationError> error;  // set when aborted early
};

/// Uniform-step trajectory. The initial condition must satisfy the Legendre
/// residual within the feasibility tolerance, or is projected first when
/// auto_project is set. When warm_start is set, each step seeds its
/// multipliers with the previous step's solution. Aborts on the first failed
/// step, returning the partial trajectory plus the error.
IntegrateResult integrate(const StepperSpec& spec, const MechanicalSystem& sys,
                          const ConstraintSet& cs, const RVec& q0, const RVec& p0,
                          double h, long steps, const NewtonConfig& cfg = {},
                          bool auto_project = false, bool warm_start = false);

} // namespace dmech
