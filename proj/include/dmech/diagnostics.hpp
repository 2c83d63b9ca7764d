#pragma once
#include "dmech/stepper.hpp"

namespace dmech {

/// Explicit chart of the constrained phase space of a built-in model:
/// 2n chart coordinates z <-> ambient (q,p) on the constraint set.
struct ChartedModel {
    std::string id;
    int dim = 0;  // n; the chart has 2n coordinates
    std::function<std::pair<RVec, RVec>(const RVec& z)> to_phase;
    std::function<RVec(const RVec& q, const RVec& p)> from_phase;
};

using PhaseMap = std::function<std::pair<RVec, RVec>(const RVec& q, const RVec& p)>;

/// Max-norm of J^T Omega J - Omega for the central-difference Jacobian J of
/// the chart-conjugated step at z; Omega is the canonical 2n x 2n symplectic
/// matrix. Expected floor is about (solver tolerance)/fd_eps + fd_eps^2.
double symplecticity_defect(const ChartedModel& model, const PhaseMap& one_step,
                            const RVec& z, double fd_eps = 1e-6);

struct ViolationSeries {
    std::vector<double> constraint;   // |phi|_inf per state
    std::vector<double> tangency;     // |jac_phi M^{-1} p|_inf per state
    double max_constraint = 0.0;
    double max_tangency = 0.0;
};

ViolationSeries constraint_violation_series(const MechanicalSystem& sys,
                                            const ConstraintSet& cs,
                                            const Trajectory& traj);

struct EnergySeries {
    std::vector<double> energy;   // H = (1/2) p^T M^{-1} p + V(q) per state
    double drift_slope = 0.0;     // least-squares slope per step
};

EnergySeries energy_series(const MechanicalSystem& sys, const Trajectory& traj);

/// Aggregate of the trajectory-level instruments; symplectic_defect and
/// order_estimate are filled only by the callers that computed them.
struct DiagnosticsReport {
    double max_constraint_violation = 0.0;
    double max_tangency_violation = 0.0;
    double energy_drift_slope = 0.0;
    double symplectic_defect = 0.0;
    double order_estimate = 0.0;
};

DiagnosticsReport summarize_trajectory(const MechanicalSystem& sys, const ConstraintSet& cs,
                                       const Trajectory& traj);

/// Least-squares slope of log(final-time error) against log(h). The reference
/// trajectory is computed with the same stepper at h_min/20. h_list must be
/// descending with at least three entries and T_final an exact multiple of
/// each step size.
double convergence_order(const StepperSpec& spec, const MechanicalSystem& sys,
                         const ConstraintSet& cs, const RVec& q0, const RVec& p0,
                         const std::vector<double>& h_list, double T_final,
                         const NewtonConfig& cfg = {});

/// Comparator used as a symplecticity control: explicit Euler in the ambient
/// space followed by coordinate projection back to the constraint set.
std::pair<RVec, RVec> naive_projected_euler_step(const MechanicalSystem& sys,
                                                 const ConstraintSet& cs,
                                                 const RVec& q, const RVec& p, double h,
                                                 const NewtonConfig& cfg = {});

} // namespace dmech
