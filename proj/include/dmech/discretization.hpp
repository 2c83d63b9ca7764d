#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmech/numerics.hpp"

namespace dmech {

/// A point of the continuous side of a lifted map: position, momentum and
/// their velocities.
struct CotangentSample {
    RVec q, p, qdot, pdot;
};

/// One endpoint pair of phase points.
struct PhasePair {
    RVec q0, p0, q1, p1;
};

using QPair = std::pair<RVec, RVec>;

/// A one-step discretization rule on R^m: a local diffeomorphism sending a
/// tangent vector (q,v) at step size h to a pair of configuration points
/// (q0,q1), together with its inverse and the 2m x 2m Jacobian
/// [dq0/dq, dq0/dv; dq1/dq, dq1/dv] of the forward map.
///
/// Built-ins satisfy forward(q,0,h) = (q,q) exactly, and the derivative
/// difference of the two legs at v = 0 equals h times the identity.
struct DiscretizationMap {
    std::string name;
    std::function<QPair(const RVec& q, const RVec& v, double h)> forward;
    std::function<QPair(const RVec& q0, const RVec& q1, double h)> inverse;
    std::function<RMat(const RVec& q, const RVec& v, double h)> jacobian;
    std::optional<double> theta;  // set for the theta family
};

std::pair<RVec, RVec> theta_forward(double theta, const RVec& q, const RVec& v, double h);
std::pair<RVec, RVec> theta_inverse(double theta, const RVec& q0, const RVec& q1, double h);

/// The theta family (q - theta h v, q + (1-theta) h v); theta = 0 is the
/// explicit Euler pair, theta = 1/2 the midpoint pair.
DiscretizationMap theta_method(double theta);

/// Wrap user callbacks into a map; when no Jacobian callback is supplied it
/// falls back to central differences with step 1e-7.
DiscretizationMap make_map(std::string name,
                           std::function<QPair(const RVec&, const RVec&, double)> forward,
                           std::function<QPair(const RVec&, const RVec&, double)> inverse,
                           std::function<RMat(const RVec&, const RVec&, double)> jacobian = {});

struct AxiomReport {
    double zero_section_defect = 0.0;  // max |forward(q,0,h) - (q,q)|
    double derivative_defect = 0.0;    // max |(d/dv)(q1 - q0)|_{v=0} / h - Id|
};

/// Check the two discretization-map axioms over the given sample points,
/// estimating the derivative condition by central differences at v = 0 with
/// the step size factored out. Throws AxiomViolation (carrying both defects)
/// when either exceeds 1e-6.
AxiomReport check_discretization_axioms(const DiscretizationMap& map,
                                        const std::vector<QPair>& samples, double h);

/// Inverse of the cotangent-lifted map: converts a pair of phase points into
/// the continuous-side sample. With (q,v) = inverse(q0,q1,h) and the Jacobian
/// blocks A = dq0/dq, B = dq0/dv, C = dq1/dq, D = dq1/dv evaluated at (q,v,h):
///
///     qdot = v,   h pdot = -A^T p0 + C^T p1,   h p = -B^T p0 + D^T p1.
CotangentSample cotangent_lift_inverse(const DiscretizationMap& map,
                                       const RVec& q0, const RVec& p0,
                                       const RVec& q1, const RVec& p1, double h);

/// Forward of the lifted map; exact inverse of cotangent_lift_inverse.
/// (q0,q1) = forward(q,qdot,h) and (p0,p1) solve the two linear block
/// relations above. Throws SingularLift when the block system is singular.
PhasePair cotangent_lift_forward(const DiscretizationMap& map,
                                 const CotangentSample& s, double h);

} // namespace dmech
