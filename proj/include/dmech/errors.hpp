#pragma once
#include <stdexcept>
#include <string>

namespace dmech {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Newton iteration exhausted max_iterations without meeting tolerance.
struct NonConvergence : Error {
    NonConvergence(const std::string& msg, double residual, int iters)
        : Error(msg), last_residual(residual), iterations(iters) {}
    double last_residual;
    int iterations;
};

/// A linear solve met a pivot below the singularity threshold.
struct SingularJacobian : Error {
    using Error::Error;
};

/// A matrix expected to have full rank does not, within tolerance.
struct RankDeficient : Error {
    using Error::Error;
};

/// A point left the chart of a local diffeomorphism (map inverse or retraction).
struct OutOfChart : Error {
    using Error::Error;
};

/// The block system of a cotangent lift is singular beyond tolerance.
struct SingularLift : Error {
    using Error::Error;
};

/// A candidate map failed a discretization-map axiom.
struct AxiomViolation : Error {
    AxiomViolation(const std::string& msg, double zero_defect, double deriv_defect)
        : Error(msg), zero_section_defect(zero_defect), derivative_defect(deriv_defect) {}
    double zero_section_defect;
    double derivative_defect;
};

/// Malformed configuration text.
struct ParseError : Error {
    ParseError(const std::string& msg, int line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    int line;
};

/// Well-formed but invalid configuration value.
struct ValidationError : Error {
    ValidationError(const std::string& field_name, const std::string& reason)
        : Error(field_name + ": " + reason), field(field_name) {}
    std::string field;
};

} // namespace dmech
