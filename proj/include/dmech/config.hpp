#pragma once
#include <string>
#include <vector>

#include "dmech/errors.hpp"

namespace dmech {

enum class Method {
    EulerA, EulerB, Midpoint, Rattle, GenericTheta, Nullspace,
    LieHamiltonian, LieConstrained
};

bool is_lie_method(Method m);
std::string method_name(Method m);

/// A validated run description. Parsed from key = value text with '#'
/// comments; unknown keys are errors. Model/method compatibility is checked
/// at parse time.
struct RunConfig {
    std::string model;
    Method method = Method::Rattle;
    double theta = 0.5;  // generic_theta / nullspace parameter
    double h = 0.0;
    long steps = 0;
    double tolerance = 1e-12;
    std::vector<double> initial_state;  // empty: model default
    bool project_initial = false;
    std::string output_path = "trajectory.csv";
    std::string retraction = "exp";  // exp | cayley
    std::string model_file;          // custom model description
};

RunConfig parse_config(const std::string& text);

/// Custom model description: dimension, row-major mass matrix, quadratic
/// potential (1/2) q^T K q + b^T q, optional unit-sphere constraint.
struct CustomModelSpec {
    int dim = 0;
    std::vector<double> mass;       // dim*dim, row-major
    std::vector<double> stiffness;  // dim*dim, row-major; zero when absent
    std::vector<double> linear;     // dim; zero when absent
    bool unit_sphere = false;
};

CustomModelSpec parse_custom_model(const std::string& text);

} // namespace dmech
