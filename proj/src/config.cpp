#include "dmech/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dmech {

namespace {

constexpr const char* kValidModels[] = {
    "pendulum", "spherical_pendulum", "double_pendulum_constrained",
    "rigid_body_constrained", "rigid_body_liegroup", "custom"};

constexpr const char* kValidMethods =
    "euler_a, euler_b, midpoint, rattle, generic_theta:<theta>, nullspace, "
    "lie_hamiltonian, lie_constrained";

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& field, const std::string& value) {
    try {
        size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ValidationError(field, "not a real number: '" + value + "'");
    }
}

long parse_integer(const std::string& field, const std::string& value) {
    try {
        size_t pos = 0;
        const long x = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ValidationError(field, "not an integer: '" + value + "'");
    }
}

bool parse_flag(const std::string& field, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ValidationError(field, "expected true or false, got '" + value + "'");
}

std::vector<double> parse_numbers(const std::string& field, const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string token;
    while (in >> token) out.push_back(parse_real(field, token));
    return out;
}

/// Parses "key = value" text into an ordered key/value list, tracking lines.
std::vector<std::tuple<std::string, std::string, int>> parse_lines(const std::string& text) {
    std::vector<std::tuple<std::string, std::string, int>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + line + "'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        entries.emplace_back(key, value, lineno);
    }
    return entries;
}

Method parse_method(const std::string& value, double& theta_out) {
    if (value == "euler_a") return Method::EulerA;
    if (value == "euler_b") return Method::EulerB;
    if (value == "midpoint") return Method::Midpoint;
    if (value == "rattle") return Method::Rattle;
    if (value == "nullspace") return Method::Nullspace;
    if (value == "lie_hamiltonian") return Method::LieHamiltonian;
    if (value == "lie_constrained") return Method::LieConstrained;
    if (value.rfind("generic_theta:", 0) == 0) {
        const double theta = parse_real("method", value.substr(14));
        if (theta < 0.0 || theta > 1.0)
            throw ValidationError("method", "theta must lie in [0,1]");
        theta_out = theta;
        return Method::GenericTheta;
    }
    std::string hint;
    if (value == "shake")
        hint = " (the SHAKE scheme is the two-step composition of euler_b)";
    throw ValidationError("method", "unknown method '" + value + "'" + hint +
                                        "; valid methods: " + kValidMethods);
}

} // namespace

bool is_lie_method(Method m) {
    return m == Method::LieHamiltonian || m == Method::LieConstrained;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::EulerA: return "euler_a";
        case Method::EulerB: return "euler_b";
        case Method::Midpoint: return "midpoint";
        case Method::Rattle: return "rattle";
        case Method::GenericTheta: return "generic_theta";
        case Method::Nullspace: return "nullspace";
        case Method::LieHamiltonian: return "lie_hamiltonian";
        case Method::LieConstrained: return "lie_constrained";
    }
    return "?";
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    bool saw_model = false, saw_method = false, saw_h = false, saw_steps = false;

    for (const auto& [key, value, lineno] : parse_lines(text)) {
        if (key == "model") {
            cfg.model = value;
            saw_model = true;
        } else if (key == "method") {
            cfg.method = parse_method(value, cfg.theta);
            saw_method = true;
        } else if (key == "h") {
            cfg.h = parse_real(key, value);
            saw_h = true;
        } else if (key == "steps") {
            cfg.steps = parse_integer(key, value);
            saw_steps = true;
        } else if (key == "tolerance") {
            cfg.tolerance = parse_real(key, value);
        } else if (key == "initial_state") {
            cfg.initial_state = parse_numbers(key, value);
        } else if (key == "project_initial") {
            cfg.project_initial = parse_flag(key, value);
        } else if (key == "output_path") {
            cfg.output_path = value;
        } else if (key == "retraction") {
            cfg.retraction = value;
        } else if (key == "model_file") {
            cfg.model_file = value;
        } else {
            throw ParseError("unknown key '" + key + "'", lineno);
        }
    }

    if (!saw_model) throw ValidationError("model", "missing");
    if (!saw_method) throw ValidationError("method", "missing");
    if (!saw_h) throw ValidationError("h", "missing");
    if (!saw_steps) throw ValidationError("steps", "missing");

    if (std::find(std::begin(kValidModels), std::end(kValidModels), cfg.model) ==
        std::end(kValidModels)) {
        std::string names;
        for (const char* m : kValidModels) names += std::string(names.empty() ? "" : ", ") + m;
        throw ValidationError("model", "unknown model '" + cfg.model +
                                           "'; valid models: " + names);
    }
    if (!(cfg.h > 0.0)) throw ValidationError("h", "must be positive");
    if (cfg.steps < 0) throw ValidationError("steps", "must be nonnegative");
    if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance", "must be positive");
    if (cfg.retraction != "exp" && cfg.retraction != "cayley")
        throw ValidationError("retraction", "must be exp or cayley");
    if (cfg.model == "custom" && cfg.model_file.empty())
        throw ValidationError("model_file", "required for model = custom");

    const bool lie_model = cfg.model == "rigid_body_liegroup";
    if (is_lie_method(cfg.method) != lie_model)
        throw ValidationError("method", "method " + method_name(cfg.method) +
                                            " is incompatible with model " + cfg.model);
    return cfg;
}

CustomModelSpec parse_custom_model(const std::string& text) {
    CustomModelSpec spec;
    for (const auto& [key, value, lineno] : parse_lines(text)) {
        if (key == "dim") {
            spec.dim = static_cast<int>(parse_integer(key, value));
        } else if (key == "mass") {
            spec.mass = parse_numbers(key, value);
        } else if (key == "stiffness") {
            spec.stiffness = parse_numbers(key, value);
        } else if (key == "linear") {
            spec.linear = parse_numbers(key, value);
        } else if (key == "constraint") {
            if (value == "unit_sphere") spec.unit_sphere = true;
            else if (value == "none") spec.unit_sphere = false;
            else throw ValidationError("constraint", "must be none or unit_sphere");
        } else {
            throw ParseError("unknown key '" + key + "'", lineno);
        }
    }
    if (spec.dim <= 0) throw ValidationError("dim", "must be positive");
    const size_t n = static_cast<size_t>(spec.dim);
    if (spec.mass.size() != n * n)
        throw ValidationError("mass", "expected dim*dim row-major entries");
    if (spec.stiffness.empty()) spec.stiffness.assign(n * n, 0.0);
    if (spec.stiffness.size() != n * n)
        throw ValidationError("stiffness", "expected dim*dim row-major entries");
    if (spec.linear.empty()) spec.linear.assign(n, 0.0);
    if (spec.linear.size() != n)
        throw ValidationError("linear", "expected dim entries");
    return spec;
}

} // namespace dmech
