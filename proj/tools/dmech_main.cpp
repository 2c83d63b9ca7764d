#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dmech/run.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dmech::ValidationError("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-preserving integrators for constrained mechanical systems"};
    app.require_subcommand(1);

    std::string config_path, output_override, kind_name = "conservation";
    double tolerance_override = 0.0;

    CLI::App* sim = app.add_subcommand("simulate", "integrate a trajectory and write CSV");
    sim->add_option("config", config_path, "key = value configuration file")->required();
    sim->add_option("--output", output_override, "override the configured output path");
    sim->add_option("--tolerance", tolerance_override, "override the Newton tolerance");

    CLI::App* chk = app.add_subcommand("check", "run a verification diagnostic");
    chk->add_option("config", config_path, "key = value configuration file")->required();
    chk->add_option("--kind", kind_name, "axioms | symplectic | convergence | conservation")
        ->required();
    chk->add_option("--output", output_override, "override the configured output path");
    chk->add_option("--tolerance", tolerance_override, "override the Newton tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        dmech::RunConfig cfg = dmech::parse_config(slurp(config_path));
        if (!output_override.empty()) cfg.output_path = output_override;
        if (tolerance_override > 0.0) cfg.tolerance = tolerance_override;

        if (sim->parsed()) return dmech::cmd_simulate(cfg, std::cout);
        return dmech::cmd_check(cfg, dmech::parse_check_kind(kind_name), std::cout);
    } catch (const dmech::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dmech::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dmech::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
