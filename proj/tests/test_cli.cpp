#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dmech/models.hpp"
#include "dmech/run.hpp"

using namespace dmech;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_rows(const std::string& csv) {
    int rows = 0;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++rows;
    return rows - 1;  // header
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& p) : path(p) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("parse_config: well-formed input") {
    const RunConfig cfg = parse_config(
        "model = pendulum\nmethod = rattle\nh = 0.01\nsteps = 1000\ninitial_state = 1 0 0 1\n");
    CHECK(cfg.model == "pendulum");
    CHECK(cfg.method == Method::Rattle);
    CHECK(cfg.h == 0.01);
    CHECK(cfg.steps == 1000);
    CHECK(cfg.initial_state.size() == 4);
    CHECK(cfg.tolerance == 1e-12);
}

TEST_CASE("parse_config: comments, generic theta, flags") {
    const RunConfig cfg = parse_config(
        "# run description\nmodel = pendulum  # trailing comment\n"
        "method = generic_theta:0.3\nh = 0.5\nsteps = 2\nproject_initial = true\n");
    CHECK(cfg.method == Method::GenericTheta);
    CHECK(cfg.theta == doctest::Approx(0.3));
    CHECK(cfg.project_initial);
}

TEST_CASE("parse_config: rejections") {
    const std::string base = "model = pendulum\nmethod = rattle\nh = 0.01\nsteps = 10\n";
    CHECK_THROWS_AS(parse_config(base + "h = -1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config(base + "mystery = 3\n"), ParseError);
    CHECK_THROWS_AS(parse_config(base + "steps = -5\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("model = pendulum\nmethod = rattle\nh = 0.01\n"),
                    ValidationError);
    CHECK_THROWS_AS(parse_config(base + "no equals sign here"), ParseError);
    CHECK_THROWS_AS(
        parse_config("model = pendulum\nmethod = lie_hamiltonian\nh = 0.01\nsteps = 1\n"),
        ValidationError);
    CHECK_THROWS_AS(
        parse_config("model = nonsense\nmethod = rattle\nh = 0.01\nsteps = 1\n"),
        ValidationError);

    try {
        parse_config("model = pendulum\nmethod = shake\nh = 0.01\nsteps = 1\n");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("euler_b") != std::string::npos);
        CHECK(msg.find("rattle") != std::string::npos);
    }
}

TEST_CASE("cmd_simulate: row counts and summary") {
    TempFile tmp("test_cli_rows.csv");
    RunConfig cfg = parse_config(
        "model = pendulum\nmethod = rattle\nh = 0.01\nsteps = 10\n"
        "initial_state = 1 0 0 1\noutput_path = " + tmp.path + "\n");
    std::ostringstream out;
    CHECK(cmd_simulate(cfg, out) == 0);
    CHECK(count_rows(slurp(tmp.path)) == 11);

    cfg.steps = 0;
    std::ostringstream out2;
    CHECK(cmd_simulate(cfg, out2) == 0);
    CHECK(count_rows(slurp(tmp.path)) == 1);
}

TEST_CASE("cmd_simulate: infeasible initial state is a config error") {
    RunConfig cfg = parse_config(
        "model = pendulum\nmethod = rattle\nh = 0.01\nsteps = 5\n"
        "initial_state = 1.5 0 0 1\noutput_path = test_cli_infeasible.csv\n");
    std::ostringstream out;
    CHECK(cmd_simulate(cfg, out) == 1);
    CHECK(out.str().find("project_initial") != std::string::npos);

    cfg.project_initial = true;
    std::ostringstream out2;
    CHECK(cmd_simulate(cfg, out2) == 0);
    std::remove("test_cli_infeasible.csv");
}

TEST_CASE("cmd_simulate: null-space method through the config path") {
    TempFile tmp("test_cli_nullspace.csv");
    RunConfig cfg = parse_config(
        "model = pendulum\nmethod = nullspace\nh = 0.01\nsteps = 50\n"
        "initial_state = 1 0 0 1\noutput_path = " + tmp.path + "\n");
    std::ostringstream out;
    CHECK(cmd_simulate(cfg, out) == 0);
    CHECK(out.str().find("max |phi|") != std::string::npos);
    CHECK(count_rows(slurp(tmp.path)) == 51);
}

TEST_CASE("cmd_simulate: deterministic byte-identical output") {
    TempFile a("test_cli_det_a.csv"), b("test_cli_det_b.csv");
    const std::string text =
        "model = spherical_pendulum\nmethod = euler_b\nh = 0.005\nsteps = 50\n";
    RunConfig cfg = parse_config(text);
    cfg.output_path = a.path;
    std::ostringstream sink;
    CHECK(cmd_simulate(cfg, sink) == 0);
    cfg.output_path = b.path;
    CHECK(cmd_simulate(cfg, sink) == 0);
    CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("cmd_simulate: CSV round trip at full precision") {
    TempFile tmp("test_cli_roundtrip.csv");
    RunConfig cfg = parse_config("model = pendulum\nmethod = midpoint\nh = 0.01\nsteps = 20\n"
                                 "initial_state = 1 0 0 1\noutput_path = " + tmp.path + "\n");
    std::ostringstream sink;
    REQUIRE(cmd_simulate(cfg, sink) == 0);

    // Re-run in memory to compare against the parsed file.
    const HolonomicModel pend = make_pendulum();
    RVec q0(2), p0(2);
    q0 << 1.0, 0.0;
    p0 << 0.0, 1.0;
    const IntegrateResult res = integrate({StepperKind::Midpoint}, pend.system,
                                          pend.constraints, q0, p0, 0.01, 20);
    REQUIRE(!res.error);

    std::istringstream in(slurp(tmp.path));
    std::string line;
    std::getline(in, line);  // header
    size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double step, time, q0v, q1v, p0v, p1v;
        fields >> step >> time >> q0v >> q1v >> p0v >> p1v;
        CHECK(q0v == res.trajectory.q[row](0));
        CHECK(q1v == res.trajectory.q[row](1));
        CHECK(p0v == res.trajectory.p[row](0));
        CHECK(p1v == res.trajectory.p[row](1));
        ++row;
    }
    CHECK(row == 21);
}

TEST_CASE("cmd_simulate: custom quadratic model file") {
    TempFile model("test_cli_custom_model.cfg"), csv("test_cli_custom.csv");
    {
        std::ofstream m(model.path);
        m << "dim = 2\nmass = 1 0 0 1\nstiffness = 4 0 0 1\nconstraint = none\n";
    }
    RunConfig cfg = parse_config("model = custom\nmethod = midpoint\nh = 0.01\nsteps = 100\n"
                                 "initial_state = 1 0 0 0\nmodel_file = " + model.path +
                                 "\noutput_path = " + csv.path + "\n");
    std::ostringstream out;
    CHECK(cmd_simulate(cfg, out) == 0);
    CHECK(count_rows(slurp(csv.path)) == 101);
}

TEST_CASE("cmd_simulate: lie model writes momentum summary") {
    TempFile csv("test_cli_lie.csv");
    RunConfig cfg = parse_config(
        "model = rigid_body_liegroup\nmethod = lie_hamiltonian\nh = 0.01\nsteps = 50\n"
        "retraction = cayley\noutput_path = " + csv.path + "\n");
    std::ostringstream out;
    CHECK(cmd_simulate(cfg, out) == 0);
    CHECK(out.str().find("momentum defect") != std::string::npos);
    CHECK(count_rows(slurp(csv.path)) == 51);
}

TEST_CASE("cmd_check: axioms, symplectic, conservation") {
    TempFile csv("test_cli_check.csv");
    std::ostringstream out;

    RunConfig ax = parse_config("model = pendulum\nmethod = generic_theta:0.3\n"
                                "h = 0.01\nsteps = 1\n");
    CHECK(cmd_check(ax, CheckKind::Axioms, out) == 0);

    RunConfig sy = parse_config("model = pendulum\nmethod = euler_b\nh = 0.01\nsteps = 1\n"
                                "initial_state = 1 0 0 1\n");
    CHECK(cmd_check(sy, CheckKind::Symplectic, out) == 0);

    RunConfig co = parse_config("model = pendulum\nmethod = rattle\nh = 0.01\nsteps = 10000\n"
                                "initial_state = 1 0 0 1\noutput_path = " + csv.path + "\n");
    CHECK(cmd_check(co, CheckKind::Conservation, out) == 0);

    RunConfig lie = parse_config(
        "model = rigid_body_liegroup\nmethod = lie_hamiltonian\nh = 0.01\nsteps = 500\n");
    CHECK(cmd_check(lie, CheckKind::Conservation, out) == 0);

    CHECK_THROWS_AS(parse_check_kind("everything"), ValidationError);
}
