#include <catch2/catch_amalgamated.hpp>

#include "sgc/error.hpp"
#include "sgc/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sgc;
using Catch::Matchers::ContainsSubstring;

namespace {

constexpr const char* kMinimal = R"({
  "name": "minimal",
  "subsystems": [
    {"model": "oscillator", "initial_state": [1, 1]},
    {"model": "oscillator", "initial_state": [0.5, 0.5]}
  ],
  "controller": {"kind": "alignment"}
})";

std::vector<std::vector<double>> parse_rows(const std::string& csv, std::string& header) {
    std::istringstream in(csv);
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("sgc_test_harness_" + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentConfig short_run(std::string name, double horizon) {
    auto cfg = catalog_scenario(name);
    cfg.integrator.horizon = horizon;
    return cfg;
}

}  // namespace

TEST_CASE("minimal config gets documented defaults", "[harness]") {
    const auto cfg = parse_config(kMinimal);
    CHECK(cfg.name == "minimal");
    REQUIRE(cfg.subsystems.size() == 2);
    CHECK(cfg.subsystems[0].parameters.at("omega") == 1.0);
    CHECK(cfg.controller.kind == ControlMode::Alignment);
    CHECK(cfg.controller.gamma == 0.5);
    CHECK_FALSE(cfg.controller.target);
    CHECK_FALSE(cfg.controller.saturation);
    CHECK_FALSE(cfg.controller.perturb_delta);
    CHECK(cfg.integrator.method == IntegrationMethod::RK4);
    CHECK(cfg.integrator.step == 1e-3);
    CHECK(cfg.integrator.horizon == 200.0);
    CHECK(cfg.record_every == 10);
    CHECK(cfg.seed == 1);
    CHECK_FALSE(cfg.outputs.csv_path);
}

TEST_CASE("config errors are explicit", "[harness]") {
    std::string typo = kMinimal;
    typo.replace(typo.find("\"kind\""), 6, "\"kind\": \"alignment\", \"gama\"");
    typo.replace(typo.find("\"alignment\"}"), 12, "0.3}");
    CHECK_THROWS_WITH(parse_config(typo), ContainsSubstring("gama"));

    const char* single = R"({"name": "one", "subsystems": [{"model": "oscillator", "initial_state": [1, 0]}],
                              "controller": {"kind": "alignment"}})";
    CHECK_THROWS_WITH(parse_config(single), ContainsSubstring("Alignment requires N >= 2"));

    const char* malformed = "{\n  \"name\": \"x\",\n  \"subsystems\": [,\n}";
    CHECK_THROWS_WITH(parse_config(malformed), ContainsSubstring("line 3"));

    const char* no_target = R"({"name": "t", "subsystems": [{"model": "pendulum", "initial_state": [0.1, 0]}],
                                 "controller": {"kind": "tracking"}})";
    CHECK_THROWS_AS(parse_config(no_target), ConfigError);

    const char* bad_model = R"({"name": "b", "subsystems": [{"model": "rotor", "initial_state": [0, 0]},
                                 {"model": "oscillator", "initial_state": [1, 0]}], "controller": {"kind": "alignment"}})";
    CHECK_THROWS_WITH(parse_config(bad_model), ContainsSubstring("rotor"));

    const char* wrong_dim = R"({"name": "d", "subsystems": [{"model": "oscillator", "initial_state": [0]},
                                 {"model": "oscillator", "initial_state": [1, 0]}], "controller": {"kind": "alignment"}})";
    CHECK_THROWS_AS(parse_config(wrong_dim), ConfigError);

    const char* zero_tol = R"({"name": "z", "subsystems": [{"model": "oscillator", "initial_state": [0, 1]},
                                 {"model": "oscillator", "initial_state": [1, 0]}], "controller": {"kind": "alignment"},
                                 "integrator": {"method": "rk45", "rel_tol": 0}})";
    CHECK_THROWS_AS(parse_config(zero_tol), ConfigError);
}

TEST_CASE("catalog configs round-trip through JSON", "[harness][property]") {
    const auto all = catalog();
    REQUIRE(all.size() == 6);
    for (const auto& cfg : all) {
        INFO(cfg.name);
        CHECK(parse_config(serialize_config(cfg)) == cfg);
    }
    CHECK_THROWS_AS(catalog_scenario("no-such-scenario"), ConfigError);
}

TEST_CASE("catalog scenario outcomes", "[harness]") {
    SECTION("two-oscillator-leveling") {
        const auto r = run_experiment(catalog_scenario("two-oscillator-leveling"));
        CHECK(r.metrics.q_initial == Catch::Approx(2.0 * 0.75 * 0.75));
        CHECK(r.metrics.final_output_spread < 1e-3);
        CHECK(r.metrics.theorem1_branch == Theorem1Branch::Goal);
        CHECK(r.passed());
    }
    SECTION("pendulum-energy-tracking") {
        const auto r = run_experiment(catalog_scenario("pendulum-energy-tracking"));
        CHECK(std::abs(r.trajectory.outputs.back()[0] - 1.0) < 1e-3);
        CHECK(r.passed());
    }
    SECTION("aligned-start") {
        const auto r = run_experiment(catalog_scenario("aligned-start"));
        CHECK(r.metrics.q_final <= 1e-12);
        CHECK(r.metrics.u_tail_max <= 1e-12);
        CHECK(r.passed());
    }
    SECTION("degenerate-rest") {
        auto cfg = catalog_scenario("degenerate-rest");
        const auto plain = run_experiment(cfg);
        REQUIRE(plain.metrics.theorem1_branch);
        CHECK(*plain.metrics.theorem1_branch != Theorem1Branch::Neither);
        cfg.controller.perturb_delta = 1e-3;
        const auto kicked = run_experiment(cfg);
        CHECK(kicked.metrics.theorem1_branch == Theorem1Branch::Goal);
        CHECK(kicked.initial_state != plain.initial_state);
    }
}

TEST_CASE("perturbation is seeded and bounded", "[harness][property]") {
    auto cfg = catalog_scenario("three-pendulum-leveling");
    cfg.controller.perturb_delta = 1e-3;
    const auto a = initial_states(cfg);
    CHECK(a == initial_states(cfg));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < a[i].dim(); ++k) {
            CHECK(std::abs(a[i][k] - cfg.subsystems[i].initial_state[k]) <= 1e-3);
        }
    }
    cfg.seed = 2;
    CHECK(initial_states(cfg) != a);
}

TEST_CASE("open-loop runs audit invariance instead of the theorem", "[harness]") {
    auto cfg = short_run("mixed-pendulum-oscillator", 20.0);
    cfg.controller.kind = ControlMode::OpenLoop;
    const auto r = run_experiment(cfg);
    CHECK_FALSE(r.theorem1);
    CHECK_FALSE(r.metrics.theorem1_branch);
    CHECK(r.passed());
}

TEST_CASE("gamma sweep", "[harness]") {
    const auto cfg = catalog_scenario("two-oscillator-leveling");
    const auto rows = run_sweep(cfg, "controller.gamma", {0.05, 0.1, 0.5, 1.0});
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        CHECK(row.metrics.max_q_rise <= 1e-9);
        CHECK(row.passed);
    }
    CHECK(rows[2].value == 0.5);
    CHECK(run_sweep(cfg, "controller.gamma", {}).empty());
    CHECK(format_sweep_csv({}).find('\n') == format_sweep_csv({}).size() - 1);
}

TEST_CASE("horizon sweep spread is non-increasing", "[harness]") {
    const auto rows = run_sweep(catalog_scenario("two-oscillator-leveling"), "integrator.horizon",
                                {50.0, 100.0, 200.0});
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].metrics.final_output_spread <= rows[0].metrics.final_output_spread);
    CHECK(rows[2].metrics.final_output_spread <= rows[1].metrics.final_output_spread);
}

TEST_CASE("sweep rows equal individual runs", "[harness][property]") {
    const auto cfg = short_run("three-pendulum-leveling", 30.0);
    const std::vector<double> values{0.2, 0.9, 0.4};
    const auto rows = run_sweep(cfg, "controller.gamma", values);
    REQUIRE(rows.size() == values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto single = run_experiment(with_parameter(cfg, "controller.gamma", values[k]));
        CHECK(rows[k].value == values[k]);
        CHECK(rows[k].metrics.same_values(single.metrics));
        CHECK(rows[k].passed == single.passed());
    }
}

TEST_CASE("parameter paths must resolve to numbers", "[harness]") {
    const auto cfg = catalog_scenario("two-oscillator-leveling");
    CHECK(with_parameter(cfg, "subsystems.1.initial_state.0", 0.7).subsystems[1].initial_state[0] == 0.7);
    CHECK(with_parameter(cfg, "subsystems.0.parameters.omega", 2.0).subsystems[0].parameters.at("omega") == 2.0);
    CHECK(with_parameter(cfg, "integrator.record_every", 5.0).record_every == 5);
    CHECK_THROWS_AS(with_parameter(cfg, "controller.gama", 1.0), ConfigError);
    CHECK_THROWS_AS(with_parameter(cfg, "name", 1.0), ConfigError);
    CHECK_THROWS_AS(with_parameter(cfg, "subsystems.9.initial_state.0", 1.0), ConfigError);
    CHECK_THROWS_AS(with_parameter(cfg, "integrator.record_every", 2.5), ConfigError);
    CHECK_THROWS_AS(run_sweep(cfg, "controller.nothing", {1.0}), ConfigError);
}

TEST_CASE("CSV format", "[harness]") {
    const auto r = run_experiment(short_run("two-oscillator-leveling", 10.0));
    const auto csv = format_csv(r.trajectory);
    REQUIRE(csv.back() == '\n');
    std::string header;
    const auto rows = parse_rows(csv, header);
    CHECK(header == "t,x1_1,x1_2,y1,u1,x2_1,x2_2,y2,u2,Q,Qdot_bound");
    CHECK(rows.size() == r.trajectory.size());
    for (const auto& row : rows) {
        REQUIRE(row.size() == 11);
        const double y1 = row[3];
        const double y2 = row[7];
        const double q = 2.0 * (y1 - y2) * (y1 - y2);
        REQUIRE(std::abs(q - row[9]) <= 1e-15);
    }
    // %.17g round-trips exactly.
    for (std::size_t k = 0; k < rows.size(); ++k) {
        REQUIRE(rows[k][0] == r.trajectory.times[k]);
        REQUIRE(rows[k][1] == r.trajectory.states[k][0][0]);
    }
}

TEST_CASE("CSV header for mixed dimensions", "[harness]") {
    Trajectory t;
    t.times = {0.0};
    t.states = {{{1.0, 0.0}, {2.0}}};
    t.outputs = {{0.5, 2.0}};
    t.controls = {{0.0, 0.0}};
    t.lie_factors = {{0.0, 1.0}};
    t.goal = {4.5};
    t.goal_rate_bound = {0.0};
    t.clipped = {false};
    std::string header;
    const auto rows = parse_rows(format_csv(t), header);
    CHECK(header == "t,x1_1,x1_2,y1,u1,x2_1,y2,u2,Q,Qdot_bound");
    CHECK(rows.size() == 1);
}

TEST_CASE("runs are deterministic and write artifacts", "[harness][property]") {
    auto cfg = short_run("mixed-pendulum-oscillator", 20.0);
    const auto csv_a = temp_path("a.csv");
    const auto csv_b = temp_path("b.csv");
    const auto report = temp_path("report.json");
    cfg.outputs.csv_path = csv_a.string();
    cfg.outputs.report_path = report.string();
    const auto a = run_experiment(cfg);
    cfg.outputs.csv_path = csv_b.string();
    const auto b = run_experiment(cfg);
    CHECK(a.metrics.same_values(b.metrics));
    CHECK(a.trajectory.states == b.trajectory.states);
    const auto bytes = slurp(csv_a);
    CHECK_FALSE(bytes.empty());
    CHECK(bytes == slurp(csv_b));
    CHECK(bytes == format_csv(a.trajectory));

    const auto json = slurp(report);
    CHECK_THAT(json, ContainsSubstring("\"schema_version\""));
    CHECK_THAT(json, ContainsSubstring("\"metrics\""));
    CHECK_THAT(json, ContainsSubstring("goal_rate_agreement"));
    for (const auto& p : {csv_a, csv_b, report}) std::filesystem::remove(p);
}

TEST_CASE("unwritable output path is an I/O error", "[harness]") {
    auto cfg = short_run("two-oscillator-leveling", 1.0);
    cfg.outputs.csv_path = "/nonexistent-dir/sub/out.csv";
    CHECK_THROWS_WITH(run_experiment(cfg), ContainsSubstring("/nonexistent-dir/sub/out.csv"));
    CHECK_THROWS_AS(run_experiment(cfg), IoError);
}
