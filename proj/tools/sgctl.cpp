// Command-line front end: simulate, check, sweep, catalog.

#include "sgc/config.hpp"
#include "sgc/diagnostics.hpp"
#include "sgc/error.hpp"
#include "sgc/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kAuditFailed = 2;

sgc::ExperimentConfig load(const std::string& config_path, const std::string& scenario) {
    if (!scenario.empty()) return sgc::catalog_scenario(scenario);
    std::ifstream f(config_path, std::ios::binary);
    if (!f) throw sgc::IoError("cannot read \"" + config_path + "\"");
    std::stringstream buf;
    buf << f.rdbuf();
    return sgc::parse_config(buf.str());
}

void print(const sgc::AuditReport& r) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.check << "  samples=" << r.samples
              << " violations=" << r.violations << " worst=" << r.worst;
    if (!r.note.empty()) std::cout << "  (" << r.note << ")";
    std::cout << "\n";
}

int run_simulate(const std::string& config_path, const std::string& scenario,
                 const std::string& csv, const std::string& report) {
    sgc::ExperimentConfig cfg = load(config_path, scenario);
    if (!csv.empty()) cfg.outputs.csv_path = csv;
    if (!report.empty()) cfg.outputs.report_path = report;
    const sgc::RunResult res = sgc::run_experiment(cfg);
    const auto& m = res.metrics;
    std::cout << "scenario " << cfg.name << ": " << res.trajectory.size() << " samples\n"
              << "  Q_initial=" << m.q_initial << " Q_final=" << m.q_final
              << " max_Q_rise=" << m.max_q_rise << "\n"
              << "  final_output_spread=" << m.final_output_spread
              << " aligned_value=" << m.aligned_value << " u_tail_max=" << m.u_tail_max << "\n";
    if (m.theorem1_branch) std::cout << "  theorem1_branch=" << sgc::to_string(*m.theorem1_branch) << "\n";
    for (const auto& r : res.audits) print(r);
    return res.passed() ? kOk : kAuditFailed;
}

int run_check(const std::string& config_path, const std::string& scenario) {
    const sgc::ExperimentConfig cfg = load(config_path, scenario);
    const sgc::NetworkSystem net = sgc::build_network(cfg);
    bool ok = true;
    auto show = [&](const sgc::AuditReport& r) {
        print(r);
        ok = ok && r.passed;
    };
    for (const auto& model : net) {
        const auto box = sgc::Box::cube(model.state_dim(), -3.0, 3.0);
        show(sgc::check_conservative(model, {box, 1000, cfg.seed}));
        show(sgc::check_gradient(model, {box, 100, cfg.seed}));
    }
    sgc::LyapunovCandidate candidate;
    if (net.size() >= 2) {
        candidate = sgc::goal_candidate(net);
    } else {
        candidate = {[net](const sgc::NetworkState& s) { return sgc::eval_output(net[0], s[0]); },
                     "output"};
    }
    show(sgc::check_lyapunov_decrease(net, candidate,
                                      {sgc::Box::cube(net.total_dim(), -3.0, 3.0), 1000, cfg.seed}));
    return ok ? kOk : kAuditFailed;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw sgc::ConfigError("bad sweep value \"" + item + "\"");
        out.push_back(v);
    }
    return out;
}

int run_sweep(const std::string& config_path, const std::string& scenario,
              const std::string& param, const std::string& values, const std::string& out) {
    const sgc::ExperimentConfig cfg = load(config_path, scenario);
    const auto rows = sgc::run_sweep(cfg, param, parse_values(values));
    const std::string csv = sgc::format_sweep_csv(rows);
    if (out.empty()) {
        std::cout << csv;
    } else {
        sgc::write_text(out, csv);
    }
    for (const auto& r : rows) {
        if (!r.passed) return kAuditFailed;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speed-gradient invariant alignment: simulation and audits"};
    app.require_subcommand(1);

    std::string config, scenario, csv, report, param, values, out, show;

    auto* sim = app.add_subcommand("simulate", "Run one experiment and audit it");
    auto* sim_cfg = sim->add_option("--config", config, "JSON experiment config");
    sim->add_option("--scenario", scenario, "Built-in scenario name")->excludes(sim_cfg);
    sim->add_option("--csv", csv, "Trajectory CSV output path");
    sim->add_option("--report", report, "JSON report output path");

    auto* chk = app.add_subcommand("check", "Run model diagnostics only");
    auto* chk_cfg = chk->add_option("--config", config, "JSON experiment config");
    chk->add_option("--scenario", scenario, "Built-in scenario name")->excludes(chk_cfg);

    auto* swp = app.add_subcommand("sweep", "Run one experiment per parameter value");
    auto* swp_cfg = swp->add_option("--config", config, "JSON experiment config");
    swp->add_option("--scenario", scenario, "Built-in scenario name")->excludes(swp_cfg);
    swp->add_option("--param", param, "Dotted path, e.g. controller.gamma")->required();
    swp->add_option("--values", values, "Comma-separated values")->required();
    swp->add_option("--out", out, "Sweep CSV output path (stdout if omitted)");

    auto* cat = app.add_subcommand("catalog", "List built-in scenarios");
    cat->add_option("--show", show, "Print the config of one scenario");

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto* sub : {sim, chk, swp}) {
            if (sub->parsed() && config.empty() && scenario.empty()) {
                throw sgc::ConfigError("either --config or --scenario is required");
            }
        }
        if (sim->parsed()) return run_simulate(config, scenario, csv, report);
        if (chk->parsed()) return run_check(config, scenario);
        if (swp->parsed()) return run_sweep(config, scenario, param, values, out);
        if (cat->parsed()) {
            if (!show.empty()) {
                std::cout << sgc::serialize_config(sgc::catalog_scenario(show));
                return kOk;
            }
            for (const auto& c : sgc::catalog()) {
                std::cout << c.name << "  (N=" << c.subsystems.size()
                          << ", T=" << c.integrator.horizon << ")\n";
            }
            return kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
