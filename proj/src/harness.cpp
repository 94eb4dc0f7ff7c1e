#include "sgc/harness.hpp"

#include "sgc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

namespace sgc {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json report_json(const AuditReport& r) {
    return {{"check", r.check},           {"samples", r.samples},
            {"violations", r.violations}, {"worst", r.worst},
            {"worst_location", r.worst_location}, {"passed", r.passed},
            {"note", r.note}};
}

AuditReport open_loop_invariance(const Trajectory& traj, double tol) {
    AuditReport r;
    r.check = "open_loop_invariance";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        double drift = 0.0;
        for (std::size_t i = 0; i < traj.outputs[k].size(); ++i) {
            drift = std::max(drift, std::abs(traj.outputs[k][i] - traj.outputs[0][i]));
        }
        if (drift > tol) ++r.violations;
        if (k == 0 || drift > r.worst) {
            r.worst = drift;
            r.worst_location = {traj.times[k]};
        }
        ++r.samples;
    }
    r.passed = r.violations == 0;
    return r;
}

}  // namespace

bool RunMetrics::same_values(const RunMetrics& o) const {
    return q_initial == o.q_initial && q_final == o.q_final && max_q_rise == o.max_q_rise &&
           final_output_spread == o.final_output_spread && u_tail_max == o.u_tail_max &&
           aligned_value == o.aligned_value && theorem1_branch == o.theorem1_branch;
}

bool RunResult::passed() const {
    return std::all_of(audits.begin(), audits.end(), [](const AuditReport& r) { return r.passed; });
}

NetworkSystem build_network(const ExperimentConfig& cfg, const ModelRegistry& registry) {
    std::vector<SubsystemModel> models;
    for (const auto& s : cfg.subsystems) models.push_back(registry.build(s.model, s.parameters));
    return NetworkSystem(std::move(models));
}

NetworkState initial_states(const ExperimentConfig& cfg) {
    const double delta = cfg.controller.perturb_delta.value_or(0.0);
    SampleStream rng(cfg.seed);
    NetworkState out;
    for (const auto& s : cfg.subsystems) {
        std::vector<double> x = s.initial_state;
        if (delta > 0.0) {
            for (double& v : x) v += rng.uniform(-delta, delta);
        }
        out.emplace_back(std::move(x));
    }
    return out;
}

RunMetrics compute_metrics(const Trajectory& traj, const ExperimentConfig& cfg) {
    RunMetrics m;
    m.q_initial = traj.goal.front();
    m.q_final = traj.goal.back();
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        m.max_q_rise = std::max(m.max_q_rise, traj.goal[k + 1] - traj.goal[k]);
    }
    const auto& y = traj.outputs.back();
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    m.final_output_spread = *hi - *lo;
    double sum = 0.0;
    for (double v : y) sum += v;
    m.aligned_value = sum / static_cast<double>(y.size());

    const double cut = (1.0 - cfg.audit.tail_fraction) * traj.times.back();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < cut && k + 1 < traj.size()) continue;
        for (double u : traj.controls[k]) m.u_tail_max = std::max(m.u_tail_max, std::abs(u));
    }
    return m;
}

RunResult run_experiment(const ExperimentConfig& cfg, const ModelRegistry& registry) {
    validate_config(cfg, registry);
    const auto start = std::chrono::steady_clock::now();

    RunResult res;
    res.config = cfg;
    const NetworkSystem net = build_network(cfg, registry);
    res.initial_state = initial_states(cfg);
    const auto spec = cfg.controller.spec();
    try {
        res.trajectory = simulate(net, res.initial_state, spec, cfg.integrator, cfg.record_every);
    } catch (const SimulationError& e) {
        throw SimulationError("experiment \"" + cfg.name + "\": " + e.what(), e.time(),
                              e.partial());
    }
    const Trajectory& traj = res.trajectory;

    res.metrics = compute_metrics(traj, cfg);
    if (!spec) {
        res.audits.push_back(open_loop_invariance(traj, 1e-6));
    } else if (traj.any_clipped()) {
        AuditReport note;
        note.check = "theorem1";
        note.note = "skipped: saturation clipped the control";
        res.audits.push_back(note);
    } else {
        Theorem1Audit audit = audit_theorem1(traj, cfg.audit);
        res.metrics.theorem1_branch = audit.branch;
        res.audits.push_back(audit.monotone);
        res.audits.push_back(audit.control_decay);
        res.audits.push_back(audit.alternative);
        res.audits.push_back(check_goal_rate_agreement(net, traj));
        res.theorem1 = std::move(audit);
    }
    res.audits.push_back(check_bounded(traj));

    res.metrics.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (cfg.outputs.csv_path) emit_csv(traj, *cfg.outputs.csv_path);
    if (cfg.outputs.report_path) write_text(*cfg.outputs.report_path, format_report(res));
    return res;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& path, double value,
                                const ModelRegistry& registry) {
    json doc = json::parse(serialize_config(cfg));
    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (node->is_object() && node->contains(part)) {
            node = &(*node)[part];
        } else if (node->is_array() && !part.empty() &&
                   std::all_of(part.begin(), part.end(), ::isdigit) &&
                   std::stoul(part) < node->size()) {
            node = &(*node)[std::stoul(part)];
        } else {
            throw ConfigError("sweep path \"" + path + "\" does not resolve at \"" + part + "\"");
        }
    }
    if (!node->is_number()) {
        throw ConfigError("sweep path \"" + path + "\" does not name a numeric field");
    }
    if (node->is_number_integer()) {
        if (value != std::floor(value)) {
            throw ConfigError("sweep path \"" + path + "\" needs integer values");
        }
        *node = static_cast<long long>(value);
    } else {
        *node = value;
    }
    return parse_config(doc.dump(), registry);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& path,
                                const std::vector<double>& values, const ModelRegistry& registry) {
    std::vector<ExperimentConfig> configs;
    for (double v : values) {
        ExperimentConfig c = with_parameter(cfg, path, v, registry);
        c.outputs = {};
        configs.push_back(std::move(c));
    }
    std::vector<std::future<RunResult>> jobs;
    for (const auto& c : configs) {
        jobs.push_back(std::async(std::launch::async,
                                  [&registry, c] { return run_experiment(c, registry); }));
    }
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        RunResult r = jobs[i].get();
        rows.push_back({values[i], r.metrics, r.passed()});
    }
    return rows;
}

std::string format_csv(const Trajectory& traj) {
    std::string out = "t";
    if (traj.size() == 0) return out + "\n";
    const auto& first = traj.states.front();
    for (std::size_t i = 0; i < first.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        for (std::size_t j = 0; j < first[i].dim(); ++j) {
            out += ",x" + idx + "_" + std::to_string(j + 1);
        }
        out += ",y" + idx + ",u" + idx;
    }
    out += ",Q,Qdot_bound\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out += fmt17(traj.times[k]);
        for (std::size_t i = 0; i < first.size(); ++i) {
            for (double v : traj.states[k][i]) out += "," + fmt17(v);
            out += "," + fmt17(traj.outputs[k][i]) + "," + fmt17(traj.controls[k][i]);
        }
        out += "," + fmt17(traj.goal[k]) + "," + fmt17(traj.goal_rate_bound[k]) + "\n";
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open \"" + path + "\" for writing");
    f << text;
    if (!f) throw IoError("failed writing \"" + path + "\"");
}

void emit_csv(const Trajectory& traj, const std::string& path) { write_text(path, format_csv(traj)); }

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "value,Q_initial,Q_final,max_Q_rise,final_output_spread,u_tail_max,aligned_value,"
        "theorem1_branch,passed\n";
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out += fmt17(r.value) + "," + fmt17(m.q_initial) + "," + fmt17(m.q_final) + "," +
               fmt17(m.max_q_rise) + "," + fmt17(m.final_output_spread) + "," +
               fmt17(m.u_tail_max) + "," + fmt17(m.aligned_value) + "," +
               (m.theorem1_branch ? to_string(*m.theorem1_branch) : "") + "," +
               (r.passed ? "true" : "false") + "\n";
    }
    return out;
}

std::string format_report(const RunResult& result) {
    const RunMetrics& m = result.metrics;
    json metrics = {{"Q_initial", m.q_initial},
                    {"Q_final", m.q_final},
                    {"max_Q_rise", m.max_q_rise},
                    {"final_output_spread", m.final_output_spread},
                    {"u_tail_max", m.u_tail_max},
                    {"aligned_value", m.aligned_value},
                    {"theorem1_branch",
                     m.theorem1_branch ? json(to_string(*m.theorem1_branch)) : json(nullptr)},
                    {"wall_time", m.wall_time}};
    json audits = json::array();
    for (const auto& r : result.audits) audits.push_back(report_json(r));
    json doc = {{"schema_version", 1},
                {"config", json::parse(serialize_config(result.config))},
                {"metrics", metrics},
                {"audits", audits},
                {"samples", result.trajectory.size()},
                {"passed", result.passed()}};
    return doc.dump(2) + "\n";
}

}  // namespace sgc
