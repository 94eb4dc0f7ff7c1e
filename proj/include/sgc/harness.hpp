#pragma once

// Experiment runner: builds the network from a config, simulates, audits,
// summarizes and writes CSV / JSON artifacts.

#include "sgc/config.hpp"
#include "sgc/diagnostics.hpp"
#include "sgc/integrate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sgc {

struct RunMetrics {
    double q_initial = 0.0;
    double q_final = 0.0;
    double max_q_rise = 0.0;           // largest increase between consecutive samples, >= 0
    double final_output_spread = 0.0;  // max_i y_i - min_i y_i at the horizon
    double u_tail_max = 0.0;           // max |u_i| over the audit tail
    double aligned_value = 0.0;        // mean of the final outputs
    std::optional<Theorem1Branch> theorem1_branch;  // closed loop, unclipped only
    double wall_time = 0.0;            // seconds; not part of equality

    /// Compares everything except wall_time.
    bool same_values(const RunMetrics& other) const;
};

struct RunResult {
    ExperimentConfig config;
    NetworkState initial_state;  // after the optional perturbation
    Trajectory trajectory;
    RunMetrics metrics;
    std::optional<Theorem1Audit> theorem1;
    std::vector<AuditReport> audits;  // every report, theorem sub-reports included

    bool passed() const;
};

NetworkSystem build_network(const ExperimentConfig& cfg,
                            const ModelRegistry& registry = ModelRegistry::zoo());

/// Initial states with the seeded uniform perturbation of +-perturb_delta
/// applied to every coordinate when perturb_delta is set.
NetworkState initial_states(const ExperimentConfig& cfg);

RunMetrics compute_metrics(const Trajectory& traj, const ExperimentConfig& cfg);

/// Writes the CSV and report when the config names paths.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const ModelRegistry& registry = ModelRegistry::zoo());

struct SweepRow {
    double value = 0.0;
    RunMetrics metrics;
    bool passed = false;
};

/// One independent run per value with the dotted parameter path set, e.g.
/// "controller.gamma" or "subsystems.0.initial_state.1". Output paths of
/// the base config are ignored. Runs execute concurrently.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& path,
                                const std::vector<double>& values,
                                const ModelRegistry& registry = ModelRegistry::zoo());

/// Returns cfg with the numeric field at path replaced. Throws ConfigError
/// if the path does not name an existing numeric field.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& path, double value,
                                const ModelRegistry& registry = ModelRegistry::zoo());

/// Columns: t, then per subsystem i: xi_1..xi_n, yi, ui, then Q, Qdot_bound.
std::string format_csv(const Trajectory& traj);
void emit_csv(const Trajectory& traj, const std::string& path);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

/// Single JSON document: config echo, metrics, audits.
std::string format_report(const RunResult& result);
void write_text(const std::string& path, const std::string& text);

}  // namespace sgc
