#pragma once

// JSON experiment configuration and the model registry it refers to.
//
// {
//   "name": "two-oscillator-leveling",
//   "subsystems": [ {"model": "oscillator", "parameters": {"omega": 1.0},
//                    "initial_state": [1.0, 1.0]}, ... ],
//   "controller": {"kind": "alignment" | "tracking" | "open_loop", "gamma": 0.5,
//                  "target": 1.0, "saturation": 2.0, "perturb_delta": 1e-3},
//   "integrator": {"method": "rk4" | "rk45", "step": 1e-3, "rel_tol": 1e-8,
//                  "abs_tol": 1e-10, "horizon": 200, "record_every": 10},
//   "audit": {"q_monotone_slack": 1e-9, "u_final_tol": 1e-4,
//             "tail_fraction": 0.1, "branch_tol": 1e-3},
//   "seed": 1,
//   "outputs": {"csv_path": "run.csv", "report_path": "run.json"}
// }
//
// Only name, subsystems[].model, subsystems[].initial_state and
// controller.kind are required. Unknown keys are rejected.

#include "sgc/controller.hpp"
#include "sgc/diagnostics.hpp"
#include "sgc/dynamics.hpp"
#include "sgc/integrate.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sgc {

using ParameterMap = std::map<std::string, double>;

/// Named model factories. zoo() holds oscillator, pendulum and integrator;
/// callers may register their own models and reference them by name.
class ModelRegistry {
public:
    using Factory = std::function<SubsystemModel(const ParameterMap&)>;

    static ModelRegistry zoo();

    /// defaults lists every accepted parameter with its default value.
    void add(std::string name, ParameterMap defaults, Factory factory);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::vector<std::string> names() const;

    /// Defaults overlaid with params. Throws ConfigError on an unknown model
    /// or parameter name.
    ParameterMap resolve(const std::string& name, const ParameterMap& params) const;

    /// Throws ConfigError on an unknown model or parameter name.
    SubsystemModel build(const std::string& name, const ParameterMap& params) const;

private:
    struct Entry {
        ParameterMap defaults;
        Factory factory;
    };
    std::map<std::string, Entry> entries_;
};

struct SubsystemConfig {
    std::string model;
    ParameterMap parameters;
    std::vector<double> initial_state;

    friend bool operator==(const SubsystemConfig&, const SubsystemConfig&) = default;
};

enum class ControlMode { Alignment, Tracking, OpenLoop };

struct ControllerConfig {
    ControlMode kind = ControlMode::Alignment;
    double gamma = 0.5;
    std::optional<double> target;
    std::optional<double> saturation;
    std::optional<double> perturb_delta;

    /// Empty for open loop.
    std::optional<ControllerSpec> spec() const;

    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

struct OutputConfig {
    std::optional<std::string> csv_path;
    std::optional<std::string> report_path;

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ExperimentConfig {
    std::string name;
    std::vector<SubsystemConfig> subsystems;
    ControllerConfig controller;
    IntegratorSpec integrator;
    std::size_t record_every = 10;
    Theorem1Thresholds audit;
    std::uint64_t seed = 1;
    OutputConfig outputs;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses and validates; fills defaults. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text,
                              const ModelRegistry& registry = ModelRegistry::zoo());

/// Pretty-printed JSON with every field explicit.
std::string serialize_config(const ExperimentConfig& cfg);

/// Schema and semantic checks shared by parse_config and programmatic configs.
void validate_config(const ExperimentConfig& cfg,
                     const ModelRegistry& registry = ModelRegistry::zoo());

/// Built-in scenarios.
std::vector<ExperimentConfig> catalog();
/// Throws ConfigError if there is no scenario with that name.
ExperimentConfig catalog_scenario(std::string_view name);

}  // namespace sgc
