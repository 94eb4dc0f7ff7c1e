#include "sgc/config.hpp"

#include "sgc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace sgc {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

const json& require_object(const json& parent, const char* key, const std::string& where) {
    if (!parent.contains(key)) throw ConfigError(where + "." + key + " is required");
    const json& v = parent.at(key);
    if (!v.is_object()) throw ConfigError(where + "." + key + " must be an object");
    return v;
}

double get_number(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::optional<double> get_optional_number(const json& obj, const char* key,
                                          const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_number(obj, key, where);
}

template <typename T>
void maybe(const json& obj, const char* key, const std::string& where, T& out) {
    if (obj.contains(key)) out = static_cast<T>(get_number(obj, key, where));
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

const char* mode_name(ControlMode m) {
    switch (m) {
        case ControlMode::Alignment: return "alignment";
        case ControlMode::Tracking: return "tracking";
        case ControlMode::OpenLoop: return "open_loop";
    }
    return "alignment";
}

ControlMode parse_mode(const std::string& s) {
    if (s == "alignment") return ControlMode::Alignment;
    if (s == "tracking") return ControlMode::Tracking;
    if (s == "open_loop") return ControlMode::OpenLoop;
    throw ConfigError("controller.kind must be alignment, tracking or open_loop, got \"" + s + "\"");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be positive");
}

}  // namespace

ModelRegistry ModelRegistry::zoo() {
    ModelRegistry r;
    r.add("oscillator", {{"omega", 1.0}},
          [](const ParameterMap& p) { return make_oscillator(p.at("omega")); });
    r.add("pendulum", {{"mass", 1.0}, {"length", 1.0}, {"gravity", 1.0}},
          [](const ParameterMap& p) {
              return make_pendulum(p.at("mass"), p.at("length"), p.at("gravity"));
          });
    r.add("integrator", {}, [](const ParameterMap&) { return make_integrator(); });
    return r;
}

void ModelRegistry::add(std::string name, ParameterMap defaults, Factory factory) {
    entries_[std::move(name)] = Entry{std::move(defaults), std::move(factory)};
}

std::vector<std::string> ModelRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

ParameterMap ModelRegistry::resolve(const std::string& name, const ParameterMap& params) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown model \"" + name + "\"");
    ParameterMap full = it->second.defaults;
    for (const auto& [k, v] : params) {
        if (!full.count(k)) {
            throw ConfigError("model \"" + name + "\" has no parameter \"" + k + "\"");
        }
        full[k] = v;
    }
    return full;
}

SubsystemModel ModelRegistry::build(const std::string& name, const ParameterMap& params) const {
    const ParameterMap full = resolve(name, params);
    try {
        return entries_.at(name).factory(full);
    } catch (const InvalidParameter& e) {
        throw ConfigError("model \"" + name + "\": " + e.what());
    }
}

std::optional<ControllerSpec> ControllerConfig::spec() const {
    switch (kind) {
        case ControlMode::OpenLoop: return std::nullopt;
        case ControlMode::Alignment:
            return ControllerSpec{ControllerKind::Alignment, gamma, target, saturation};
        case ControlMode::Tracking:
            return ControllerSpec{ControllerKind::Tracking, gamma, target, saturation};
    }
    return std::nullopt;
}

void validate_config(const ExperimentConfig& cfg, const ModelRegistry& registry) {
    if (cfg.name.empty()) throw ConfigError("name must not be empty");
    const std::size_t n = cfg.subsystems.size();
    if (cfg.controller.kind == ControlMode::Alignment && n < 2) {
        throw ConfigError("Alignment requires N >= 2 subsystems");
    }
    if (cfg.controller.kind == ControlMode::Tracking && n != 1) {
        throw ConfigError("Tracking requires exactly one subsystem");
    }
    if (n == 0) throw ConfigError("subsystems must not be empty");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = cfg.subsystems[i];
        const SubsystemModel m = registry.build(s.model, s.parameters);
        if (s.initial_state.size() != m.state_dim()) {
            throw ConfigError("subsystems[" + std::to_string(i) + "].initial_state has length " +
                              std::to_string(s.initial_state.size()) + ", model \"" + s.model +
                              "\" needs " + std::to_string(m.state_dim()));
        }
        for (double v : s.initial_state) {
            if (!std::isfinite(v)) throw ConfigError("initial_state entries must be finite");
        }
    }
    const auto& c = cfg.controller;
    require_positive(c.gamma, "controller.gamma");
    if (c.kind == ControlMode::Tracking && !c.target) {
        throw ConfigError("controller.target is required for tracking");
    }
    if (c.saturation) require_positive(*c.saturation, "controller.saturation");
    if (c.perturb_delta && (!(*c.perturb_delta >= 0.0) || !std::isfinite(*c.perturb_delta))) {
        throw ConfigError("controller.perturb_delta must be non-negative");
    }
    try {
        cfg.integrator.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("integrator: ") + e.what());
    }
    if (cfg.record_every == 0) throw ConfigError("integrator.record_every must be positive");
    require_positive(cfg.audit.q_monotone_slack, "audit.q_monotone_slack");
    require_positive(cfg.audit.u_final_tol, "audit.u_final_tol");
    require_positive(cfg.audit.branch_tol, "audit.branch_tol");
    if (!(cfg.audit.tail_fraction > 0.0 && cfg.audit.tail_fraction <= 1.0)) {
        throw ConfigError("audit.tail_fraction must lie in (0, 1]");
    }
}

ExperimentConfig parse_config(std::string_view text, const ModelRegistry& registry) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON at line " + std::to_string(line_of(text, e.byte)) +
                          ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    ExperimentConfig cfg;
    try {
        reject_unknown(doc, "config",
                       {"name", "subsystems", "controller", "integrator", "audit", "seed",
                        "outputs"});
        cfg.name = get_string(doc, "name", "config");

        if (!doc.contains("subsystems") || !doc.at("subsystems").is_array()) {
            throw ConfigError("config.subsystems must be an array");
        }
        std::size_t idx = 0;
        for (const json& s : doc.at("subsystems")) {
            const std::string where = "subsystems[" + std::to_string(idx++) + "]";
            if (!s.is_object()) throw ConfigError(where + " must be an object");
            reject_unknown(s, where, {"model", "parameters", "initial_state"});
            SubsystemConfig sc;
            sc.model = get_string(s, "model", where);
            if (s.contains("parameters")) {
                const json& p = s.at("parameters");
                if (!p.is_object()) throw ConfigError(where + ".parameters must be an object");
                for (auto it = p.begin(); it != p.end(); ++it) {
                    sc.parameters[it.key()] = get_number(p, it.key().c_str(), where + ".parameters");
                }
            }
            if (!s.contains("initial_state") || !s.at("initial_state").is_array()) {
                throw ConfigError(where + ".initial_state must be an array");
            }
            for (const json& v : s.at("initial_state")) {
                if (!v.is_number()) throw ConfigError(where + ".initial_state must hold numbers");
                sc.initial_state.push_back(v.get<double>());
            }
            sc.parameters = registry.resolve(sc.model, sc.parameters);
            cfg.subsystems.push_back(std::move(sc));
        }

        const json& c = require_object(doc, "controller", "config");
        reject_unknown(c, "controller", {"kind", "gamma", "target", "saturation", "perturb_delta"});
        cfg.controller.kind = parse_mode(get_string(c, "kind", "controller"));
        maybe(c, "gamma", "controller", cfg.controller.gamma);
        cfg.controller.target = get_optional_number(c, "target", "controller");
        cfg.controller.saturation = get_optional_number(c, "saturation", "controller");
        cfg.controller.perturb_delta = get_optional_number(c, "perturb_delta", "controller");

        if (doc.contains("integrator")) {
            const json& in = require_object(doc, "integrator", "config");
            reject_unknown(in, "integrator",
                           {"method", "step", "rel_tol", "abs_tol", "horizon", "record_every"});
            if (in.contains("method")) {
                const std::string m = get_string(in, "method", "integrator");
                if (m == "rk4") {
                    cfg.integrator.method = IntegrationMethod::RK4;
                } else if (m == "rk45") {
                    cfg.integrator.method = IntegrationMethod::RK45;
                } else {
                    throw ConfigError("integrator.method must be rk4 or rk45, got \"" + m + "\"");
                }
            }
            maybe(in, "step", "integrator", cfg.integrator.step);
            maybe(in, "rel_tol", "integrator", cfg.integrator.rel_tol);
            maybe(in, "abs_tol", "integrator", cfg.integrator.abs_tol);
            maybe(in, "horizon", "integrator", cfg.integrator.horizon);
            if (in.contains("record_every")) {
                const json& r = in.at("record_every");
                if (!r.is_number_integer() || r.get<long long>() <= 0) {
                    throw ConfigError("integrator.record_every must be a positive integer");
                }
                cfg.record_every = r.get<std::size_t>();
            }
        }

        if (doc.contains("audit")) {
            const json& a = require_object(doc, "audit", "config");
            reject_unknown(a, "audit",
                           {"q_monotone_slack", "u_final_tol", "tail_fraction", "branch_tol"});
            maybe(a, "q_monotone_slack", "audit", cfg.audit.q_monotone_slack);
            maybe(a, "u_final_tol", "audit", cfg.audit.u_final_tol);
            maybe(a, "tail_fraction", "audit", cfg.audit.tail_fraction);
            maybe(a, "branch_tol", "audit", cfg.audit.branch_tol);
        }

        if (doc.contains("seed")) {
            const json& s = doc.at("seed");
            if (!s.is_number_integer()) throw ConfigError("config.seed must be an integer");
            cfg.seed = s.get<std::uint64_t>();
        }

        if (doc.contains("outputs")) {
            const json& o = require_object(doc, "outputs", "config");
            reject_unknown(o, "outputs", {"csv_path", "report_path"});
            if (o.contains("csv_path") && !o.at("csv_path").is_null()) {
                cfg.outputs.csv_path = get_string(o, "csv_path", "outputs");
            }
            if (o.contains("report_path") && !o.at("report_path").is_null()) {
                cfg.outputs.report_path = get_string(o, "report_path", "outputs");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    }

    validate_config(cfg, registry);
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json doc;
    doc["name"] = cfg.name;
    json subs = json::array();
    for (const auto& s : cfg.subsystems) {
        json p = json::object();
        for (const auto& [k, v] : s.parameters) p[k] = v;
        subs.push_back({{"model", s.model}, {"parameters", p}, {"initial_state", s.initial_state}});
    }
    doc["subsystems"] = subs;
    doc["controller"] = {{"kind", mode_name(cfg.controller.kind)},
                         {"gamma", cfg.controller.gamma},
                         {"target", optional_json(cfg.controller.target)},
                         {"saturation", optional_json(cfg.controller.saturation)},
                         {"perturb_delta", optional_json(cfg.controller.perturb_delta)}};
    doc["integrator"] = {
        {"method", cfg.integrator.method == IntegrationMethod::RK4 ? "rk4" : "rk45"},
        {"step", cfg.integrator.step},
        {"rel_tol", cfg.integrator.rel_tol},
        {"abs_tol", cfg.integrator.abs_tol},
        {"horizon", cfg.integrator.horizon},
        {"record_every", cfg.record_every}};
    doc["audit"] = {{"q_monotone_slack", cfg.audit.q_monotone_slack},
                    {"u_final_tol", cfg.audit.u_final_tol},
                    {"tail_fraction", cfg.audit.tail_fraction},
                    {"branch_tol", cfg.audit.branch_tol}};
    doc["seed"] = cfg.seed;
    json out = json::object();
    if (cfg.outputs.csv_path) out["csv_path"] = *cfg.outputs.csv_path;
    if (cfg.outputs.report_path) out["report_path"] = *cfg.outputs.report_path;
    doc["outputs"] = out;
    return doc.dump(2) + "\n";
}

namespace {

SubsystemConfig oscillator(double omega, std::vector<double> x0) {
    return {"oscillator", {{"omega", omega}}, std::move(x0)};
}

SubsystemConfig pendulum(std::vector<double> x0) {
    return {"pendulum", {{"mass", 1.0}, {"length", 1.0}, {"gravity", 1.0}}, std::move(x0)};
}

ExperimentConfig scenario(std::string name, std::vector<SubsystemConfig> subs,
                          ControllerConfig ctrl, double horizon) {
    ExperimentConfig cfg;
    cfg.name = std::move(name);
    cfg.subsystems = std::move(subs);
    cfg.controller = ctrl;
    cfg.integrator.horizon = horizon;
    return cfg;
}

// Second pendulum rests at its stable equilibrium, where L_g h = 0 and the
// law cannot move it. The first pendulum's energy then decays only
// algebraically (~1/t), hence the looser control-decay tolerance.
ExperimentConfig degenerate_rest() {
    ExperimentConfig cfg =
        scenario("degenerate-rest", {pendulum({2.5, 0.0}), pendulum({0.0, 0.0})},
                 ControllerConfig{ControlMode::Alignment, 1.0, {}, {}, {}}, 300.0);
    cfg.audit.u_final_tol = 1e-3;
    return cfg;
}

}  // namespace

std::vector<ExperimentConfig> catalog() {
    const ControllerConfig align{ControlMode::Alignment, 0.5, {}, {}, {}};
    return {
        // Energies 1 and 0.25.
        scenario("two-oscillator-leveling",
                 {oscillator(1.0, {1.0, 1.0}), oscillator(1.0, {0.5, 0.5})}, align, 200.0),
        scenario("three-pendulum-leveling",
                 {pendulum({1.2, 0.0}), pendulum({0.6, 0.0}), pendulum({0.3, 0.0})}, align, 200.0),
        scenario("mixed-pendulum-oscillator",
                 {pendulum({1.0, 0.0}), oscillator(1.0, {0.5, 0.0}), pendulum({0.0, 0.8}),
                  oscillator(2.0, {0.3, 0.0})},
                 align, 200.0),
        // Equal energies 0.5.
        scenario("aligned-start", {oscillator(1.0, {1.0, 0.0}), oscillator(1.0, {0.0, 1.0})},
                 align, 200.0),
        scenario("pendulum-energy-tracking", {pendulum({0.1, 0.0})},
                 ControllerConfig{ControlMode::Tracking, 1.0, 1.0, {}, {}}, 300.0),
        degenerate_rest(),
    };
}

ExperimentConfig catalog_scenario(std::string_view name) {
    for (auto& cfg : catalog()) {
        if (cfg.name == name) return cfg;
    }
    throw ConfigError("no catalog scenario named \"" + std::string(name) + "\"");
}

}  // namespace sgc
