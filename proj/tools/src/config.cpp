#include "tilln/cli/config.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace tilln::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kParameterKeys{
    "window", "V",     "gamma", "C",       "R",     "beta",    "nu",
    "steps",  "replications", "n_grid", "g", "start", "start_b", "start_time",
    "tol",    "max_depth", "horizon", "samples", "n_max", "coupling", "gap_tolerance"};

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

// Reads p[key] into out, recording a type error instead of throwing.
template <class T>
void read(const json& p, const char* key, std::optional<T>& out, std::vector<std::string>& errors) {
    if (!p.contains(key)) return;
    try {
        out = p.at(key).get<T>();
    } catch (const json::exception&) {
        errors.push_back(std::string("parameter '") + key + "' has the wrong type");
    }
}

template <class T>
void read(const json& p, const char* key, T& out, std::vector<std::string>& errors) {
    std::optional<T> v;
    read(p, key, v, errors);
    if (v) out = *v;
}

StartSpec parse_start(const json& j, std::vector<std::string>& errors, const char* key) {
    StartSpec s;
    if (j.is_string()) {
        const auto v = j.get<std::string>();
        if (v == "equilibrium") s.equilibrium = true;
        else s.label = v;
    } else if (j.is_number_integer()) {
        s.label = std::to_string(j.get<std::int64_t>());
    } else {
        errors.push_back(std::string("parameter '") + key + "' must be a state label or \"equilibrium\"");
    }
    return s;
}

json start_json(const StartSpec& s) {
    return s.equilibrium ? json("equilibrium") : json(s.label);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument("invalid config: " + join(errors)), errors_(std::move(errors)) {}

bool is_stochastic(std::string_view task) {
    return task == "simulate" || task == "slln" || task == "tail" || task == "couple";
}

Model resolve_model(const ExperimentConfig& cfg) {
    if (!cfg.model_inline.empty()) return load_model(cfg.model_inline);
    return builtin_model(cfg.model_name);
}

DriftSpec resolve_drift(const ExperimentConfig& cfg, const Model& model) {
    DriftSpec d = model.drift;
    if (cfg.V) {
        d.V.resize(static_cast<Eigen::Index>(cfg.V->size()));
        for (std::size_t i = 0; i < cfg.V->size(); ++i) d.V[static_cast<Eigen::Index>(i)] = (*cfg.V)[i];
    }
    if (cfg.gamma) d.gamma = *cfg.gamma;
    if (cfg.C) d.C = *cfg.C;
    if (cfg.R) d.R = *cfg.R;
    return d;
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

    std::vector<std::string> errors;
    ExperimentConfig cfg;

    for (const auto& [key, _] : j.items()) {
        if (key != "model" && key != "task" && key != "seed" && key != "output" && key != "parameters") {
            errors.push_back("unknown key '" + key + "'");
        }
    }

    std::optional<Model> model;
    if (!j.contains("model")) {
        errors.emplace_back("missing key 'model'");
    } else if (j["model"].is_string()) {
        cfg.model_name = j["model"].get<std::string>();
        const auto names = builtin_model_names();
        if (std::find(names.begin(), names.end(), cfg.model_name) == names.end()) {
            errors.push_back("unknown model '" + cfg.model_name + "'");
        }
    } else if (j["model"].is_object()) {
        cfg.model_inline = j["model"].dump();
        cfg.model_name = j["model"].value("name", std::string("inline"));
    } else {
        errors.emplace_back("'model' must be a built-in name or an inline definition");
    }
    if (errors.empty()) {
        try {
            model = resolve_model(cfg);
        } catch (const std::exception& e) {
            errors.emplace_back(e.what());
        }
    }

    if (!j.contains("task") || !j["task"].is_string()) {
        errors.emplace_back("missing key 'task'");
    } else {
        cfg.task = j["task"].get<std::string>();
        if (std::find(kTasks.begin(), kTasks.end(), cfg.task) == kTasks.end()) {
            errors.push_back("unknown task '" + cfg.task + "'");
        }
    }
    if (j.contains("seed")) {
        if (j["seed"].is_number_unsigned()) cfg.seed = j["seed"].get<std::uint64_t>();
        else errors.emplace_back("'seed' must be a nonnegative integer");
    } else if (is_stochastic(cfg.task)) {
        errors.push_back("missing key 'seed' (required for task " + cfg.task + ")");
    }
    if (j.contains("output")) {
        if (j["output"].is_string()) cfg.output = j["output"].get<std::string>();
        else errors.emplace_back("'output' must be a path");
    }

    const json p = j.value("parameters", json::object());
    if (!p.is_object()) {
        errors.emplace_back("'parameters' must be an object");
        throw ConfigError(errors);
    }
    for (const auto& [key, _] : p.items()) {
        if (!kParameterKeys.count(key)) errors.push_back("unknown parameter '" + key + "'");
    }

    if (p.contains("window")) {
        std::optional<std::vector<TimeIndex>> w;
        read(p, "window", w, errors);
        if (w && (w->size() != 2 || (*w)[1] < (*w)[0])) errors.emplace_back("window must be [first, last] with first <= last");
        else if (w) cfg.window = TimeWindow{(*w)[0], (*w)[1]};
    }
    if (p.contains("V")) {
        if (p["V"].is_number()) {
            if (model) cfg.V = std::vector<double>(model->family.state_count(), p["V"].get<double>());
        } else {
            read(p, "V", cfg.V, errors);
        }
    }
    read(p, "gamma", cfg.gamma, errors);
    read(p, "C", cfg.C, errors);
    read(p, "R", cfg.R, errors);
    read(p, "beta", cfg.beta, errors);
    read(p, "nu", cfg.nu, errors);
    read(p, "steps", cfg.steps, errors);
    read(p, "replications", cfg.replications, errors);
    read(p, "n_grid", cfg.n_grid, errors);
    read(p, "start_time", cfg.start_time, errors);
    read(p, "tol", cfg.tol, errors);
    read(p, "max_depth", cfg.max_depth, errors);
    read(p, "horizon", cfg.horizon, errors);
    read(p, "samples", cfg.samples, errors);
    read(p, "n_max", cfg.n_max, errors);
    read(p, "coupling", cfg.coupling, errors);
    read(p, "gap_tolerance", cfg.gap_tolerance, errors);

    if (p.contains("g")) {
        const auto& g = p["g"];
        if (g.is_string() && g.get<std::string>() == "identity") {
            cfg.g.kind = GSpec::Kind::Identity;
        } else if (g.is_object() && g.contains("constant") && g["constant"].is_number()) {
            cfg.g.kind = GSpec::Kind::Constant;
            cfg.g.constant = g["constant"].get<double>();
        } else if (g.is_array()) {
            cfg.g.kind = GSpec::Kind::Table;
            try {
                cfg.g.table = g.get<std::vector<double>>();
            } catch (const json::exception&) {
                errors.emplace_back("g table must hold numbers");
            }
        } else {
            errors.emplace_back("g must be \"identity\", {\"constant\": c} or a table");
        }
    }
    if (p.contains("start")) cfg.start = parse_start(p["start"], errors, "start");
    if (p.contains("start_b")) cfg.start_b = parse_start(p["start_b"], errors, "start_b");
    else cfg.start_b.equilibrium = true;

    // ranges
    if (cfg.beta && !(*cfg.beta > 0.0 && *cfg.beta < 1.0)) errors.emplace_back("beta out of range (0,1)");
    if (cfg.tol <= 0.0) errors.emplace_back("tol must be positive");
    if (cfg.max_depth < 1) errors.emplace_back("max_depth must be >= 1");
    if (cfg.replications < 1) errors.emplace_back("replications must be >= 1");
    if (cfg.horizon < 1) errors.emplace_back("horizon must be >= 1");
    if (cfg.samples < 0) errors.emplace_back("samples must be >= 0");
    if (cfg.n_max < 0) errors.emplace_back("n_max must be >= 0");
    if (cfg.coupling != "independent" && cfg.coupling != "shared") {
        errors.emplace_back("coupling must be \"independent\" or \"shared\"");
    }
    if (cfg.gap_tolerance && !(*cfg.gap_tolerance > 0.0)) errors.emplace_back("gap_tolerance must be positive");
    for (auto n : cfg.n_grid) {
        if (n < 1) {
            errors.emplace_back("n_grid entries must be >= 1");
            break;
        }
        if (cfg.steps && n > *cfg.steps) {
            errors.emplace_back("n_grid entries must not exceed steps");
            break;
        }
    }

    // required keys per task
    const bool needs_window = cfg.task == "verify" || cfg.task == "invariant";
    if (needs_window && !cfg.window) errors.push_back("missing parameter 'window' (required for task " + cfg.task + ")");
    const bool needs_steps = cfg.task == "simulate" || cfg.task == "slln" || cfg.task == "wlln" ||
                             cfg.task == "tail" || cfg.task == "couple";
    if (needs_steps && !cfg.steps) {
        errors.push_back("missing parameter 'steps' (required for task " + cfg.task + ")");
    } else if (needs_steps && *cfg.steps <= 0) {
        errors.emplace_back(cfg.task == "slln" ? "empty n_grid: steps must be positive" : "steps must be positive");
    }
    if (cfg.beta.has_value() != cfg.nu.has_value()) errors.emplace_back("beta and nu must be given together");

    if (model) {
        const std::size_t d = model->family.state_count();
        if (cfg.V && cfg.V->size() != d) errors.emplace_back("V length differs from the state count");
        if (cfg.nu) {
            if (cfg.nu->size() != d) {
                errors.emplace_back("nu length differs from the state count");
            } else {
                double total = 0.0;
                bool negative = false;
                for (double v : *cfg.nu) {
                    total += v;
                    negative = negative || v < 0.0;
                }
                if (negative || std::abs(total - 1.0) > 1e-12) errors.emplace_back("nu must be a probability vector");
            }
        }
        if (cfg.g.kind == GSpec::Kind::Table && cfg.g.table.size() != d) {
            errors.emplace_back("g table length differs from the state count");
        }
        for (const auto* s : {&cfg.start, &cfg.start_b}) {
            if (!s->equilibrium && !s->label.empty()) {
                try {
                    (void)model->family.index_of(s->label);
                } catch (const std::exception&) {
                    errors.push_back("unknown start state '" + s->label + "'");
                }
            }
        }
        if (!cfg.V || cfg.V->size() == d) {
            try {
                resolve_drift(cfg, *model).validate();
            } catch (const std::invalid_argument& e) {
                std::string msg = e.what();
                std::size_t pos = 0;
                while (pos <= msg.size()) {
                    const auto next = msg.find("; ", pos);
                    errors.push_back(msg.substr(pos, next - pos));
                    if (next == std::string::npos) break;
                    pos = next + 2;
                }
            }
        }
    }

    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

std::string to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.model_inline.empty()) j["model"] = cfg.model_name;
    else j["model"] = json::parse(cfg.model_inline);
    j["task"] = cfg.task;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["output"] = cfg.output;
    json p = json::object();
    if (cfg.window) p["window"] = {cfg.window->first, cfg.window->last};
    if (cfg.V) p["V"] = *cfg.V;
    if (cfg.gamma) p["gamma"] = *cfg.gamma;
    if (cfg.C) p["C"] = *cfg.C;
    if (cfg.R) p["R"] = *cfg.R;
    if (cfg.beta) p["beta"] = *cfg.beta;
    if (cfg.nu) p["nu"] = *cfg.nu;
    if (cfg.steps) p["steps"] = *cfg.steps;
    p["replications"] = cfg.replications;
    p["n_grid"] = cfg.n_grid;
    switch (cfg.g.kind) {
        case GSpec::Kind::Identity: p["g"] = "identity"; break;
        case GSpec::Kind::Constant: p["g"] = {{"constant", cfg.g.constant}}; break;
        case GSpec::Kind::Table: p["g"] = cfg.g.table; break;
    }
    p["start"] = start_json(cfg.start);
    p["start_b"] = start_json(cfg.start_b);
    p["start_time"] = cfg.start_time;
    p["tol"] = cfg.tol;
    p["max_depth"] = cfg.max_depth;
    p["horizon"] = cfg.horizon;
    p["samples"] = cfg.samples;
    p["n_max"] = cfg.n_max;
    p["coupling"] = cfg.coupling;
    if (cfg.gap_tolerance) p["gap_tolerance"] = *cfg.gap_tolerance;
    j["parameters"] = p;
    return j.dump(2) + "\n";
}

}  // namespace tilln::cli
