#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tilln/kernel.hpp"
#include "tilln/models.hpp"

namespace tilln::cli {

inline const std::vector<std::string> kTasks{"verify", "invariant", "simulate", "slln",
                                             "wlln",   "tail",      "couple"};

/// Every validation problem found in a config, not just the first.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Observable spec: identity (numeric labels), a constant, or a table over states.
struct GSpec {
    enum class Kind { Identity, Constant, Table };
    Kind kind = Kind::Identity;
    double constant = 0.0;
    std::vector<double> table;
    friend bool operator==(const GSpec&, const GSpec&) = default;
};

/// "equilibrium" draws X_0 from mu at the start time; otherwise a state label.
struct StartSpec {
    bool equilibrium = false;
    std::string label;
    friend bool operator==(const StartSpec&, const StartSpec&) = default;
};

struct ExperimentConfig {
    std::string model_name;
    /// Compact JSON of an inline model definition; empty for built-ins.
    std::string model_inline;
    std::string task;
    std::optional<std::uint64_t> seed;
    std::string output;

    std::optional<TimeWindow> window;
    std::optional<std::vector<double>> V;
    std::optional<double> gamma;
    std::optional<double> C;
    std::optional<double> R;
    std::optional<double> beta;
    std::optional<std::vector<double>> nu;

    std::optional<std::int64_t> steps;
    std::int64_t replications = 1;
    std::vector<std::int64_t> n_grid;
    GSpec g;
    StartSpec start;
    StartSpec start_b;
    TimeIndex start_time = 0;

    double tol = 1e-12;
    int max_depth = 200;
    std::int64_t horizon = 10;
    std::int64_t samples = 0;
    int n_max = 20;
    std::string coupling = "independent";
    std::optional<double> gap_tolerance;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses and validates a JSON config. Throws ConfigError listing every
/// problem: unknown model or task, missing keys, out-of-range values.
ExperimentConfig parse_config(std::string_view text);

/// Normalized JSON (defaults filled in); parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& cfg);

/// The model named or defined by the config.
Model resolve_model(const ExperimentConfig& cfg);

/// Model drift with the config's V, gamma, C, R overrides applied.
DriftSpec resolve_drift(const ExperimentConfig& cfg, const Model& model);

bool is_stochastic(std::string_view task);

}  // namespace tilln::cli
