#include "tilln/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include "json.hpp"

namespace tilln {

namespace {

using nlohmann::json;

// Step keyed by n is the transition into time n + 1, so the coefficients
// a(n+1), b(n+1) belong to key n.
Model two_state_sinusoid() {
    auto gen = [](TimeIndex key) {
        const double t = static_cast<double>(key + 1);
        const double a = 1.0 / 3.0 + std::sin(t) / 6.0;
        const double b = 1.0 / 4.0 + std::cos(t) / 8.0;
        Eigen::MatrixXd P(2, 2);
        P << 1.0 - a, a, b, 1.0 - b;
        return P;
    };
    FiniteKernelFamily fam({"1", "2"}, gen, "builtin:two_state_sinusoid:v1");
    // a in [1/6, 1/2], b in [1/8, 3/8] for every n.
    Eigen::MatrixXd lower(2, 2);
    lower << 0.5, 1.0 / 6.0, 1.0 / 8.0, 5.0 / 8.0;
    fam.set_entry_lower_bounds(lower);
    DriftSpec drift;
    drift.V = Eigen::VectorXd::Constant(2, 2.0);
    drift.gamma = 0.5;
    drift.C = 1.0;
    drift.R = 5.0;
    return {"two_state_sinusoid", std::move(fam), drift};
}

Model three_state_cycle() {
    auto gen = [](TimeIndex) {
        Eigen::MatrixXd P(3, 3);
        P << 0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0, 0.5;
        return P;
    };
    FiniteKernelFamily fam({"1", "2", "3"}, gen, "builtin:three_state_cycle:v1");
    Eigen::MatrixXd lower(3, 3);
    lower << 0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0, 0.5;
    fam.set_entry_lower_bounds(lower);
    DriftSpec drift;
    drift.V = Eigen::VectorXd::Constant(3, 1.0);
    drift.gamma = 0.5;
    drift.C = 1.0;
    drift.R = 5.0;
    return {"three_state_cycle", std::move(fam), drift};
}

Model four_state_staircase() {
    auto gen = [](TimeIndex key) {
        const double c = 0.05 * std::sin(static_cast<double>(key));
        Eigen::MatrixXd P(4, 4);
        P << 0.8, 0.17, 0.03, 0.0,
             0.6, 0.32, 0.08, 0.0,
             0.3, 0.35 - c, 0.25 + c, 0.1,
             0.2 + c, 0.2, 0.3 - c, 0.3;
        return P;
    };
    FiniteKernelFamily fam({"1", "2", "3", "4"}, gen, "builtin:four_state_staircase:v1");
    DriftSpec drift;
    drift.V.resize(4);
    drift.V << 1.0, 2.0, 8.0, 16.0;
    drift.gamma = 0.5;
    drift.C = 1.0;
    drift.R = 6.0;
    return {"four_state_staircase", std::move(fam), drift};
}

// --- config-defined models -------------------------------------------------

struct Wave {
    enum class Kind { Constant, Sin, Cos } kind = Kind::Constant;
    double offset = 0.0;
    double amplitude = 0.0;
    double frequency = 1.0;
    double phase = 0.0;
    double shift = 0.0;

    double at(TimeIndex n) const {
        const double arg = frequency * (static_cast<double>(n) + shift) + phase;
        switch (kind) {
            case Kind::Sin: return offset + amplitude * std::sin(arg);
            case Kind::Cos: return offset + amplitude * std::cos(arg);
            case Kind::Constant: break;
        }
        return offset;
    }
};

struct Rest {};
using Entry = std::variant<double, Wave, Rest>;

Wave parse_wave(const json& j) {
    Wave w;
    const auto kind = j.at("wave").get<std::string>();
    if (kind == "constant") w.kind = Wave::Kind::Constant;
    else if (kind == "sin") w.kind = Wave::Kind::Sin;
    else if (kind == "cos") w.kind = Wave::Kind::Cos;
    else throw std::invalid_argument("unknown waveform '" + kind + "'");
    w.offset = j.value("offset", 0.0);
    w.amplitude = j.value("amplitude", 0.0);
    w.frequency = j.value("frequency", 1.0);
    w.phase = j.value("phase", 0.0);
    w.shift = j.value("shift", 0.0);
    return w;
}

Entry parse_entry(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string() && j.get<std::string>() == "rest") return Rest{};
    if (j.is_object()) return parse_wave(j);
    throw std::invalid_argument("matrix entry must be a number, \"rest\" or a waveform");
}

DriftSpec parse_drift(const json& j, std::size_t states) {
    DriftSpec d;
    const auto& v = j.at("V");
    if (v.is_number()) {
        d.V = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(states), v.get<double>());
    } else {
        if (v.size() != states) throw std::invalid_argument("drift V length differs from the state count");
        d.V.resize(static_cast<Eigen::Index>(states));
        for (std::size_t i = 0; i < states; ++i) {
            d.V[static_cast<Eigen::Index>(i)] = v[i].is_string() && v[i].get<std::string>() == "inf"
                                                   ? std::numeric_limits<double>::infinity()
                                                   : v[i].get<double>();
        }
    }
    d.gamma = j.at("gamma").get<double>();
    d.C = j.at("C").get<double>();
    d.R = j.at("R").get<double>();
    d.allow_infinite = j.value("allow_infinite", false);
    return d;
}

}  // namespace

Model builtin_model(std::string_view name) {
    if (name == "two_state_sinusoid") return two_state_sinusoid();
    if (name == "three_state_cycle") return three_state_cycle();
    if (name == "four_state_staircase") return four_state_staircase();
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

std::vector<std::string> builtin_model_names() {
    return {"two_state_sinusoid", "three_state_cycle", "four_state_staircase"};
}

Model load_model(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("model definition is not valid JSON: ") + e.what());
    }
    try {
        const auto labels = j.at("states").get<std::vector<std::string>>();
        const std::size_t d = labels.size();
        if (d == 0) throw std::invalid_argument("model has no states");
        const std::string name = j.value("name", std::string("inline"));
        const std::string definition = "config:" + j.dump();

        std::optional<FiniteKernelFamily> fam;
        if (j.contains("rows")) {
            const auto& rows = j.at("rows");
            if (rows.size() != d) throw std::invalid_argument("row count differs from the state count");
            std::vector<std::vector<Entry>> entries(d);
            for (std::size_t i = 0; i < d; ++i) {
                if (rows[i].size() != d) throw std::invalid_argument("row length differs from the state count");
                int rests = 0;
                for (const auto& e : rows[i]) {
                    entries[i].push_back(parse_entry(e));
                    if (std::holds_alternative<Rest>(entries[i].back())) ++rests;
                }
                if (rests > 1) throw std::invalid_argument("at most one \"rest\" entry per row");
            }
            auto gen = [entries, d](TimeIndex n) {
                Eigen::MatrixXd P(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                for (std::size_t i = 0; i < d; ++i) {
                    double others = 0.0;
                    std::optional<std::size_t> rest;
                    for (std::size_t k = 0; k < d; ++k) {
                        const auto& e = entries[i][k];
                        double v = 0.0;
                        if (const auto* c = std::get_if<double>(&e)) v = *c;
                        else if (const auto* w = std::get_if<Wave>(&e)) v = w->at(n);
                        else rest = k;
                        P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
                        others += v;
                    }
                    if (rest) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*rest)) = 1.0 - others;
                }
                return P;
            };
            std::optional<TimeWindow> window;
            if (j.contains("window")) {
                const auto w = j.at("window").get<std::vector<TimeIndex>>();
                if (w.size() != 2) throw std::invalid_argument("window must be [first, last]");
                window = TimeWindow{w[0], w[1]};
            }
            fam.emplace(labels, gen, definition, window);
        } else if (j.contains("matrices")) {
            const auto w = j.at("window").get<std::vector<TimeIndex>>();
            if (w.size() != 2 || w[1] < w[0]) throw std::invalid_argument("window must be [first, last]");
            const auto& mats = j.at("matrices");
            if (mats.size() != static_cast<std::size_t>(w[1] - w[0] + 1)) {
                throw std::invalid_argument("matrix count differs from the window length");
            }
            std::vector<Eigen::MatrixXd> steps;
            for (const auto& m : mats) {
                if (m.size() != d) throw std::invalid_argument("matrix row count differs from the state count");
                Eigen::MatrixXd P(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                for (std::size_t i = 0; i < d; ++i) {
                    if (m[i].size() != d) throw std::invalid_argument("matrix row length differs from the state count");
                    for (std::size_t k = 0; k < d; ++k) {
                        P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = m[i][k].get<double>();
                    }
                }
                steps.push_back(std::move(P));
            }
            const TimeIndex first = w[0];
            auto gen = [steps, first](TimeIndex n) { return steps.at(static_cast<std::size_t>(n - first)); };
            fam.emplace(labels, gen, definition, TimeWindow{w[0], w[1]});
        } else {
            throw std::invalid_argument("model needs \"rows\" or \"matrices\"");
        }

        DriftSpec drift;
        if (j.contains("drift")) {
            drift = parse_drift(j.at("drift"), d);
        } else {
            drift.V = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
            drift.gamma = 0.5;
            drift.C = 1.0;
            drift.R = 5.0;
        }
        return {name, std::move(*fam), drift};
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed model definition: ") + e.what());
    }
}

}  // namespace tilln
