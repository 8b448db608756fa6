#include "tilln/cli/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tilln/conditions.hpp"
#include "tilln/hash.hpp"
#include "tilln/invariant.hpp"
#include "tilln/lln.hpp"
#include "tilln/splitting.hpp"

namespace tilln::cli {

namespace {

using nlohmann::json;

// Thrown by a task whose certificate or drift check fails.
class CertificateFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A task-level statistical check that failed; the task still fills the bundle.
struct Outcome {
    bool ok = true;
    std::vector<std::string> failures;
    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            failures.push_back(what);
        }
    }
};

json to_json(const TimeWindow& w) { return json::array({w.first, w.last}); }

json to_json(const ProbMeasure& m) {
    return json(std::vector<double>(m.weights().begin(), m.weights().end()));
}

Observable make_g(const ExperimentConfig& cfg, const FiniteKernelFamily& fam) {
    switch (cfg.g.kind) {
        case GSpec::Kind::Constant: return Observable::constant(cfg.g.constant);
        case GSpec::Kind::Table: return Observable::table(cfg.g.table);
        case GSpec::Kind::Identity: break;
    }
    double bound = 0.0;
    for (std::size_t i = 0; i < fam.state_count(); ++i) bound = std::max(bound, std::abs(fam.state_value(i)));
    return Observable::identity(bound);
}

std::size_t start_index(const StartSpec& s, const FiniteKernelFamily& fam) {
    if (s.equilibrium) throw std::invalid_argument("a point start is required here");
    return s.label.empty() ? 0 : fam.index_of(s.label);
}

ChainStart make_start(const StartSpec& s, const ExperimentConfig& cfg, const FiniteKernelFamily& fam,
                      TimeIndex at) {
    if (!s.equilibrium) return start_index(s, fam);
    return solve_backward(fam, at, cfg.tol, cfg.max_depth).mu;
}

json drift_json(const DriftReport& r, const DriftSpec& d, const TimeWindow& w) {
    return {{"ok", r.ok},       {"worst_slack", r.worst_slack}, {"worst_time", r.worst_time},
            {"worst_state", r.worst_state}, {"gamma", d.gamma}, {"C", d.C},
            {"R", d.R},         {"window", to_json(w)}};
}

json doeblin_json(const DoeblinCertificate& c, const DoeblinReport& r) {
    return {{"ok", r.ok},
            {"beta", c.beta},
            {"nu", to_json(c.nu)},
            {"R", c.R},
            {"window", to_json(c.window)},
            {"worst_slack", r.worst_slack},
            {"worst_time", r.worst_time},
            {"worst_state", r.worst_state},
            {"worst_target", r.worst_target}};
}

// Drift check plus a Doeblin certificate (given or found) on `window`, then
// the verified split model. Throws CertificateFailure with the reports
// already recorded in `summary`.
SplitModel certified_model(const ExperimentConfig& cfg, const Model& model, const DriftSpec& drift,
                           const TimeWindow& window, json& summary) {
    const auto& fam = model.family;
    const auto dr = check_drift(fam, drift, window);
    summary["drift"] = drift_json(dr, drift, window);
    if (!dr.ok) throw CertificateFailure("drift condition fails on the window");

    DoeblinCertificate cert;
    if (cfg.beta) {
        cert.beta = *cfg.beta;
        cert.nu = ProbMeasure(*cfg.nu);
        cert.R = drift.R;
        cert.window = window;
    } else {
        const auto found = find_doeblin_certificate(fam, drift.R, drift.V, window);
        if (!found) {
            summary["certificate"] = {{"ok", false}, {"found", false}, {"window", to_json(window)}};
            throw CertificateFailure("no Doeblin certificate on C(R) over the window");
        }
        cert = *found;
    }
    const auto rep = verify_doeblin(fam, cert, drift.V);
    summary["certificate"] = doeblin_json(cert, rep);
    summary["certificate"]["found"] = !cfg.beta.has_value();
    if (!rep.ok) throw CertificateFailure("Doeblin minorization fails on the window");
    return SplitModel(fam, std::move(cert), drift);
}

TimeWindow run_window(const ExperimentConfig& cfg, std::int64_t steps) {
    if (cfg.window) return *cfg.window;
    return {cfg.start_time + 1, cfg.start_time + std::max<std::int64_t>(steps, 1)};
}

// ---------------------------------------------------------------------------

Outcome task_verify(const ExperimentConfig& cfg, const Model& model, ReportBundle& b) {
    Outcome out;
    const auto drift = resolve_drift(cfg, model);
    const auto& fam = model.family;
    const auto window = *cfg.window;
    try {
        const auto split = certified_model(cfg, model, drift, window, b.summary);
        const auto contraction = contraction_from_doeblin(split.certificate());
        b.summary["contraction"] = {{"n0", contraction.n0}, {"delta", contraction.delta}, {"R", contraction.R}};
        if (fam.entry_lower_bounds()) {
            const auto analytic = verify_doeblin_analytic(fam, split.certificate(), drift.V);
            b.summary["certificate"]["holds_for_all_times"] = analytic.ok;
        }
    } catch (const CertificateFailure& e) {
        b.summary["failure"] = e.what();
        out.ok = false;
    }
    const auto pairs = dobrushin_pair_bound(fam, 1, 2.0 * drift.R, drift.V, window);
    b.summary["dobrushin"] = {{"n0", 1},
                              {"R", 2.0 * drift.R},
                              {"max_tv", pairs.max_tv},
                              {"implied_delta", pairs.implied_delta},
                              {"worst_time", pairs.worst_time},
                              {"worst_x", fam.label(pairs.worst_x)},
                              {"worst_y", fam.label(pairs.worst_y)}};
    if (!out.ok) throw CertificateFailure(b.summary["failure"].get<std::string>());
    return out;
}

Outcome task_invariant(const ExperimentConfig& cfg, const Model& model, ReportBundle& b) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto window = *cfg.window;
    const auto family = solve_family(fam, window, cfg.tol, cfg.max_depth);
    const auto inv = check_invariance(fam, family, consecutive_pairs(family));
    const auto vm = v_moment(family, drift.V);
    b.tables.emplace("invariant.csv", invariant_table(family, fam));
    b.summary["invariant"] = {{"window", to_json(window)},
                              {"tol", cfg.tol},
                              {"max_depth_used", family.depth_used()},
                              {"max_residual", family.residual()},
                              {"invariance_max_tv", inv.max_tv_violation},
                              {"v_moment_sup", vm.sup}};
    out.require(inv.max_tv_violation <= 1e-10, "invariance violation above 1e-10");

    std::vector<TimeIndex> times;
    const std::int64_t count = std::min<std::int64_t>(10, window.length());
    for (std::int64_t i = 0; i < count; ++i) {
        times.push_back(window.first + (count > 1 ? i * (window.length() - 1) / (count - 1) : 0));
    }
    try {
        const auto fit = fit_ergodic_rate(fam, family, drift.V, 1, 30, times);
        b.summary["ergodicity"] = {{"alpha", fit.alpha},
                                   {"M_tilde", fit.M_tilde},
                                   {"M_weighted", fit.M_weighted},
                                   {"residual_norm", fit.residual_norm},
                                   {"slope_stderr", fit.slope_stderr},
                                   {"points", fit.points}};
    } catch (const std::exception& e) {
        b.summary["ergodicity"] = {{"error", e.what()}};
    }
    if (window.contains(0)) {
        const auto g = make_g(cfg, fam);
        const auto grid = cfg.n_grid.empty() ? default_n_grid(window.last + 1) : cfg.n_grid;
        const auto ces = cesaro_invariant_mean(family, g.tabulate(fam), grid);
        CsvTable t({"n", "cesaro"});
        for (std::size_t i = 0; i < grid.size(); ++i) t.row({CsvTable::cell(grid[i]), CsvTable::cell(ces[i])});
        b.tables.emplace("cesaro.csv", std::move(t));
        b.summary["invariant"]["cesaro_last"] = ces.back();
    }
    return out;
}

Outcome task_simulate(const ExperimentConfig& cfg, const Model& model, ReportBundle& b, unsigned workers) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto steps = *cfg.steps;
    const auto split = certified_model(cfg, model, drift, run_window(cfg, steps), b.summary);
    const auto start = make_start(cfg.start, cfg, fam, cfg.start_time);
    const auto run = simulate_split_chain(split, start, cfg.start_time, steps, *cfg.seed);
    b.tables.emplace("trajectory.csv", trajectory_table(run.trajectory, fam));
    b.tables.emplace("regenerations.csv", regeneration_table(run.log));

    const auto bells = bell_statistics(run.trajectory, split);
    b.summary["bells"] = {{"visits", bells.visits},   {"regenerations", bells.regenerations},
                          {"off_set_bells", bells.off_set_bells}, {"rate", bells.rate},
                          {"sigma", bells.sigma},     {"z", bells.z}};
    out.require(bells.off_set_bells == 0, "bell rang outside C(R)");
    out.require(std::abs(bells.z) <= 3.0, "bell rate more than 3 sigma from beta");

    std::vector<double> lengths(run.log.lengths().begin(), run.log.lengths().end());
    json cycles = {{"count", lengths.size()}};
    if (!lengths.empty()) {
        const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
        double var = 0.0;
        for (double l : lengths) var += (l - mean) * (l - mean);
        cycles["length_mean"] = mean;
        cycles["length_variance"] = lengths.size() > 1 ? var / static_cast<double>(lengths.size() - 1) : 0.0;
    }
    if (run.log.cycle_count() >= kMinIndependenceCycles) {
        const auto ind = cycle_independence_check(run.log, run.trajectory, make_g(cfg, fam).tabulate(fam));
        cycles["lag1_correlation"] = ind.correlation;
        cycles["detrended_correlation"] = ind.detrended_correlation;
        cycles["threshold"] = ind.threshold;
        cycles["p_value"] = ind.p_value;
        out.require(!ind.flagged, "lag-1 cycle-sum correlation above 3/sqrt(cycles)");
    }
    b.summary["cycles"] = cycles;

    if (cfg.samples > 0) {
        const auto marginal_seed = stream_seed(*cfg.seed, 1);
        const auto rep = marginal_consistency(split, start, cfg.start_time, cfg.horizon,
                                              static_cast<std::size_t>(cfg.samples), marginal_seed, workers);
        CsvTable t({"t", "tv_gap"});
        for (std::size_t i = 0; i < rep.gaps.size(); ++i) {
            t.row({CsvTable::cell(static_cast<std::int64_t>(i + 1)), CsvTable::cell(rep.gaps[i])});
        }
        b.tables.emplace("marginals.csv", std::move(t));
        b.summary["marginals"] = {{"samples", rep.samples},
                                  {"horizon", cfg.horizon},
                                  {"max_gap", rep.max_gap},
                                  {"tolerance", rep.tolerance}};
        b.summary["provenance_seeds"]["marginals"] = marginal_seed;
        out.require(rep.max_gap < rep.tolerance, "marginal TV gap above tolerance");
    }
    return out;
}

Outcome task_slln(const ExperimentConfig& cfg, const Model& model, ReportBundle& b, unsigned workers) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto steps = *cfg.steps;
    const auto grid = cfg.n_grid.empty() ? default_n_grid(steps) : cfg.n_grid;
    const std::int64_t horizon = *std::max_element(grid.begin(), grid.end());
    ExperimentConfig at_zero = cfg;
    at_zero.start_time = 0;
    const auto split = certified_model(cfg, model, drift, run_window(at_zero, horizon), b.summary);
    const auto family = solve_family_forward(fam, TimeWindow{0, horizon - 1}, cfg.tol, cfg.max_depth);
    const auto g = make_g(cfg, fam);
    ChainStart start = cfg.start.equilibrium ? ChainStart{family.mu(0)} : ChainStart{start_index(cfg.start, fam)};
    const auto report = slln_run(split, family, g, start, grid, *cfg.seed,
                                 static_cast<std::size_t>(cfg.replications), workers);
    b.tables.emplace("gaps.csv", gap_table(report));
    b.tables.emplace("cycles.csv", cycle_table(report));
    const auto& c = report.cycle_stats;
    b.summary["slln"] = {{"n", report.n_grid.back()},
                         {"max_abs_gap", report.max_abs_gap.back()},
                         {"cesaro", report.cesaro.back()},
                         {"regeneration_rate", report.regeneration_rate.back()},
                         {"replications", report.replications}};
    b.summary["cycles"] = {{"count", c.cycles},
                           {"length_mean", c.length_mean},
                           {"length_variance", c.length_variance},
                           {"length_second_moment", c.length_second_moment},
                           {"centred_sum_mean", c.centred_sum_mean},
                           {"centred_sum_variance", c.centred_sum_variance}};
    if (!report.kolmogorov_partial_sums.empty()) {
        b.summary["cycles"]["kolmogorov_partial_sum"] = report.kolmogorov_partial_sums.back();
    }
    if (cfg.gap_tolerance) {
        b.summary["slln"]["gap_tolerance"] = *cfg.gap_tolerance;
        out.require(report.max_abs_gap.back() < *cfg.gap_tolerance, "max |gap| at the last grid point above tolerance");
    }
    return out;
}

Outcome task_wlln(const ExperimentConfig& cfg, const Model& model, ReportBundle& b) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto steps = *cfg.steps;
    const TimeWindow range{cfg.start_time, cfg.start_time + steps - 1};
    const auto family = solve_family(fam, range, cfg.tol, cfg.max_depth);
    const auto g = make_g(cfg, fam);

    std::optional<ErgodicityFit> erg;
    std::vector<TimeIndex> times;
    const std::int64_t count = std::min<std::int64_t>(10, range.length());
    for (std::int64_t i = 0; i < count; ++i) {
        times.push_back(range.first + (count > 1 ? i * (range.length() - 1) / (count - 1) : 0));
    }
    try {
        erg = fit_ergodic_rate(fam, family, drift.V, 1, 30, times);
    } catch (const std::exception&) {
    }

    const auto table = wlln_covariance_exact(fam, family, g, range, erg ? &*erg : nullptr);
    std::vector<std::int64_t> grid = cfg.n_grid;
    if (grid.empty()) {
        grid.resize(static_cast<std::size_t>(steps));
        std::iota(grid.begin(), grid.end(), 1);
    }
    const auto curve = wlln_variance_curve(table, g.bound(), grid);

    CsvTable env({"m", "envelope", "fitted"});
    for (std::size_t m = 0; m < table.lag_envelope.size(); ++m) {
        env.row({CsvTable::cell(m), CsvTable::cell(table.lag_envelope[m]),
                 CsvTable::cell(m == 0 ? table.lag_envelope[0]
                                       : table.C_fit * std::pow(table.alpha_fit, static_cast<double>(m)))});
    }
    CsvTable var({"n", "var_over_n", "bound"});
    for (std::size_t i = 0; i < curve.n.size(); ++i) {
        var.row({CsvTable::cell(curve.n[i]), CsvTable::cell(curve.var_over_n[i]), CsvTable::cell(curve.bound)});
    }
    b.tables.emplace("covariance_envelope.csv", std::move(env));
    b.tables.emplace("variance.csv", std::move(var));
    b.summary["wlln"] = {{"range", to_json(range)},
                         {"alpha_fit", table.alpha_fit},
                         {"C_fit", table.C_fit},
                         {"slope_stderr", table.slope_stderr},
                         {"alpha_consistent", table.alpha_consistent},
                         {"sup_var_over_n", curve.sup},
                         {"bound", curve.bound}};
    if (erg) b.summary["wlln"]["ergodicity_alpha"] = erg->alpha;
    out.require(curve.sup <= curve.bound, "Var(S_n)/n exceeds the closed-form bound");
    return out;
}

Outcome task_tail(const ExperimentConfig& cfg, const Model& model, ReportBundle& b) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto steps = *cfg.steps;
    const auto split = certified_model(cfg, model, drift, run_window(cfg, steps), b.summary);

    std::vector<TailSite> sites;
    for (TimeIndex s = cfg.start_time; s < cfg.start_time + 10; ++s) {
        for (std::size_t x = 0; x < fam.state_count(); ++x) {
            if (std::isfinite(drift.V[static_cast<Eigen::Index>(x)])) sites.push_back({s, x});
        }
    }
    TailBoundReport bound;
    try {
        bound = check_drift_tail_bound(fam, drift, sites, cfg.n_max);
    } catch (const std::invalid_argument& e) {
        throw CertificateFailure(e.what());
    }
    CsvTable taboo({"s", "state", "n", "survival", "bound"});
    const auto small = split.small();
    for (const auto& site : sites) {
        const auto surv = taboo_tail_exact(fam, small, site.s, site.x, cfg.n_max);
        double bnd = drift.V[static_cast<Eigen::Index>(site.x)] / drift.R;
        for (std::size_t n = 0; n < surv.size(); ++n, bnd *= bound.rho) {
            taboo.row({CsvTable::cell(site.s), fam.label(site.x), CsvTable::cell(n), CsvTable::cell(surv[n]),
                       CsvTable::cell(bnd)});
        }
    }
    b.tables.emplace("taboo.csv", std::move(taboo));
    b.summary["tail_bound"] = {{"ok", bound.ok},
                               {"rho", bound.rho},
                               {"worst_ratio", bound.worst_ratio},
                               {"sites_checked", bound.sites_checked},
                               {"small_set_sites", bound.small_set_sites},
                               {"small_set_sites_hold_k1", bound.small_set_sites_hold_k1}};
    out.require(bound.ok, "taboo survival exceeds (V(x)/R) rho^n");

    const auto start = make_start(cfg.start, cfg, fam, cfg.start_time);
    const auto run = simulate_split_chain(split, start, cfg.start_time, steps, *cfg.seed);
    const auto& lengths = run.log.lengths();
    try {
        const auto fit = tail_fit(lengths);
        b.tables.emplace("tail.csv", tail_table(fit));
        b.summary["tail_fit"] = {{"K", fit.K},
                                 {"zeta", fit.zeta},
                                 {"theta", fit.theta},
                                 {"slope_stderr", fit.slope_stderr},
                                 {"residual_norm", fit.residual_norm},
                                 {"fit_last", fit.fit_last},
                                 {"samples", fit.samples}};
    } catch (const FitFailure& e) {
        b.summary["tail_fit"] = {{"error", e.what()}};
        out.require(false, "tail fit failed");
    } catch (const std::invalid_argument& e) {
        b.summary["tail_fit"] = {{"error", e.what()}};
        out.require(false, "too few return times for a tail fit");
    }
    return out;
}

Outcome task_couple(const ExperimentConfig& cfg, const Model& model, ReportBundle& b, unsigned workers) {
    Outcome out;
    const auto& fam = model.family;
    const auto drift = resolve_drift(cfg, model);
    const auto steps = *cfg.steps;
    ExperimentConfig at_zero = cfg;
    at_zero.start_time = 0;
    const auto split = certified_model(cfg, model, drift, run_window(at_zero, steps), b.summary);
    const auto a = start_index(cfg.start, fam);
    const auto start_b = make_start(cfg.start_b, cfg, fam, 0);
    const auto mode = cfg.coupling == "shared" ? CouplingMode::SharedStream : CouplingMode::IndependentBells;
    const auto reps = static_cast<std::size_t>(cfg.replications);
    const auto exp = coupling_experiment(split, a, start_b, steps, *cfg.seed, reps, mode, workers);

    CsvTable t({"replication", "coupling_time"});
    for (std::size_t r = 0; r < reps; ++r) t.row({CsvTable::cell(r), CsvTable::cell(exp.coupling_times[r])});
    b.tables.emplace("coupling.csv", std::move(t));
    b.summary["coupling"] = {{"mode", cfg.coupling},
                             {"replications", reps},
                             {"coalesced", exp.coalesced},
                             {"paths_equal", exp.paths_equal},
                             {"mean", exp.mean},
                             {"stddev", exp.stddev}};
    out.require(exp.coalesced == reps, "some replications did not coalesce");
    out.require(exp.paths_equal == exp.coalesced, "paths differ after coalescence");

    const auto& small = split.small();
    const bool whole_space = std::all_of(small.begin(), small.end(), [](bool v) { return v; });
    if (whole_space && mode == CouplingMode::IndependentBells && exp.coalesced > 1) {
        // joint bell each step with probability beta^2: T is dominated by Geometric(beta^2)
        const double beta = split.bell_probability();
        const double limit = 1.0 / (beta * beta) + 3.0 * exp.stddev / std::sqrt(static_cast<double>(exp.coalesced));
        b.summary["coupling"]["geometric_mean_limit"] = limit;
        out.require(exp.mean <= limit, "mean coupling time above the Geometric(beta^2) limit");
    }
    std::vector<std::int64_t> times;
    for (auto T : exp.coupling_times) {
        if (T >= 0) times.push_back(T);
    }
    if (times.size() >= kMinTailSamples) {
        try {
            const auto fit = tail_fit(times);
            b.summary["coupling"]["tail_zeta"] = fit.zeta;
            b.summary["coupling"]["tail_K"] = fit.K;
        } catch (const std::exception& e) {
            b.summary["coupling"]["tail_error"] = e.what();
        }
    }
    return out;
}

}  // namespace

ReportBundle dispatch(const ExperimentConfig& cfg, unsigned workers) {
    ReportBundle b;
    b.config = to_json(cfg);
    b.summary["task"] = cfg.task;
    b.summary["model"] = cfg.model_name;
    json provenance = {{"config_sha256", sha256_hex(b.config)}, {"version", kVersion}};
    if (cfg.seed) provenance["seed"] = *cfg.seed;

    try {
        const auto model = resolve_model(cfg);
        Outcome out;
        if (cfg.task == "verify") out = task_verify(cfg, model, b);
        else if (cfg.task == "invariant") out = task_invariant(cfg, model, b);
        else if (cfg.task == "simulate") out = task_simulate(cfg, model, b, workers);
        else if (cfg.task == "slln") out = task_slln(cfg, model, b, workers);
        else if (cfg.task == "wlln") out = task_wlln(cfg, model, b);
        else if (cfg.task == "tail") out = task_tail(cfg, model, b);
        else if (cfg.task == "couple") out = task_couple(cfg, model, b, workers);
        else throw ConfigError({"unknown task '" + cfg.task + "'"});
        b.summary["ok"] = out.ok;
        if (!out.ok) {
            b.summary["failures"] = out.failures;
            b.exit_code = kStatisticalFailure;
        }
    } catch (const CertificateFailure& e) {
        b.summary["ok"] = false;
        b.summary["stage"] = "verify";
        b.summary["error"] = e.what();
        b.exit_code = kCertificateFailure;
    } catch (const ConfigError& e) {
        b.summary["ok"] = false;
        b.summary["error"] = e.what();
        b.exit_code = kConfigError;
    } catch (const NonConvergence& e) {
        b.summary["ok"] = false;
        b.summary["error"] = e.what();
        b.exit_code = kStatisticalFailure;
    } catch (const std::exception& e) {
        b.summary["ok"] = false;
        b.summary["error"] = cfg.task + ": " + e.what();
        b.exit_code = kError;
    }
    if (b.summary.contains("provenance_seeds")) {
        provenance["derived_seeds"] = b.summary["provenance_seeds"];
        b.summary.erase("provenance_seeds");
    }
    b.summary["provenance"] = provenance;
    return b;
}

void emit(const ReportBundle& bundle, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (dir.empty()) throw std::invalid_argument("no output directory given");
    const fs::path target = fs::absolute(dir).lexically_normal();
    const fs::path parent = target.parent_path();
    fs::create_directories(parent);
    const fs::path tmp = parent / (target.filename().string() + ".partial");
    fs::remove_all(tmp);
    fs::create_directory(tmp);

    std::map<std::string, std::string> files;
    if (!bundle.summary.empty()) files["summary.json"] = bundle.summary.dump(2) + "\n";
    if (!bundle.config.empty()) files["config.json"] = bundle.config;
    for (const auto& [name, table] : bundle.tables) files[name] = table.str();

    json manifest = {{"files", json::array()}};
    for (const auto& [name, content] : files) {
        std::ofstream f(tmp / name, std::ios::binary);
        f << content;
        if (!f) throw std::runtime_error("cannot write " + (tmp / name).string());
        manifest["files"].push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    {
        std::ofstream f(tmp / "manifest.json", std::ios::binary);
        f << manifest.dump(2) << "\n";
        if (!f) throw std::runtime_error("cannot write manifest");
    }
    fs::remove_all(target);
    fs::rename(tmp, target);
}

}  // namespace tilln::cli
