#include "tilln/lln.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "line_fit.hpp"
#include "tilln/parallel.hpp"

namespace tilln {

namespace {

template <class Mass>
std::size_t draw_index(std::size_t d, double u, Mass mass) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const double p = mass(j);
        if (p <= 0.0) continue;
        acc += p;
        last_positive = j;
        if (u <= acc) return j;
    }
    return last_positive;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

TailFit fit_survival(std::vector<double> survival, double floor, std::size_t samples) {
    std::vector<double> xs, ys;
    for (std::size_t n = 0; n < survival.size(); ++n) {
        if (survival[n] > floor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(survival[n]));
        }
    }
    if (xs.size() < 2) throw std::invalid_argument("tail fit needs at least two points above the floor");
    const auto line = detail::least_squares(xs, ys);
    if (!(line.slope < 0.0)) {
        throw FitFailure("survival does not decay over the fit range (slope " +
                         std::to_string(line.slope) + ")");
    }
    TailFit fit;
    fit.zeta = std::exp(line.slope);
    fit.theta = -line.slope;
    fit.slope_stderr = line.slope_stderr;
    fit.residual_norm = line.rms;
    fit.fit_first = static_cast<int>(xs.front());
    fit.fit_last = static_cast<int>(xs.back());
    fit.samples = samples;
    double log_k = line.intercept;
    for (std::size_t i = 0; i < xs.size(); ++i) log_k = std::max(log_k, ys[i] - line.slope * xs[i]);
    fit.K = std::exp(log_k);
    fit.empirical_survival = std::move(survival);
    return fit;
}

}  // namespace

std::vector<double> taboo_tail_exact(const FiniteKernelFamily& fam, const std::vector<bool>& in_set,
                                     TimeIndex s, std::size_t x, int n_max) {
    if (x >= fam.state_count()) throw std::out_of_range("start state not in the state list");
    if (in_set.size() != fam.state_count()) throw std::invalid_argument("set mask length differs from the state count");
    if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
    std::vector<double> out{1.0};
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(fam.state_count()));
    v[static_cast<Eigen::Index>(x)] = 1.0;
    for (int k = 1; k <= n_max; ++k) {
        v = v * fam.step(s + k - 1);
        for (std::size_t y = 0; y < in_set.size(); ++y) {
            if (in_set[y]) v[static_cast<Eigen::Index>(y)] = 0.0;
        }
        out.push_back(v.sum());
    }
    return out;
}

TailBoundReport check_drift_tail_bound(const FiniteKernelFamily& fam, const DriftSpec& drift,
                                       const std::vector<TailSite>& sites, int n_max) {
    drift.validate();
    if (sites.empty()) throw std::invalid_argument("no sites to check");
    TimeIndex lo = sites.front().s, hi = sites.front().s;
    for (const auto& site : sites) {
        lo = std::min(lo, site.s);
        hi = std::max(hi, site.s);
    }
    if (n_max >= 1) {
        const auto drift_report = check_drift(fam, drift, TimeWindow{lo + 1, hi + n_max});
        if (!drift_report.ok) {
            throw std::invalid_argument("drift condition not verified (slack " +
                                        std::to_string(drift_report.worst_slack) + " at time " +
                                        std::to_string(drift_report.worst_time) + ")");
        }
    }
    const auto small = small_set(drift.V, drift.R);
    TailBoundReport report;
    report.rho = drift.rho();
    report.ok = true;
    for (const auto& site : sites) {
        const double vx = drift.V[static_cast<Eigen::Index>(site.x)];
        const auto survival = taboo_tail_exact(fam, small, site.s, site.x, n_max);
        const bool inside = small[site.x];
        if (inside) ++report.small_set_sites;
        else ++report.sites_checked;
        double bound = vx / drift.R;
        for (int n = 0; n <= n_max; ++n, bound *= report.rho) {
            const bool holds = survival[static_cast<std::size_t>(n)] <= bound + 1e-12;
            if (inside) {
                // k >= 1 convention only; the lemma's own convention gives 0 here
                if (!holds) report.small_set_sites_hold_k1 = false;
                continue;
            }
            if (!holds) report.ok = false;
            const double ratio = bound > 0.0 ? survival[static_cast<std::size_t>(n)] / bound : 0.0;
            if (ratio > report.worst_ratio) {
                report.worst_ratio = ratio;
                report.worst_site = site;
                report.worst_n = n;
            }
        }
    }
    return report;
}

TailFit tail_fit(std::span<const std::int64_t> times) {
    if (times.size() < kMinTailSamples) {
        throw std::invalid_argument("tail fit needs at least " + std::to_string(kMinTailSamples) +
                                    " samples, got " + std::to_string(times.size()));
    }
    const std::int64_t longest = *std::max_element(times.begin(), times.end());
    if (longest < 0) throw std::invalid_argument("return times must be nonnegative");
    std::vector<std::size_t> counts(static_cast<std::size_t>(longest) + 1, 0);
    for (auto t : times) {
        if (t < 0) throw std::invalid_argument("return times must be nonnegative");
        ++counts[static_cast<std::size_t>(t)];
    }
    const double N = static_cast<double>(times.size());
    std::vector<double> survival(counts.size());
    std::size_t above = times.size();
    for (std::size_t n = 0; n < counts.size(); ++n) {
        above -= counts[n];
        survival[n] = static_cast<double>(above) / N;
    }
    return fit_survival(std::move(survival), 10.0 / N, times.size());
}

TailFit tail_fit_curve(std::span<const double> survival, double floor) {
    return fit_survival(std::vector<double>(survival.begin(), survival.end()), floor, 0);
}

CovarianceTable wlln_covariance_exact(const FiniteKernelFamily& fam, const InvariantFamily& family,
                                      const Observable& g, const TimeWindow& range,
                                      const ErgodicityFit* ergodicity) {
    if (range.empty()) throw std::invalid_argument("empty covariance range");
    if (!family.contains(range.first) || !family.contains(range.last)) {
        throw std::out_of_range("invariant family does not cover the covariance range");
    }
    const Eigen::VectorXd gv = g.tabulate(fam);
    const auto N = static_cast<Eigen::Index>(range.length());
    std::vector<Eigen::MatrixXd> steps;
    steps.reserve(static_cast<std::size_t>(N));
    for (Eigen::Index a = 0; a < N; ++a) steps.push_back(fam.step(range.first + a));
    Eigen::VectorXd mean(N);
    Eigen::MatrixXd weighted(gv.size(), N);  // mu_i(x) g(x)
    for (Eigen::Index a = 0; a < N; ++a) {
        const auto mu = family.column(range.first + a);
        mean[a] = mu.dot(gv);
        weighted.col(a) = mu.cwiseProduct(gv);
    }

    CovarianceTable table;
    table.first = range.first;
    table.cov.resize(N, N);
    for (Eigen::Index b = 0; b < N; ++b) {
        Eigen::VectorXd h = gv;  // P_{a,b} g, starting at a = b
        for (Eigen::Index a = b; a >= 0; --a) {
            const double c = weighted.col(a).dot(h) - mean[a] * mean[b];
            table.cov(a, b) = c;
            table.cov(b, a) = c;
            if (a > 0) h = steps[static_cast<std::size_t>(a - 1)] * h;
        }
    }

    table.lag_envelope.assign(static_cast<std::size_t>(N), 0.0);
    for (Eigen::Index a = 0; a < N; ++a) {
        for (Eigen::Index b = a; b < N; ++b) {
            auto& env = table.lag_envelope[static_cast<std::size_t>(b - a)];
            env = std::max(env, std::abs(table.cov(a, b)));
        }
    }
    // covariances are exact only up to the invariant family's residual
    const double g2 = g.bound() * g.bound();
    const double floor = std::max(1e-12 * table.lag_envelope[0], 10.0 * family.residual() * g2);
    std::vector<double> xs, ys;
    for (std::size_t m = 1; m < table.lag_envelope.size(); ++m) {
        if (table.lag_envelope[m] <= floor) break;
        xs.push_back(static_cast<double>(m));
        ys.push_back(std::log(table.lag_envelope[m]));
    }
    if (xs.size() >= 2) {
        const auto line = detail::least_squares(xs, ys);
        table.alpha_fit = std::exp(line.slope);
        table.slope_stderr = line.slope_stderr;
        double log_c = line.intercept;
        for (std::size_t i = 0; i < xs.size(); ++i) log_c = std::max(log_c, ys[i] - line.slope * xs[i]);
        table.C_fit = std::exp(log_c);
    } else {
        // covariances vanish beyond lag 1; C alpha^1 still majorizes lag 1
        table.alpha_fit = xs.empty() ? 0.0 : 0.5;
        table.C_fit = xs.empty() ? 0.0 : 2.0 * table.lag_envelope[1];
    }
    if (ergodicity && ergodicity->alpha > 0.0 && table.alpha_fit > 0.0) {
        const double err = 3.0 * std::hypot(table.slope_stderr, ergodicity->slope_stderr);
        table.alpha_consistent = std::abs(std::log(table.alpha_fit) - std::log(ergodicity->alpha)) <= err;
    }
    return table;
}

VarianceCurve wlln_variance_curve(const CovarianceTable& table, double g_bound,
                                  const std::vector<std::int64_t>& n_grid) {
    VarianceCurve curve;
    if (n_grid.empty()) return curve;
    const std::int64_t longest = *std::max_element(n_grid.begin(), n_grid.end());
    if (longest < 1) throw std::invalid_argument("variance grid needs n >= 1");
    if (static_cast<std::size_t>(longest) > table.size()) {
        throw std::out_of_range("covariance table too short for the variance grid");
    }
    std::vector<double> var(static_cast<std::size_t>(longest) + 1, 0.0);
    for (std::int64_t n = 1; n <= longest; ++n) {
        const auto b = static_cast<Eigen::Index>(n - 1);
        double add = table.cov(b, b);
        for (Eigen::Index a = 0; a < b; ++a) add += 2.0 * table.cov(a, b);
        var[static_cast<std::size_t>(n)] = var[static_cast<std::size_t>(n - 1)] + add;
    }
    const double a = table.alpha_fit;
    curve.bound = 2.0 * g_bound * g_bound + (a > 0.0 && a < 1.0 ? 2.0 * table.C_fit * a / (1.0 - a) : 0.0);
    if (a >= 1.0) curve.bound = std::numeric_limits<double>::infinity();
    for (auto n : n_grid) {
        if (n < 1) throw std::invalid_argument("variance grid needs n >= 1");
        const double v = var[static_cast<std::size_t>(n)] / static_cast<double>(n);
        curve.n.push_back(n);
        curve.var_over_n.push_back(v);
        curve.sup = std::max(curve.sup, v);
    }
    return curve;
}

std::vector<std::int64_t> default_n_grid(std::int64_t steps) {
    if (steps <= 0) throw std::invalid_argument("empty n_grid: steps must be positive");
    std::vector<std::int64_t> grid;
    for (std::int64_t decade = 1; decade <= steps; decade *= 10) {
        for (std::int64_t mult : {1, 2, 5}) {
            const std::int64_t n = decade * mult;
            if (n <= steps) grid.push_back(n);
        }
        if (decade > steps / 10) break;
    }
    if (grid.empty() || grid.back() != steps) grid.push_back(steps);
    return grid;
}

namespace {

LLNReport run_slln(const SplitModel& model, std::span<const double> mean_g, const Observable& g,
                   const ChainStart& start, std::vector<std::int64_t> n_grid, std::uint64_t seed,
                   std::size_t replications, unsigned workers) {
    if (n_grid.empty()) throw std::invalid_argument("empty n_grid");
    std::sort(n_grid.begin(), n_grid.end());
    n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
    if (n_grid.front() < 1) throw std::invalid_argument("n_grid entries must be >= 1");
    const std::int64_t horizon = n_grid.back();
    if (static_cast<std::int64_t>(mean_g.size()) < horizon) {
        throw std::out_of_range("mu_k(g) not supplied for every k < max(n_grid)");
    }
    if (replications == 0) throw std::invalid_argument("replications must be positive");

    const Eigen::VectorXd gv = g.tabulate(model.base());
    std::vector<double> cum_mean(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (std::int64_t k = 0; k < horizon; ++k) {
        cum_mean[static_cast<std::size_t>(k + 1)] = cum_mean[static_cast<std::size_t>(k)] + mean_g[static_cast<std::size_t>(k)];
    }

    LLNReport report;
    report.n_grid = n_grid;
    report.seed = seed;
    report.replications = replications;
    report.gaps.assign(replications, std::vector<double>(n_grid.size(), 0.0));
    report.per_replication.resize(replications);
    std::vector<std::vector<double>> rates(replications, std::vector<double>(n_grid.size(), 0.0));
    std::vector<std::vector<double>> centred(replications);
    std::vector<std::vector<double>> lengths(replications);

    parallel_for(replications, workers, [&](std::size_t r) {
        auto rng = UniformStream::derive(seed, r);
        const auto run = simulate_split_chain(model, start, 0, horizon - 1, rng);
        const auto& states = run.trajectory.states;
        double sum = 0.0;
        std::size_t next = 0;
        for (std::int64_t k = 0; k < horizon; ++k) {
            sum += gv[static_cast<Eigen::Index>(states[static_cast<std::size_t>(k)])];
            while (next < n_grid.size() && n_grid[next] == k + 1) {
                const double n = static_cast<double>(k + 1);
                report.gaps[r][next] = (sum - cum_mean[static_cast<std::size_t>(k + 1)]) / n;
                const auto& tau = run.log.tau();
                const std::int64_t last = k;  // time index n-1 is the last one observed
                rates[r][next] = tau.empty() || last < tau.front()
                                     ? 0.0
                                     : static_cast<double>(run.log.regenerations_up_to(last)) / n;
                ++next;
            }
        }
        const auto sums = cycle_sums(run.log, run.trajectory, gv);
        const auto& tau = run.log.tau();
        auto& d = centred[r];
        d.reserve(sums.size());
        for (std::size_t l = 0; l < sums.size(); ++l) {
            const double expected = cum_mean[static_cast<std::size_t>(tau[l + 1] + 1)] -
                                    cum_mean[static_cast<std::size_t>(tau[l] + 1)];
            d.push_back(sums[l] - expected);
        }
        auto& len = lengths[r];
        len.assign(run.log.lengths().begin(), run.log.lengths().end());
        auto& stats = report.per_replication[r];
        stats.cycles = len.size();
        stats.length_mean = mean_of(len);
        stats.length_variance = variance_of(len);
        std::vector<double> sq;
        sq.reserve(len.size());
        for (double l : len) sq.push_back(l * l);
        stats.length_second_moment = mean_of(sq);
        stats.centred_sum_mean = mean_of(d);
        stats.centred_sum_variance = variance_of(d);
    });

    report.max_abs_gap.assign(n_grid.size(), 0.0);
    report.regeneration_rate.assign(n_grid.size(), 0.0);
    report.cesaro.resize(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        report.cesaro[i] = cum_mean[static_cast<std::size_t>(n_grid[i])] / static_cast<double>(n_grid[i]);
        for (std::size_t r = 0; r < replications; ++r) {
            report.max_abs_gap[i] = std::max(report.max_abs_gap[i], std::abs(report.gaps[r][i]));
            report.regeneration_rate[i] += rates[r][i] / static_cast<double>(replications);
        }
    }

    std::vector<double> all_len, all_sq, all_d;
    for (std::size_t r = 0; r < replications; ++r) {
        all_len.insert(all_len.end(), lengths[r].begin(), lengths[r].end());
        all_d.insert(all_d.end(), centred[r].begin(), centred[r].end());
    }
    for (double l : all_len) all_sq.push_back(l * l);
    auto& pooled = report.cycle_stats;
    pooled.cycles = all_len.size();
    pooled.length_mean = mean_of(all_len);
    pooled.length_variance = variance_of(all_len);
    pooled.length_second_moment = mean_of(all_sq);
    pooled.centred_sum_mean = mean_of(all_d);
    pooled.centred_sum_variance = variance_of(all_d);

    if (replications >= 2) {
        std::size_t common = centred[0].size();
        for (const auto& d : centred) common = std::min(common, d.size());
        double partial = 0.0;
        std::vector<double> column(replications);
        for (std::size_t l = 0; l < common; ++l) {
            for (std::size_t r = 0; r < replications; ++r) column[r] = centred[r][l];
            const double idx = static_cast<double>(l + 1);
            partial += variance_of(column) / (idx * idx);
            report.kolmogorov_partial_sums.push_back(partial);
        }
    }
    return report;
}

}  // namespace

LLNReport slln_run(const SplitModel& model, std::span<const double> mean_g, const Observable& g,
                   std::size_t x, std::vector<std::int64_t> n_grid, std::uint64_t seed,
                   std::size_t replications, unsigned workers) {
    if (x >= model.state_count()) throw std::out_of_range("start state outside the model");
    if (!std::isfinite(model.drift().V[static_cast<Eigen::Index>(x)])) {
        throw std::invalid_argument("start state has V = infinity");
    }
    return run_slln(model, mean_g, g, ChainStart{x}, std::move(n_grid), seed, replications, workers);
}

LLNReport slln_run(const SplitModel& model, const InvariantFamily& family, const Observable& g,
                   const ChainStart& start, std::vector<std::int64_t> n_grid, std::uint64_t seed,
                   std::size_t replications, unsigned workers) {
    if (n_grid.empty()) throw std::invalid_argument("empty n_grid");
    const std::int64_t horizon = *std::max_element(n_grid.begin(), n_grid.end());
    if (!family.contains(0) || !family.contains(horizon - 1)) {
        throw std::out_of_range("invariant family does not cover 0 .. max(n_grid) - 1");
    }
    const Eigen::VectorXd gv = g.tabulate(model.base());
    Eigen::VectorXd integrals = family.integrals(gv);
    if ((gv.array() == gv[0]).all()) integrals.setConstant(gv[0]);  // exact for constant g
    const std::span<const double> mean_g(integrals.data() + (0 - family.first()),
                                         static_cast<std::size_t>(horizon));
    if (const auto* point = std::get_if<std::size_t>(&start)) {
        return slln_run(model, mean_g, g, *point, std::move(n_grid), seed, replications, workers);
    }
    return run_slln(model, mean_g, g, start, std::move(n_grid), seed, replications, workers);
}

std::vector<double> cesaro_invariant_mean(const InvariantFamily& family,
                                          const Eigen::Ref<const Eigen::VectorXd>& g,
                                          const std::vector<std::int64_t>& n_grid) {
    std::vector<double> out;
    if (n_grid.empty()) return out;
    const std::int64_t horizon = *std::max_element(n_grid.begin(), n_grid.end());
    if (horizon < 1) throw std::invalid_argument("n_grid entries must be >= 1");
    if (!family.contains(0) || !family.contains(horizon - 1)) {
        throw std::out_of_range("invariant family does not cover 0 .. max(n_grid) - 1");
    }
    const Eigen::VectorXd integrals = family.integrals(g);
    std::vector<double> cum(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (std::int64_t k = 0; k < horizon; ++k) {
        cum[static_cast<std::size_t>(k + 1)] = cum[static_cast<std::size_t>(k)] + integrals[k - family.first()];
    }
    for (auto n : n_grid) {
        if (n < 1) throw std::invalid_argument("n_grid entries must be >= 1");
        out.push_back(cum[static_cast<std::size_t>(n)] / static_cast<double>(n));
    }
    return out;
}

SecondMomentBins second_moment_bins(std::span<const std::int64_t> lengths, std::size_t bins) {
    if (bins == 0 || lengths.size() < 2 * bins) throw std::invalid_argument("too few cycles for the requested bins");
    SecondMomentBins out;
    std::vector<double> sq;
    sq.reserve(lengths.size());
    for (auto l : lengths) sq.push_back(static_cast<double>(l) * static_cast<double>(l));
    out.global_mean = mean_of(sq);
    const double sd = std::sqrt(variance_of(sq));
    const std::size_t per_bin = sq.size() / bins;
    out.bin_stderr = sd / std::sqrt(static_cast<double>(per_bin));
    for (std::size_t b = 0; b < bins; ++b) {
        const auto first = sq.begin() + static_cast<std::ptrdiff_t>(b * per_bin);
        const double m = std::accumulate(first, first + static_cast<std::ptrdiff_t>(per_bin), 0.0) /
                         static_cast<double>(per_bin);
        out.bin_means.push_back(m);
        if (out.bin_stderr > 0.0) out.max_z = std::max(out.max_z, std::abs(m - out.global_mean) / out.bin_stderr);
    }
    return out;
}

CouplingResult coalescing_couple(const SplitModel& model, std::size_t start_a,
                                 const ChainStart& start_b, std::int64_t steps,
                                 std::uint64_t seed, CouplingMode mode) {
    if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
    const std::size_t d = model.state_count();
    if (start_a >= d) throw std::out_of_range("start state outside the model");
    const auto& small = model.small();
    const auto& nu = model.nu();
    const double beta = model.beta();
    const double bell = model.bell_probability();
    const bool independent = mode == CouplingMode::IndependentBells;

    UniformStream rng(seed);
    CouplingResult result;
    result.path_a.reserve(static_cast<std::size_t>(steps) + 1);
    result.path_b.reserve(static_cast<std::size_t>(steps) + 1);

    double ux = rng.next();
    double ud = rng.next();
    double ud_b = independent ? rng.next() : ud;
    SplitState a{start_a, false};
    SplitState b{};
    if (const auto* point = std::get_if<std::size_t>(&start_b)) {
        if (*point >= d) throw std::out_of_range("start state outside the model");
        b.x = *point;
    } else {
        b.x = std::get<ProbMeasure>(start_b).inverse_cdf(ux);
    }
    bool merged = false;
    auto ring = [&](SplitState& s, double u) { s.level = small[s.x] && u <= bell; };
    ring(a, ud);
    ring(b, ud_b);
    if (a.level && b.level) {
        merged = true;
        result.joint_regeneration = 0;
    }
    result.path_a.push_back(a);
    result.path_b.push_back(b);

    for (std::int64_t t = 1; t <= steps; ++t) {
        const TimeIndex n = t - 1;
        ux = rng.next();
        ud = rng.next();
        ud_b = independent ? rng.next() : ud;
        std::optional<Eigen::MatrixXd> P;
        auto advance = [&](SplitState& s) {
            if (s.level) {
                s.x = nu.inverse_cdf(ux);
                return;
            }
            if (!P) P = model.base().step(n);
            const auto row = static_cast<Eigen::Index>(s.x);
            if (!small[s.x]) {
                s.x = draw_index(d, ux, [&](std::size_t j) { return (*P)(row, static_cast<Eigen::Index>(j)); });
            } else {
                s.x = draw_index(d, ux, [&](std::size_t j) {
                    return ((*P)(row, static_cast<Eigen::Index>(j)) - beta * nu[j]) / (1.0 - beta);
                });
            }
        };
        advance(a);
        advance(b);
        ring(a, ud);
        ring(b, merged ? ud : ud_b);
        if (!merged && a.level && b.level) {
            merged = true;
            result.joint_regeneration = t;
        }
        result.path_a.push_back(a);
        result.path_b.push_back(b);
    }

    result.coalesced = merged;
    std::int64_t last_diff = -1;
    for (std::int64_t t = steps; t >= 0; --t) {
        if (!(result.path_a[static_cast<std::size_t>(t)] == result.path_b[static_cast<std::size_t>(t)])) {
            last_diff = t;
            break;
        }
    }
    result.coupling_time = last_diff == steps ? -1 : last_diff + 1;
    if (merged) {
        result.paths_equal_after = true;
        for (auto t = static_cast<std::size_t>(result.joint_regeneration) + 1; t < result.path_a.size(); ++t) {
            if (!(result.path_a[t] == result.path_b[t])) {
                result.paths_equal_after = false;
                break;
            }
        }
    }
    return result;
}

CouplingExperiment coupling_experiment(const SplitModel& model, std::size_t start_a,
                                       const ChainStart& start_b, std::int64_t steps,
                                       std::uint64_t seed, std::size_t replications,
                                       CouplingMode mode, unsigned workers) {
    CouplingExperiment out;
    out.coupling_times.assign(replications, -1);
    std::vector<std::uint8_t> coalesced(replications, 0), equal(replications, 0);
    parallel_for(replications, workers, [&](std::size_t r) {
        const auto res = coalescing_couple(model, start_a, start_b, steps, stream_seed(seed, r), mode);
        coalesced[r] = res.coalesced;
        equal[r] = res.coalesced && res.paths_equal_after;
        out.coupling_times[r] = res.coalesced ? res.coupling_time : -1;
    });
    std::vector<double> times;
    for (std::size_t r = 0; r < replications; ++r) {
        out.coalesced += coalesced[r];
        out.paths_equal += equal[r];
        if (coalesced[r]) times.push_back(static_cast<double>(out.coupling_times[r]));
    }
    out.mean = mean_of(times);
    out.stddev = std::sqrt(variance_of(times));
    return out;
}

}  // namespace tilln
