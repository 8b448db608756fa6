#include "tilln/splitting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "tilln/parallel.hpp"

namespace tilln {

namespace {

// Inverse CDF over a row given entrywise by `mass(j)`.
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

double pearson(const double* a, const double* b, std::size_t n) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double lag1_correlation(const std::vector<double>& xs) {
    if (xs.size() < 3) return 0.0;
    return pearson(xs.data(), xs.data() + 1, xs.size() - 1);
}

}  // namespace

SplitMeasure split_measure(const ProbMeasure& lambda, double beta, const std::vector<bool>& small) {
    if (small.size() != lambda.size()) throw std::invalid_argument("small-set mask length differs from the measure");
    const auto d = static_cast<Eigen::Index>(lambda.size());
    SplitMeasure out{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
    for (Eigen::Index i = 0; i < d; ++i) {
        const double m = lambda[static_cast<std::size_t>(i)];
        if (small[static_cast<std::size_t>(i)]) {
            out.level0[i] = (1.0 - beta) * m;
            out.level1[i] = beta * m;
        } else {
            out.level0[i] = m;
        }
    }
    return out;
}

SplitModel::SplitModel(FiniteKernelFamily base, DoeblinCertificate cert, DriftSpec drift)
    : SplitModel(std::move(base), std::move(cert), std::move(drift), true) {}

SplitModel SplitModel::unverified(FiniteKernelFamily base, DoeblinCertificate cert, DriftSpec drift) {
    return SplitModel(std::move(base), std::move(cert), std::move(drift), false);
}

SplitModel::SplitModel(FiniteKernelFamily base, DoeblinCertificate cert, DriftSpec drift, bool verify)
    : base_(std::move(base)), cert_(std::move(cert)), drift_(std::move(drift)), bell_(cert_.beta) {
    if (static_cast<std::size_t>(drift_.V.size()) != base_.state_count()) {
        throw std::invalid_argument("drift V length differs from the state count");
    }
    if (cert_.nu.size() != base_.state_count()) {
        throw std::invalid_argument("nu length differs from the state count");
    }
    if (!(cert_.beta > 0.0 && cert_.beta <= 1.0)) throw std::invalid_argument("beta out of range (0,1]");
    small_ = small_set(drift_.V, cert_.R);
    if (std::none_of(small_.begin(), small_.end(), [](bool b) { return b; })) {
        throw std::invalid_argument("small set C(R) is empty");
    }
    if (verify) {
        drift_.validate();
        const auto report = verify_doeblin(base_, cert_, drift_.V);
        if (!report.ok) {
            throw std::invalid_argument("Doeblin certificate fails at time " +
                                        std::to_string(report.worst_time) + " (slack " +
                                        std::to_string(report.worst_slack) + ")");
        }
    }
}

SplitModel SplitModel::with_bell_probability(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bell probability out of range");
    SplitModel out = *this;
    out.bell_ = p;
    return out;
}

Eigen::VectorXd SplitModel::residual_row(TimeIndex n, std::size_t x) const {
    if (cert_.beta >= 1.0) throw std::domain_error("residual kernel undefined for beta = 1");
    const Eigen::MatrixXd P = base_.step(n);
    Eigen::VectorXd r = (P.row(static_cast<Eigen::Index>(x)).transpose() - cert_.beta * cert_.nu.vector()) /
                        (1.0 - cert_.beta);
    if (r.minCoeff() < -kMinorizationTolerance) {
        throw std::domain_error("minorization fails at time " + std::to_string(n + 1) +
                                ": residual kernel has negative mass");
    }
    return r.cwiseMax(0.0);
}

SplitMeasure eval_split_kernel(const SplitModel& model, TimeIndex n, const SplitState& s) {
    if (s.x >= model.state_count()) throw std::out_of_range("unknown state index");
    const bool inside = model.in_small_set(s.x);
    if (s.level && !inside) throw std::invalid_argument("level-1 state outside C(R)");
    const auto d = static_cast<Eigen::Index>(model.state_count());
    Eigen::VectorXd next(d);
    if (s.level) {
        next = model.nu().vector();
    } else if (!inside) {
        next = model.base().step(n).row(static_cast<Eigen::Index>(s.x)).transpose();
    } else {
        next = model.residual_row(n, s.x);
    }
    SplitMeasure out{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
    for (Eigen::Index i = 0; i < d; ++i) {
        if (model.in_small_set(static_cast<std::size_t>(i))) {
            out.level0[i] = (1.0 - model.beta()) * next[i];
            out.level1[i] = model.beta() * next[i];
        } else {
            out.level0[i] = next[i];
        }
    }
    return out;
}

RegenerationLog RegenerationLog::from(const SplitTrajectory& traj, const std::vector<bool>& small) {
    RegenerationLog log;
    log.horizon_ = static_cast<std::int64_t>(traj.size()) - 1;
    for (std::size_t t = 0; t < traj.size(); ++t) {
        if (traj.levels[t]) log.tau_.push_back(static_cast<std::int64_t>(t));
        if (t >= 1 && small.at(traj.states[t])) log.sigma_.push_back(static_cast<std::int64_t>(t));
    }
    for (std::size_t l = 0; l + 1 < log.tau_.size(); ++l) {
        log.lengths_.push_back(log.tau_[l + 1] - log.tau_[l]);
    }
    return log;
}

std::size_t RegenerationLog::regenerations_up_to(std::int64_t n) const {
    if (tau_.empty() || n < tau_.front()) {
        throw std::out_of_range("N(n) is defined only for n >= tau_0");
    }
    const auto it = std::upper_bound(tau_.begin(), tau_.end(), n);
    return static_cast<std::size_t>(it - tau_.begin()) - 1;
}

std::int64_t RegenerationLog::remainder(std::int64_t n) const {
    return n - tau_[regenerations_up_to(n)];
}

SplitRun simulate_split_chain(const SplitModel& model, const ChainStart& start, TimeIndex s,
                              std::int64_t steps, std::uint64_t seed) {
    UniformStream rng(seed);
    return simulate_split_chain(model, start, s, steps, rng);
}

SplitRun simulate_split_chain(const SplitModel& model, const ChainStart& start, TimeIndex s,
                              std::int64_t steps, UniformStream& rng) {
    if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
    const std::size_t d = model.state_count();
    const auto& small = model.small();
    const auto& nu = model.nu();
    const double beta = model.beta();
    const double bell = model.bell_probability();
    const std::uint64_t consumed_before = rng.consumed();

    SplitRun run;
    auto& traj = run.trajectory;
    traj.start_time = s;
    traj.seed = rng.seed();
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.levels.reserve(static_cast<std::size_t>(steps) + 1);

    double ux = rng.next();
    double ud = rng.next();
    std::size_t x = 0;
    if (const auto* point = std::get_if<std::size_t>(&start)) {
        if (*point >= d) throw std::out_of_range("start state outside the model");
        if (!std::isfinite(model.drift().V[static_cast<Eigen::Index>(*point)])) {
            throw std::invalid_argument("start state has V = infinity");
        }
        x = *point;
    } else {
        const auto& lambda = std::get<ProbMeasure>(start);
        if (lambda.size() != d) throw std::invalid_argument("start distribution length differs from the model");
        x = lambda.inverse_cdf(ux);
    }
    bool level = small[x] && ud <= bell;
    traj.states.push_back(x);
    traj.levels.push_back(level);

    for (std::int64_t t = 1; t <= steps; ++t) {
        const TimeIndex n = s + t - 1;
        ux = rng.next();
        ud = rng.next();
        if (level) {
            x = nu.inverse_cdf(ux);
        } else if (!small[x]) {
            const Eigen::MatrixXd P = model.base().step(n);
            const auto row = static_cast<Eigen::Index>(x);
            x = draw_index(d, ux, [&](std::size_t j) { return P(row, static_cast<Eigen::Index>(j)); });
        } else {
            if (beta >= 1.0) throw std::domain_error("residual kernel undefined for beta = 1");
            const Eigen::MatrixXd P = model.base().step(n);
            const auto row = static_cast<Eigen::Index>(x);
            double lowest = 0.0;
            x = draw_index(d, ux, [&](std::size_t j) {
                const double r = (P(row, static_cast<Eigen::Index>(j)) - beta * nu[j]) / (1.0 - beta);
                lowest = std::min(lowest, r);
                return r;
            });
            if (lowest < -kMinorizationTolerance) {
                throw std::domain_error("minorization fails at time " + std::to_string(n + 1));
            }
        }
        level = small[x] && ud <= bell;
        traj.states.push_back(x);
        traj.levels.push_back(level);
    }
    traj.uniforms_consumed = rng.consumed() - consumed_before;
    run.log = RegenerationLog::from(traj, small);
    return run;
}

SamplerSplitTrajectory simulate_split_chain(const SamplerSplitModel& model, const State& start,
                                            TimeIndex s, std::int64_t steps, std::uint64_t seed) {
    if (steps < 0) throw std::invalid_argument("steps must be nonnegative");
    if (!model.V || !model.nu_sample) throw std::invalid_argument("sampler split model needs V and a nu sampler");
    if (!(model.beta > 0.0 && model.beta <= 1.0)) throw std::invalid_argument("beta out of range (0,1]");
    if (!std::isfinite(model.V(start))) throw std::invalid_argument("start state has V = infinity");

    UniformStream rng(seed);
    SamplerSplitTrajectory traj;
    traj.start_time = s;
    auto sub_stream = [](double u) { return UniformStream(mix64(std::bit_cast<std::uint64_t>(u))); };

    auto residual_draw = [&](TimeIndex n, const State& x, UniformStream& sub) -> State {
        if (model.residual_sample) return (*model.residual_sample)(n, x, sub);
        if (!model.base.density || !model.nu_density) {
            throw std::invalid_argument(
                "residual draw needs a residual sampler or both kernel and nu densities");
        }
        for (std::uint64_t attempt = 0; attempt < SamplerSplitModel::kRejectionCap; ++attempt) {
            State y = model.base.draw(n, x, sub);
            const double p = (*model.base.density)(n, x, y);
            const double accept = p > 0.0 ? 1.0 - model.beta * (*model.nu_density)(y) / p : 0.0;
            if (sub.next() <= accept) return y;
        }
        throw std::runtime_error("residual rejection sampler exceeded its retry cap");
    };

    double ux = rng.next();
    double ud = rng.next();
    State x = start;
    bool level = model.in_small_set(x) && ud <= model.beta;
    traj.states.push_back(x);
    traj.levels.push_back(level);
    for (std::int64_t t = 1; t <= steps; ++t) {
        const TimeIndex n = s + t - 1;
        ux = rng.next();
        ud = rng.next();
        auto sub = sub_stream(ux);
        if (level) x = model.nu_sample(sub);
        else if (!model.in_small_set(x)) x = model.base.draw(n, x, sub);
        else x = residual_draw(n, x, sub);
        level = model.in_small_set(x) && ud <= model.beta;
        traj.states.push_back(x);
        traj.levels.push_back(level);
    }
    traj.uniforms_consumed = rng.consumed();
    return traj;
}

BellStatistics bell_statistics(const SplitTrajectory& traj, const SplitModel& model) {
    BellStatistics out;
    for (std::size_t t = 0; t < traj.size(); ++t) {
        const bool inside = model.in_small_set(traj.states[t]);
        if (inside) ++out.visits;
        if (traj.levels[t]) {
            ++out.regenerations;
            if (!inside) ++out.off_set_bells;
        }
    }
    if (out.visits > 0) {
        const double v = static_cast<double>(out.visits);
        out.rate = static_cast<double>(out.regenerations) / v;
        out.sigma = std::sqrt(model.beta() * (1.0 - model.beta()) / v);
        out.z = out.sigma > 0.0 ? (out.rate - model.beta()) / out.sigma : 0.0;
    }
    return out;
}

std::pair<ProbMeasure, std::size_t> post_regeneration_law(const SplitTrajectory& traj,
                                                          std::size_t state_count) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_count));
    std::size_t n = 0;
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
        if (!traj.levels[t]) continue;
        counts[static_cast<Eigen::Index>(traj.states[t + 1])] += 1.0;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("trajectory has no regeneration followed by a step");
    return {ProbMeasure::normalized(counts / static_cast<double>(n)), n};
}

MarginalReport marginal_consistency(const SplitModel& model, const ChainStart& start, TimeIndex s,
                                    std::int64_t horizon, std::size_t n_samples,
                                    std::uint64_t seed, unsigned workers) {
    MarginalReport report;
    report.samples = n_samples;
    if (horizon <= 0) return report;
    if (n_samples == 0) throw std::invalid_argument("marginal check needs samples");
    report.scale = 1.0 / std::sqrt(static_cast<double>(n_samples));
    report.tolerance = 3.0 * std::sqrt(2.0 / static_cast<double>(n_samples));

    const std::size_t d = model.state_count();
    const auto H = static_cast<std::size_t>(horizon);
    const std::size_t chunks = std::max(1u, workers);
    std::vector<std::vector<std::uint64_t>> counts(chunks, std::vector<std::uint64_t>(H * d, 0));
    parallel_for(chunks, workers, [&](std::size_t c) {
        auto& local = counts[c];
        for (std::size_t i = c; i < n_samples; i += chunks) {
            auto rng = UniformStream::derive(seed, i);
            const auto run = simulate_split_chain(model, start, s, horizon, rng);
            for (std::size_t t = 1; t <= H; ++t) ++local[(t - 1) * d + run.trajectory.states[t]];
        }
    });

    Eigen::RowVectorXd law;
    if (const auto* point = std::get_if<std::size_t>(&start)) {
        law = ProbMeasure::dirac(d, *point).vector().transpose();
    } else {
        law = std::get<ProbMeasure>(start).vector().transpose();
    }
    for (std::size_t t = 1; t <= H; ++t) {
        law = law * model.base().step(s + static_cast<TimeIndex>(t) - 1);
        Eigen::VectorXd empirical = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        for (const auto& local : counts) {
            for (std::size_t x = 0; x < d; ++x) {
                empirical[static_cast<Eigen::Index>(x)] += static_cast<double>(local[(t - 1) * d + x]);
            }
        }
        empirical /= static_cast<double>(n_samples);
        const double gap = tv_distance(empirical, law.transpose());
        report.gaps.push_back(gap);
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

std::vector<double> cycle_sums(const RegenerationLog& log, const SplitTrajectory& traj,
                               const Eigen::Ref<const Eigen::VectorXd>& g) {
    std::vector<double> out;
    const auto& tau = log.tau();
    out.reserve(log.cycle_count());
    for (std::size_t l = 0; l + 1 < tau.size(); ++l) {
        double sum = 0.0;
        for (std::int64_t j = tau[l] + 1; j <= tau[l + 1]; ++j) {
            sum += g[static_cast<Eigen::Index>(traj.states[static_cast<std::size_t>(j)])];
        }
        out.push_back(sum);
    }
    return out;
}

CycleIndependenceReport cycle_independence_check(const RegenerationLog& log,
                                                 const SplitTrajectory& traj,
                                                 const Eigen::Ref<const Eigen::VectorXd>& g) {
    const std::size_t n = log.cycle_count();
    if (n < kMinIndependenceCycles) {
        throw std::invalid_argument("independence check needs at least " +
                                    std::to_string(kMinIndependenceCycles) + " complete cycles, got " +
                                    std::to_string(n));
    }
    const auto sums = cycle_sums(log, traj, g);
    CycleIndependenceReport report;
    report.cycles = n;
    report.correlation = lag1_correlation(sums);

    std::vector<double> lengths(log.lengths().begin(), log.lengths().end());
    double ml = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ml += lengths[i];
        ms += sums[i];
    }
    ml /= static_cast<double>(n);
    ms /= static_cast<double>(n);
    double sll = 0.0, sls = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sll += (lengths[i] - ml) * (lengths[i] - ml);
        sls += (lengths[i] - ml) * (sums[i] - ms);
    }
    const double slope = sll > 0.0 ? sls / sll : 0.0;
    std::vector<double> resid(n);
    double scale = 0.0, rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        resid[i] = sums[i] - ms - slope * (lengths[i] - ml);
        scale += sums[i] * sums[i];
        rss += resid[i] * resid[i];
    }
    report.detrended_correlation = rss <= 1e-24 * std::max(scale, 1.0) ? 0.0 : lag1_correlation(resid);

    report.threshold = 3.0 / std::sqrt(static_cast<double>(n));
    report.flagged = std::abs(report.correlation) > report.threshold;
    report.p_value = std::erfc(std::abs(report.correlation) * std::sqrt(static_cast<double>(n)) / std::sqrt(2.0));
    return report;
}

}  // namespace tilln
