#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tilln/conditions.hpp"
#include "tilln/kernel.hpp"
#include "tilln/rng.hpp"

namespace tilln {

/// Point of the split space X x {0,1}; level 1 is the bell.
struct SplitState {
    std::size_t x = 0;
    bool level = false;
    friend bool operator==(const SplitState&, const SplitState&) = default;
};

/// Measure on X x {0,1}, stored as one vector per level.
struct SplitMeasure {
    Eigen::VectorXd level0;
    Eigen::VectorXd level1;

    double total() const { return level0.sum() + level1.sum(); }
    /// Sum over levels.
    Eigen::VectorXd marginal() const { return level0 + level1; }
};

/// lambda* : mass (1-beta) lambda on C(R) x {0} plus lambda off C(R) at level
/// 0, and beta lambda on C(R) x {1}.
SplitMeasure split_measure(const ProbMeasure& lambda, double beta,
                           const std::vector<bool>& small);

/// Finite kernel family with a verified one-step minorization on C(R).
class SplitModel {
public:
    /// Throws std::invalid_argument if the drift data is invalid or the
    /// certificate does not verify on its window.
    SplitModel(FiniteKernelFamily base, DoeblinCertificate cert, DriftSpec drift);

    /// Skips certificate verification. Used for fault injection.
    static SplitModel unverified(FiniteKernelFamily base, DoeblinCertificate cert,
                                 DriftSpec drift);

    const FiniteKernelFamily& base() const { return base_; }
    const DoeblinCertificate& certificate() const { return cert_; }
    const DriftSpec& drift() const { return drift_; }
    const std::vector<bool>& small() const { return small_; }
    bool in_small_set(std::size_t x) const { return small_.at(x); }
    double beta() const { return cert_.beta; }
    const ProbMeasure& nu() const { return cert_.nu; }
    std::size_t state_count() const { return base_.state_count(); }

    /// Probability with which the bell rings inside C(R). Equal to beta for
    /// every model except fault-injected ones.
    double bell_probability() const { return bell_; }
    SplitModel with_bell_probability(double p) const;

    /// (P(n,x,n+1,.) - beta nu) / (1 - beta), with round-off negatives
    /// clamped. Throws std::domain_error when beta == 1.
    Eigen::VectorXd residual_row(TimeIndex n, std::size_t x) const;

private:
    SplitModel(FiniteKernelFamily base, DoeblinCertificate cert, DriftSpec drift, bool verify);

    FiniteKernelFamily base_;
    DoeblinCertificate cert_;
    DriftSpec drift_;
    std::vector<bool> small_;
    double bell_;
};

/// Split kernel from (n, s) to time n + 1. Throws std::invalid_argument for a
/// level-1 state outside C(R).
SplitMeasure eval_split_kernel(const SplitModel& model, TimeIndex n, const SplitState& s);

/// Point start or initial distribution.
using ChainStart = std::variant<std::size_t, ProbMeasure>;

struct SplitTrajectory {
    TimeIndex start_time = 0;
    /// Entry t is (X, delta) at time start_time + t.
    std::vector<std::size_t> states;
    std::vector<std::uint8_t> levels;
    std::uint64_t seed = 0;
    std::uint64_t uniforms_consumed = 0;

    std::size_t size() const { return states.size(); }
    SplitState at(std::size_t t) const { return {states[t], levels[t] != 0}; }
};

/// Regeneration bookkeeping of a split trajectory; times are offsets from the
/// start time.
class RegenerationLog {
public:
    RegenerationLog() = default;
    static RegenerationLog from(const SplitTrajectory& traj, const std::vector<bool>& small);

    /// Times with delta = 1, increasing; tau_0 may be 0.
    const std::vector<std::int64_t>& tau() const { return tau_; }
    /// Visits to C(R) at offsets t >= 1.
    const std::vector<std::int64_t>& sigma() const { return sigma_; }
    /// L_l = tau_{l+1} - tau_l.
    const std::vector<std::int64_t>& lengths() const { return lengths_; }
    std::size_t cycle_count() const { return lengths_.size(); }
    std::int64_t horizon() const { return horizon_; }

    /// N(n): index of the last regeneration at or before n. Throws
    /// std::out_of_range for n < tau_0.
    std::size_t regenerations_up_to(std::int64_t n) const;
    /// r(n) = n - tau_{N(n)}.
    std::int64_t remainder(std::int64_t n) const;

private:
    std::vector<std::int64_t> tau_;
    std::vector<std::int64_t> sigma_;
    std::vector<std::int64_t> lengths_;
    std::int64_t horizon_ = 0;
};

struct SplitRun {
    SplitTrajectory trajectory;
    RegenerationLog log;
};

/// Number of uniforms consumed per step: (U^X, U^delta).
inline constexpr int kUniformsPerStep = 2;

/// Simulates (X_t, delta_t) for t = 0..steps starting at time s.
///
/// Step t consumes U^X_t then U^delta_t. X_0 is the point start (U^X_0 is
/// drawn and discarded) or an inverse-CDF draw from the start distribution;
/// afterwards X_{t} is drawn from P (off C(R)), the residual kernel (on C(R),
/// level 0) or nu (level 1), each by inverse CDF. delta_t = 1{U^delta_t <=
/// beta} on C(R) and 0 elsewhere.
SplitRun simulate_split_chain(const SplitModel& model, const ChainStart& start, TimeIndex s,
                              std::int64_t steps, std::uint64_t seed);
SplitRun simulate_split_chain(const SplitModel& model, const ChainStart& start, TimeIndex s,
                              std::int64_t steps, UniformStream& rng);

/// Split chain over a sampler kernel. The residual kernel is drawn either by
/// a user residual sampler or by rejection from P with acceptance
/// 1 - beta nu(y) / p(y), capped at kRejectionCap proposals per step.
struct SamplerSplitModel {
    static constexpr std::uint64_t kRejectionCap = 1'000'000;

    SamplerKernelFamily base;
    double beta = 0.0;
    std::function<State(UniformStream&)> nu_sample;
    std::optional<std::function<double(const State&)>> nu_density;
    std::optional<SamplerKernelFamily::Sampler> residual_sample;
    std::function<double(const State&)> V;
    double R = 0.0;

    bool in_small_set(const State& x) const { return V(x) <= R; }
};

struct SamplerSplitTrajectory {
    TimeIndex start_time = 0;
    std::vector<State> states;
    std::vector<std::uint8_t> levels;
    std::uint64_t uniforms_consumed = 0;
};

/// Same randomness layout as the finite version; each draw gets a private
/// sub-stream seeded from its U^X. Throws std::invalid_argument when a
/// residual draw is needed and neither a residual sampler nor both densities
/// are available, and std::runtime_error when rejection exceeds the cap.
SamplerSplitTrajectory simulate_split_chain(const SamplerSplitModel& model, const State& start,
                                            TimeIndex s, std::int64_t steps,
                                            std::uint64_t seed);

struct BellStatistics {
    std::size_t visits = 0;         ///< t with X_t in C(R)
    std::size_t regenerations = 0;  ///< t with delta_t = 1
    std::size_t off_set_bells = 0;  ///< delta_t = 1 with X_t outside C(R); must be 0
    double rate = 0.0;              ///< regenerations / visits
    double sigma = 0.0;             ///< binomial standard error at beta
    double z = 0.0;                 ///< (rate - beta) / sigma
};

BellStatistics bell_statistics(const SplitTrajectory& traj, const SplitModel& model);

/// Empirical law of X_{t+1} over times t with delta_t = 1, plus the count.
std::pair<ProbMeasure, std::size_t> post_regeneration_law(const SplitTrajectory& traj,
                                                          std::size_t state_count);

struct MarginalReport {
    /// gaps[t-1] = TV(empirical law of X_t, exact marginal at time s + t).
    std::vector<double> gaps;
    std::size_t samples = 0;
    double scale = 0.0;      ///< 1 / sqrt(samples)
    double tolerance = 0.0;  ///< 3 sqrt(2 / samples)
    double max_gap = 0.0;
};

/// Compares X-marginals of n_samples independent split chains (sample i uses
/// stream (seed, i)) with the exact law lambda P_{s,s+t}.
MarginalReport marginal_consistency(const SplitModel& model, const ChainStart& start,
                                    TimeIndex s, std::int64_t horizon, std::size_t n_samples,
                                    std::uint64_t seed, unsigned workers = 1);

/// D_l^0 = sum_{j = tau_l + 1}^{tau_{l+1}} g(X_j) for every complete cycle.
std::vector<double> cycle_sums(const RegenerationLog& log, const SplitTrajectory& traj,
                               const Eigen::Ref<const Eigen::VectorXd>& g);

struct CycleIndependenceReport {
    std::size_t cycles = 0;
    /// Lag-1 sample correlation of consecutive cycle sums.
    double correlation = 0.0;
    /// Same for the residuals of the cycle sums regressed on cycle length;
    /// zero when the residuals vanish (g constant).
    double detrended_correlation = 0.0;
    double threshold = 0.0;  ///< 3 / sqrt(cycles)
    bool flagged = false;    ///< |correlation| > threshold
    double p_value = 1.0;    ///< two-sided, normal approximation
};

inline constexpr std::size_t kMinIndependenceCycles = 100;

/// Throws std::invalid_argument with fewer than kMinIndependenceCycles cycles.
CycleIndependenceReport cycle_independence_check(const RegenerationLog& log,
                                                 const SplitTrajectory& traj,
                                                 const Eigen::Ref<const Eigen::VectorXd>& g);

}  // namespace tilln
