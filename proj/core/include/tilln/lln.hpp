#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tilln/conditions.hpp"
#include "tilln/invariant.hpp"
#include "tilln/kernel.hpp"
#include "tilln/splitting.hpp"

namespace tilln {

/// A fit whose data show no decay.
class FitFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Return times
// ---------------------------------------------------------------------------

/// P_{s,x}(tau > n) for n = 0..n_max, tau = min{k >= 1 : X_{s+k} in C}.
/// Exact: propagates e_x through the kernels with the columns into C zeroed.
std::vector<double> taboo_tail_exact(const FiniteKernelFamily& fam, const std::vector<bool>& in_set,
                                     TimeIndex s, std::size_t x, int n_max);

struct TailSite {
    TimeIndex s = 0;
    std::size_t x = 0;
};

struct TailBoundReport {
    bool ok = false;
    /// max over checked (s, x, n) of survival / bound.
    double worst_ratio = 0.0;
    TailSite worst_site;
    int worst_n = 0;
    double rho = 0.0;
    std::size_t sites_checked = 0;
    /// Sites inside C(R): with tau counted from k = 0 their survival is 0
    /// and the bound is trivial; with the k >= 1 convention used by
    /// taboo_tail_exact it can fail. Recorded here, not part of `ok`.
    std::size_t small_set_sites = 0;
    bool small_set_sites_hold_k1 = true;
};

/// Checks P_{s,x}(tau > n) <= (V(x)/R) rho^n + 1e-12 at every site and n,
/// for the drift's C(R). Throws std::invalid_argument if the drift condition
/// does not hold on the times touched.
TailBoundReport check_drift_tail_bound(const FiniteKernelFamily& fam, const DriftSpec& drift,
                                       const std::vector<TailSite>& sites, int n_max);

/// Fitted geometric tail P(tau > n) <= K zeta^n.
struct TailFit {
    double K = 0.0;
    double zeta = 0.0;
    double theta = 0.0;  ///< -ln zeta
    double slope_stderr = 0.0;
    double residual_norm = 0.0;
    int fit_first = 0;
    int fit_last = 0;
    std::size_t samples = 0;
    /// Survival at n = 0, 1, ...
    std::vector<double> empirical_survival;
};

inline constexpr std::size_t kMinTailSamples = 50;

/// Fits log survival of the sample against n where survival > 10/#samples.
/// Throws std::invalid_argument with fewer than kMinTailSamples samples or
/// fewer than two fit points, and FitFailure when the slope is >= 0.
TailFit tail_fit(std::span<const std::int64_t> times);

/// Same for an exact survival curve, using points above `floor`.
TailFit tail_fit_curve(std::span<const double> survival, double floor = 1e-12);

// ---------------------------------------------------------------------------
// Weak law: exact second-order structure
// ---------------------------------------------------------------------------

/// Exact covariances of g(X_i), g(X_j) for the chain started at mu_{first}.
struct CovarianceTable {
    TimeIndex first = 0;
    /// Symmetric; entry (a, b) is Cov(g(X_{first+a}), g(X_{first+b})).
    Eigen::MatrixXd cov;
    /// max over i of |Cov(i, i+m)| for m = 0..size-1.
    std::vector<double> lag_envelope;
    /// |Cov(i, i+m)| <= C_fit alpha_fit^m for m >= 1, fitted over the lags
    /// whose envelope is above the noise floor of the invariant family.
    double alpha_fit = 0.0;
    double C_fit = 0.0;
    double slope_stderr = 0.0;
    /// ln alpha_fit within three combined standard errors of the ergodicity
    /// fit, when one was supplied.
    bool alpha_consistent = true;

    std::size_t size() const { return static_cast<std::size_t>(cov.rows()); }
    double at(TimeIndex i, TimeIndex j) const { return cov(i - first, j - first); }
};

/// Cov(g(X_i), g(X_j)) = sum_x mu_i(x) g(x) [P_{i,j} g](x) - mu_i(g) mu_j(g)
/// for i, j in `range`. Throws std::out_of_range if some mu_i is missing.
CovarianceTable wlln_covariance_exact(const FiniteKernelFamily& fam,
                                      const InvariantFamily& family, const Observable& g,
                                      const TimeWindow& range,
                                      const ErgodicityFit* ergodicity = nullptr);

struct VarianceCurve {
    std::vector<std::int64_t> n;
    /// Var(S_n) / n with S_n = sum_{k<n} g(X_{first+k}).
    std::vector<double> var_over_n;
    double sup = 0.0;
    /// 2 |g|^2 + 2 C alpha / (1 - alpha) with the covariance-envelope fit.
    double bound = 0.0;
};

/// Needs the table to cover indices first .. first + max(n_grid) - 1.
VarianceCurve wlln_variance_curve(const CovarianceTable& table, double g_bound,
                                  const std::vector<std::int64_t>& n_grid);

// ---------------------------------------------------------------------------
// Strong law
// ---------------------------------------------------------------------------

struct CycleStats {
    std::size_t cycles = 0;
    double length_mean = 0.0;
    double length_variance = 0.0;
    double length_second_moment = 0.0;
    /// D_l = D_l^0 - sum_{j in cycle} mu_j(g).
    double centred_sum_mean = 0.0;
    double centred_sum_variance = 0.0;
};

struct LLNReport {
    std::vector<std::int64_t> n_grid;
    /// gaps[r][i]: replication r at n_grid[i].
    std::vector<std::vector<double>> gaps;
    std::vector<double> max_abs_gap;
    /// Cesaro mean of mu_k(g) at each grid point.
    std::vector<double> cesaro;
    /// Mean over replications of N(n) / n.
    std::vector<double> regeneration_rate;
    /// Pooled over replications.
    CycleStats cycle_stats;
    std::vector<CycleStats> per_replication;
    /// Partial sums of Var(D_l) / l^2 with the variance estimated across
    /// replications for each cycle index l (needs >= 2 replications).
    std::vector<double> kolmogorov_partial_sums;
    std::uint64_t seed = 0;
    std::size_t replications = 0;
};

/// Log-spaced horizons 1, 2, 5, 10, ... up to and including `steps`.
/// Throws std::invalid_argument for steps <= 0.
std::vector<std::int64_t> default_n_grid(std::int64_t steps);

/// Runs `replications` split chains from the point x at time 0 (replication r
/// uses stream (seed, r)) and records the gap
///   (1/n) sum_{k<n} g(X_k) - (1/n) sum_{k<n} mu_k(g)
/// on the grid. `mean_g[k]` is mu_k(g) and must cover k < max(n_grid).
LLNReport slln_run(const SplitModel& model, std::span<const double> mean_g, const Observable& g,
                   std::size_t x, std::vector<std::int64_t> n_grid, std::uint64_t seed,
                   std::size_t replications, unsigned workers = 1);

/// Same with mu_k(g) from an invariant family, and an optional random start
/// (the equilibrium case draws X_0 from mu_0).
LLNReport slln_run(const SplitModel& model, const InvariantFamily& family, const Observable& g,
                   const ChainStart& start, std::vector<std::int64_t> n_grid, std::uint64_t seed,
                   std::size_t replications, unsigned workers = 1);

/// (1/n) sum_{k<n} mu_k(g) on the grid. Throws std::out_of_range if some
/// mu_k with k < max(n_grid) is missing.
std::vector<double> cesaro_invariant_mean(const InvariantFamily& family,
                                          const Eigen::Ref<const Eigen::VectorXd>& g,
                                          const std::vector<std::int64_t>& n_grid);

/// Per-bin means of L_l^2 over consecutive cycle-index bins, for the uniform
/// second-moment check.
struct SecondMomentBins {
    std::vector<double> bin_means;
    double global_mean = 0.0;
    /// Standard error of a bin mean under the pooled variance.
    double bin_stderr = 0.0;
    double max_z = 0.0;
};

SecondMomentBins second_moment_bins(std::span<const std::int64_t> lengths, std::size_t bins);

// ---------------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------------

enum class CouplingMode {
    /// Both chains read the same (U^X, U^delta) each step.
    SharedStream,
    /// Shared U^X; chain b rings its bell with its own uniform until the
    /// chains merge, so a joint bell inside C(R) has probability beta^2.
    IndependentBells,
};

struct CouplingResult {
    bool coalesced = false;
    /// First t with delta^a_t = delta^b_t = 1 (-1 if none).
    std::int64_t joint_regeneration = -1;
    /// First t from which the two paths agree in (X, delta) for good (-1 if
    /// they never merge within the horizon).
    std::int64_t coupling_time = -1;
    /// Paths agree at every t after the joint regeneration.
    bool paths_equal_after = false;
    std::vector<SplitState> path_a;
    std::vector<SplitState> path_b;
};

/// Two split chains from time 0 driven by one uniform stream; at the first
/// joint bell both draw the same nu sample and share all randomness after.
CouplingResult coalescing_couple(const SplitModel& model, std::size_t start_a,
                                 const ChainStart& start_b, std::int64_t steps,
                                 std::uint64_t seed,
                                 CouplingMode mode = CouplingMode::IndependentBells);

struct CouplingExperiment {
    std::vector<std::int64_t> coupling_times;  ///< -1 where no coalescence
    std::size_t coalesced = 0;
    std::size_t paths_equal = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Replication r uses stream (seed, r).
CouplingExperiment coupling_experiment(const SplitModel& model, std::size_t start_a,
                                       const ChainStart& start_b, std::int64_t steps,
                                       std::uint64_t seed, std::size_t replications,
                                       CouplingMode mode = CouplingMode::IndependentBells,
                                       unsigned workers = 1);

}  // namespace tilln
