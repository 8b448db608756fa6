#pragma once

#include <map>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tilln/kernel.hpp"

namespace tilln {

/// Backward product failed to reach rank one within the allowed depth.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackwardSolution {
    ProbMeasure mu;
    int depth = 0;
    /// Max TV between two rows of P_{k-depth, k} at acceptance.
    double residual = 0.0;
};

/// mu_k as the common row of P_{k-n, k} for n large: multiplies earlier steps
/// onto the left until every pair of rows is within `tol` in TV.
BackwardSolution solve_backward(const FiniteKernelFamily& fam, TimeIndex k, double tol,
                                int max_depth);

/// Memo for solve_backward keyed by (kernel content hash, k, tol).
/// Concurrent lookups share a lock; inserts are exclusive.
class InvariantCache {
public:
    BackwardSolution solve(const FiniteKernelFamily& fam, TimeIndex k, double tol,
                           int max_depth);
    std::size_t size() const;

private:
    using Key = std::tuple<std::string, TimeIndex, double>;
    mutable std::shared_mutex mutex_;
    std::map<Key, BackwardSolution> entries_;
};

/// Invariant measures mu_k on a contiguous range of times.
class InvariantFamily {
public:
    InvariantFamily() = default;
    InvariantFamily(TimeIndex first, Eigen::MatrixXd masses, int depth_used, double residual,
                    std::vector<int> depths = {}, std::vector<double> residuals = {});

    bool empty() const { return masses_.cols() == 0; }
    std::size_t size() const { return static_cast<std::size_t>(masses_.cols()); }
    std::size_t state_count() const { return static_cast<std::size_t>(masses_.rows()); }
    TimeIndex first() const { return first_; }
    TimeIndex last() const { return first_ + static_cast<TimeIndex>(size()) - 1; }
    bool contains(TimeIndex k) const { return !empty() && first_ <= k && k <= last(); }

    /// Throws std::out_of_range for a missing time index.
    ProbMeasure mu(TimeIndex k) const;
    Eigen::Ref<const Eigen::VectorXd> column(TimeIndex k) const;

    /// Largest backward depth and residual over stored k.
    int depth_used() const { return depth_used_; }
    double residual() const { return residual_; }
    /// Per-k depth and residual, when recorded.
    int depth_at(TimeIndex k) const;
    double residual_at(TimeIndex k) const;

    /// mu_k(g) for every stored k.
    Eigen::VectorXd integrals(const Eigen::Ref<const Eigen::VectorXd>& g) const;

    /// Copy with mu_k replaced (test and fault-injection hook; no validation
    /// beyond the length).
    InvariantFamily with_masses(TimeIndex k, const Eigen::Ref<const Eigen::VectorXd>& masses) const;

private:
    TimeIndex first_ = 0;
    Eigen::MatrixXd masses_;
    int depth_used_ = 0;
    double residual_ = 0.0;
    std::vector<int> depths_;
    std::vector<double> residuals_;
};

/// solve_backward for every k in `range`.
InvariantFamily solve_family(const FiniteKernelFamily& fam, const TimeWindow& range, double tol,
                             int max_depth, InvariantCache* cache = nullptr);

/// solve_backward at range.first, then mu_{k+1} = mu_k P_{k,k+1} across the
/// range. Pushforward does not increase TV distance, so every measure is
/// within the starting residual of the backward limit. Depths are recorded as
/// 0 past the first time.
InvariantFamily solve_family_forward(const FiniteKernelFamily& fam, const TimeWindow& range,
                                     double tol, int max_depth);

struct InvarianceReport {
    double max_tv_violation = 0.0;
    TimeIndex worst_m = 0;
    TimeIndex worst_n = 0;
};

/// max over (m, n) of TV(mu_m P_{m,n}, mu_n). Throws std::out_of_range for a
/// time outside the family.
InvarianceReport check_invariance(const FiniteKernelFamily& fam, const InvariantFamily& family,
                                  const std::vector<std::pair<TimeIndex, TimeIndex>>& pairs);

/// Consecutive pairs (k, k+1) over the family's range.
std::vector<std::pair<TimeIndex, TimeIndex>> consecutive_pairs(const InvariantFamily& family);

struct VMoments {
    std::map<TimeIndex, double> per_time;
    double sup = 0.0;
};

VMoments v_moment(const InvariantFamily& family, const Eigen::Ref<const Eigen::VectorXd>& V);

/// Fitted constants of exponential ergodicity,
///   TV(P(n-m, x, n, .), mu_n) <= M_tilde alpha^m (1 + V(x)).
/// M_weighted is the matching constant for the weighted-norm form,
///   |P_{n-m,n} phi|_V <= M_weighted alpha^m |phi|_V for phi centred at mu_n.
struct ErgodicityFit {
    double alpha = 0.0;
    double M_tilde = 0.0;
    double M_weighted = 0.0;
    int m_first = 0;
    int m_last = 0;
    /// RMS residual of the log-linear least squares.
    double residual_norm = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
    /// max over sampled (x, n) of the normalized distance, per m.
    std::vector<double> envelope;
};

/// Fits log d(m, x, n) = log[TV(row x of P_{n-m,n}, mu_n) / (1 + V(x))]
/// against m for m in [m_first, m_last] and n in sample_times, using points
/// above max(1e-14, 10 x the family residual). M_tilde is inflated until the
/// bound covers every sample.
/// When no sample is above the floor, alpha = 0 and M_tilde = 1.
/// Throws std::invalid_argument if all usable points share a single m.
ErgodicityFit fit_ergodic_rate(const FiniteKernelFamily& fam, const InvariantFamily& family,
                               const Eigen::Ref<const Eigen::VectorXd>& V, int m_first,
                               int m_last, const std::vector<TimeIndex>& sample_times);

}  // namespace tilln
