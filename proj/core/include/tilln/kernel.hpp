#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tilln/measure.hpp"
#include "tilln/rng.hpp"

namespace tilln {

/// Time step on the integer line.
using TimeIndex = std::int64_t;

/// Inclusive range of time indices.
struct TimeWindow {
    TimeIndex first = 0;
    TimeIndex last = 0;

    bool empty() const { return last < first; }
    bool contains(TimeIndex n) const { return first <= n && n <= last; }
    std::int64_t length() const { return empty() ? 0 : last - first + 1; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Family of one-step transition matrices over a fixed finite state list.
///
/// The matrix stored under key n is the step from time n to n + 1, i.e. the
/// kernel P(n, x, n+1, .). Steps are produced on demand by a generator and
/// checked for stochasticity on every evaluation.
class FiniteKernelFamily {
public:
    using Generator = std::function<Eigen::MatrixXd(TimeIndex)>;

    static constexpr double kRowTolerance = 1e-12;

    /// `definition` is a canonical description of the generator; its hash keys
    /// caches, so two families with equal definitions must have equal steps.
    FiniteKernelFamily(std::vector<std::string> labels, Generator generator,
                       std::string definition,
                       std::optional<TimeWindow> window = std::nullopt);

    std::size_t state_count() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

    /// Throws std::out_of_range for an unknown label.
    std::size_t index_of(std::string_view label) const;

    /// Numeric value of state i: the label parsed as a number when possible,
    /// else i itself. Observables and Lyapunov functions are evaluated on it.
    double state_value(std::size_t i) const { return values_.at(i); }
    State state_point(std::size_t i) const { return State{values_.at(i)}; }
    std::vector<State> state_points() const;

    /// P(n, ., n+1, .). Throws std::out_of_range outside the validity window
    /// and std::domain_error if the generated matrix is not row-stochastic.
    Eigen::MatrixXd step(TimeIndex n) const;

    const std::optional<TimeWindow>& window() const { return window_; }
    const std::string& definition() const { return definition_; }

    /// Hex SHA-256 of the definition string.
    std::string content_hash() const;

    /// Optional entrywise lower bounds valid for every n in Z. Lets
    /// certificates be checked on all of Z instead of a finite window.
    const std::optional<Eigen::MatrixXd>& entry_lower_bounds() const { return lower_bounds_; }
    void set_entry_lower_bounds(Eigen::MatrixXd bounds);

private:
    std::vector<std::string> labels_;
    std::vector<double> values_;
    Generator generator_;
    std::string definition_;
    std::optional<TimeWindow> window_;
    std::optional<Eigen::MatrixXd> lower_bounds_;
};

/// Kernel family known only through a sampler on real vectors.
struct SamplerKernelFamily {
    using Sampler = std::function<State(TimeIndex, const State&, UniformStream&)>;
    /// Density of P(n, x, n+1, .) at y with respect to a fixed reference measure.
    using Density = std::function<double(TimeIndex, const State& x, const State& y)>;

    std::size_t dimension = 1;
    Sampler sample;
    std::optional<Density> density;
    std::optional<TimeWindow> window;

    State draw(TimeIndex n, const State& x, UniformStream& rng) const;
};

using KernelFamily = std::variant<FiniteKernelFamily, SamplerKernelFamily>;

/// Wraps a finite family as a sampler (inverse CDF on one uniform per draw);
/// states are the one-element vectors of state_point().
SamplerKernelFamily as_sampler(const FiniteKernelFamily& fam);

/// Bounded observable g with a certified sup-norm bound.
class Observable {
public:
    using Function = std::function<double(const State&)>;

    Observable(Function fn, double bound, std::string description = "custom");

    /// g(x) = numeric value of x.
    static Observable identity(double bound);
    static Observable constant(double c);
    /// Table indexed by finite state; the bound is the max absolute entry.
    static Observable table(std::vector<double> values);

    double operator()(const State& x) const { return fn_(x); }
    double bound() const { return bound_; }
    const std::string& description() const { return description_; }

    /// Values at each state of `fam`. Throws std::domain_error if some
    /// |g(x)| exceeds the bound.
    Eigen::VectorXd tabulate(const FiniteKernelFamily& fam) const;

private:
    Function fn_;
    double bound_;
    std::string description_;
    std::optional<std::vector<double>> table_;
};

/// Exact row P(n, x, n+1, .).
ProbMeasure eval_step_kernel(const FiniteKernelFamily& fam, TimeIndex n, std::size_t x);
ProbMeasure eval_step_kernel(const FiniteKernelFamily& fam, TimeIndex n, std::string_view label);

/// Empirical measure of `samples` draws from P(n, x, n+1, .).
EmpiricalMeasure eval_step_kernel(const SamplerKernelFamily& fam, TimeIndex n, const State& x,
                                  std::size_t samples, UniformStream& rng);

/// P_{m,n} = P_{m,m+1} ... P_{n-1,n}; identity for m == n.
Eigen::MatrixXd compose_interval(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n);
Eigen::MatrixXd compose_interval(const KernelFamily& fam, TimeIndex m, TimeIndex n);

/// Left action mu P_{m,n}.
ProbMeasure pushforward(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                        const ProbMeasure& mu);

/// x -> sum_y P_{m,n}(x, y) f(y).
Eigen::VectorXd semigroup_apply(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                                const Eigen::Ref<const Eigen::VectorXd>& f);
Eigen::VectorXd semigroup_apply(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                                const Observable& g);

}  // namespace tilln
