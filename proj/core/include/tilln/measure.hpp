#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tilln {

/// Point of a general state space. Finite models use a one-element vector
/// holding the numeric value of the state label.
using State = std::vector<double>;

/// Probability vector over the states of a finite model.
class ProbMeasure {
public:
    static constexpr double kMassTolerance = 1e-12;

    ProbMeasure() = default;

    /// Throws std::invalid_argument unless weights are nonnegative and sum to
    /// one within kMassTolerance.
    explicit ProbMeasure(std::vector<double> weights);
    explicit ProbMeasure(const Eigen::Ref<const Eigen::VectorXd>& weights);

    static ProbMeasure dirac(std::size_t size, std::size_t at);
    static ProbMeasure uniform(std::size_t size);

    /// Clamps round-off negatives to zero and rescales to unit mass before
    /// validating. For measures produced by exact arithmetic on stochastic
    /// matrices.
    static ProbMeasure normalized(const Eigen::Ref<const Eigen::VectorXd>& weights);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }
    Eigen::Map<const Eigen::VectorXd> vector() const {
        return {weights_.data(), static_cast<Eigen::Index>(weights_.size())};
    }

    /// Integral of a tabulated function.
    double integrate(const Eigen::Ref<const Eigen::VectorXd>& f) const;

    /// Index sampled by inverse CDF at u in (0,1).
    std::size_t inverse_cdf(double u) const;

    friend bool operator==(const ProbMeasure&, const ProbMeasure&) = default;

private:
    std::vector<double> weights_;
};

/// Equal-weight sample of states; keeps its size so tolerances can scale
/// with 1/sqrt(N).
class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(std::vector<State> samples) : samples_(std::move(samples)) {}

    std::size_t sample_count() const { return samples_.size(); }
    const std::vector<State>& samples() const { return samples_; }

    /// Histogram over the finite support `points` (matched exactly).
    /// Throws std::invalid_argument on a sample outside the support.
    ProbMeasure histogram(std::span<const State> points) const;

private:
    std::vector<State> samples_;
};

/// Total variation under the factor-2 convention: sup_A - inf_A of the signed
/// difference, i.e. the L1 distance; range [0, 2] for probability vectors.
double tv_distance(const ProbMeasure& mu, const ProbMeasure& nu);
double tv_distance(const Eigen::Ref<const Eigen::VectorXd>& mu,
                   const Eigen::Ref<const Eigen::VectorXd>& nu);

/// max_x |phi(x)| / (1 + V(x)).
double weighted_norm(const Eigen::Ref<const Eigen::VectorXd>& phi,
                     const Eigen::Ref<const Eigen::VectorXd>& V);

}  // namespace tilln
