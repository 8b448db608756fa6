#include "tilln/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace tilln {

namespace {

void validate_weights(const std::vector<double>& w) {
    if (w.empty()) throw std::invalid_argument("probability measure has no states");
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
            throw std::invalid_argument("probability weight " + std::to_string(i) +
                                        " is negative or not finite");
        }
        total += w[i];
    }
    if (std::abs(total - 1.0) > ProbMeasure::kMassTolerance) {
        throw std::invalid_argument("probability weights sum to " + std::to_string(total));
    }
}

}  // namespace

ProbMeasure::ProbMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
    validate_weights(weights_);
}

ProbMeasure::ProbMeasure(const Eigen::Ref<const Eigen::VectorXd>& weights)
    : weights_(weights.data(), weights.data() + weights.size()) {
    validate_weights(weights_);
}

ProbMeasure ProbMeasure::dirac(std::size_t size, std::size_t at) {
    if (at >= size) throw std::out_of_range("dirac mass outside the state list");
    std::vector<double> w(size, 0.0);
    w[at] = 1.0;
    return ProbMeasure(std::move(w));
}

ProbMeasure ProbMeasure::uniform(std::size_t size) {
    return ProbMeasure(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbMeasure ProbMeasure::normalized(const Eigen::Ref<const Eigen::VectorXd>& weights) {
    Eigen::VectorXd w = weights.cwiseMax(0.0);
    const double total = w.sum();
    if (!(total > 0.0)) throw std::invalid_argument("cannot normalize a measure of zero mass");
    w /= total;
    return ProbMeasure(w);
}

double ProbMeasure::integrate(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (static_cast<std::size_t>(f.size()) != weights_.size()) {
        throw std::invalid_argument("integrand length differs from the state count");
    }
    return vector().dot(f);
}

std::size_t ProbMeasure::inverse_cdf(double u) const {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] <= 0.0) continue;
        acc += weights_[i];
        last_positive = i;
        if (u <= acc) return i;
    }
    // u beyond the rounded total mass
    return last_positive;
}

ProbMeasure EmpiricalMeasure::histogram(std::span<const State> points) const {
    if (samples_.empty()) throw std::invalid_argument("empty empirical measure");
    std::map<State, std::size_t> index;
    for (std::size_t i = 0; i < points.size(); ++i) index.emplace(points[i], i);
    std::vector<double> counts(points.size(), 0.0);
    for (const auto& s : samples_) {
        auto it = index.find(s);
        if (it == index.end()) throw std::invalid_argument("sample outside the finite support");
        counts[it->second] += 1.0;
    }
    const double n = static_cast<double>(samples_.size());
    for (auto& c : counts) c /= n;
    return ProbMeasure::normalized(Eigen::Map<const Eigen::VectorXd>(
        counts.data(), static_cast<Eigen::Index>(counts.size())));
}

double tv_distance(const Eigen::Ref<const Eigen::VectorXd>& mu,
                   const Eigen::Ref<const Eigen::VectorXd>& nu) {
    if (mu.size() != nu.size()) throw std::invalid_argument("tv_distance: dimension mismatch");
    return (mu - nu).cwiseAbs().sum();
}

double tv_distance(const ProbMeasure& mu, const ProbMeasure& nu) {
    return tv_distance(mu.vector(), nu.vector());
}

double weighted_norm(const Eigen::Ref<const Eigen::VectorXd>& phi,
                     const Eigen::Ref<const Eigen::VectorXd>& V) {
    if (phi.size() != V.size()) throw std::invalid_argument("weighted_norm: dimension mismatch");
    double out = 0.0;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        out = std::max(out, std::abs(phi[i]) / (1.0 + V[i]));
    }
    return out;
}

}  // namespace tilln
