#include "tilln/kernel.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "tilln/hash.hpp"

namespace tilln {

namespace {

double parse_label_value(const std::string& label, std::size_t index) {
    double v = 0.0;
    const char* begin = label.data();
    const char* end = begin + label.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec == std::errc() && ptr == end) return v;
    return static_cast<double>(index);
}

void check_window(const std::optional<TimeWindow>& window, TimeIndex n) {
    if (window && !window->contains(n)) {
        throw std::out_of_range("time " + std::to_string(n) + " outside the validity window [" +
                                std::to_string(window->first) + ", " +
                                std::to_string(window->last) + "]");
    }
}

}  // namespace

FiniteKernelFamily::FiniteKernelFamily(std::vector<std::string> labels, Generator generator,
                                       std::string definition,
                                       std::optional<TimeWindow> window)
    : labels_(std::move(labels)),
      generator_(std::move(generator)),
      definition_(std::move(definition)),
      window_(window) {
    if (labels_.empty()) throw std::invalid_argument("kernel family needs at least one state");
    if (!generator_) throw std::invalid_argument("kernel family needs a generator");
    if (window_ && window_->empty()) throw std::invalid_argument("empty validity window");
    values_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        values_.push_back(parse_label_value(labels_[i], i));
    }
}

std::size_t FiniteKernelFamily::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) return i;
    }
    throw std::out_of_range("unknown state label '" + std::string(label) + "'");
}

std::vector<State> FiniteKernelFamily::state_points() const {
    std::vector<State> out;
    out.reserve(values_.size());
    for (double v : values_) out.push_back(State{v});
    return out;
}

Eigen::MatrixXd FiniteKernelFamily::step(TimeIndex n) const {
    check_window(window_, n);
    Eigen::MatrixXd P = generator_(n);
    const auto d = static_cast<Eigen::Index>(labels_.size());
    if (P.rows() != d || P.cols() != d) {
        throw std::domain_error("step matrix at time " + std::to_string(n) + " has wrong shape");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double p = P(i, j);
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::domain_error("negative or non-finite entry at time " +
                                        std::to_string(n));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            throw std::domain_error("row " + std::to_string(i) + " at time " + std::to_string(n) +
                                    " sums to " + std::to_string(sum));
        }
    }
    return P;
}

std::string FiniteKernelFamily::content_hash() const { return sha256_hex(definition_); }

void FiniteKernelFamily::set_entry_lower_bounds(Eigen::MatrixXd bounds) {
    const auto d = static_cast<Eigen::Index>(labels_.size());
    if (bounds.rows() != d || bounds.cols() != d) {
        throw std::invalid_argument("entry bounds have wrong shape");
    }
    lower_bounds_ = std::move(bounds);
}

State SamplerKernelFamily::draw(TimeIndex n, const State& x, UniformStream& rng) const {
    check_window(window, n);
    if (!sample) throw std::logic_error("sampler kernel without a sampler");
    return sample(n, x, rng);
}

SamplerKernelFamily as_sampler(const FiniteKernelFamily& fam) {
    SamplerKernelFamily out;
    out.dimension = 1;
    out.window = fam.window();
    auto points = fam.state_points();
    auto lookup = [points](const State& x) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i] == x) return i;
        }
        throw std::out_of_range("state not in the finite model");
    };
    out.sample = [fam, points, lookup](TimeIndex n, const State& x, UniformStream& rng) {
        const auto row = eval_step_kernel(fam, n, lookup(x));
        return points[row.inverse_cdf(rng.next())];
    };
    out.density = [fam, lookup](TimeIndex n, const State& x, const State& y) {
        return fam.step(n)(static_cast<Eigen::Index>(lookup(x)),
                           static_cast<Eigen::Index>(lookup(y)));
    };
    return out;
}

Observable::Observable(Function fn, double bound, std::string description)
    : fn_(std::move(fn)), bound_(bound), description_(std::move(description)) {
    if (!fn_) throw std::invalid_argument("observable without a function");
    if (!(bound_ >= 0.0) || !std::isfinite(bound_)) {
        throw std::invalid_argument("observable bound must be finite and nonnegative");
    }
}

Observable Observable::identity(double bound) {
    return Observable([](const State& x) { return x.at(0); }, bound, "identity");
}

Observable Observable::constant(double c) {
    return Observable([c](const State&) { return c; }, std::abs(c), "constant");
}

Observable Observable::table(std::vector<double> values) {
    double bound = 0.0;
    for (double v : values) bound = std::max(bound, std::abs(v));
    // Tabulated observables are indexed by state position; the function form
    // reads the numeric value as that position.
    Observable g(
        [values](const State& x) {
            const auto i = static_cast<std::size_t>(x.at(0));
            return values.at(i);
        },
        bound, "table");
    g.table_ = std::move(values);
    return g;
}

Eigen::VectorXd Observable::tabulate(const FiniteKernelFamily& fam) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(fam.state_count()));
    if (table_) {
        if (table_->size() != fam.state_count()) {
            throw std::invalid_argument("observable table length differs from the state count");
        }
        for (std::size_t i = 0; i < table_->size(); ++i) out[static_cast<Eigen::Index>(i)] = (*table_)[i];
        return out;
    }
    for (std::size_t i = 0; i < fam.state_count(); ++i) {
        const double v = fn_(fam.state_point(i));
        if (std::abs(v) > bound_ * (1.0 + 1e-12)) {
            throw std::domain_error("observable exceeds its bound at state " + fam.label(i));
        }
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

ProbMeasure eval_step_kernel(const FiniteKernelFamily& fam, TimeIndex n, std::size_t x) {
    if (x >= fam.state_count()) throw std::out_of_range("unknown state index");
    const Eigen::MatrixXd P = fam.step(n);
    return ProbMeasure::normalized(P.row(static_cast<Eigen::Index>(x)).transpose());
}

ProbMeasure eval_step_kernel(const FiniteKernelFamily& fam, TimeIndex n, std::string_view label) {
    return eval_step_kernel(fam, n, fam.index_of(label));
}

EmpiricalMeasure eval_step_kernel(const SamplerKernelFamily& fam, TimeIndex n, const State& x,
                                  std::size_t samples, UniformStream& rng) {
    if (samples == 0) throw std::invalid_argument("sampler evaluation needs a sample count");
    std::vector<State> out;
    out.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) out.push_back(fam.draw(n, x, rng));
    return EmpiricalMeasure(std::move(out));
}

Eigen::MatrixXd compose_interval(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n) {
    if (m > n) throw std::invalid_argument("compose_interval requires m <= n");
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(d, d);
    for (TimeIndex k = m; k < n; ++k) out = out * fam.step(k);
    return out;
}

Eigen::MatrixXd compose_interval(const KernelFamily& fam, TimeIndex m, TimeIndex n) {
    if (const auto* finite = std::get_if<FiniteKernelFamily>(&fam)) {
        return compose_interval(*finite, m, n);
    }
    throw std::invalid_argument("composition is not available for sampler kernels");
}

ProbMeasure pushforward(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                        const ProbMeasure& mu) {
    if (mu.size() != fam.state_count()) throw std::invalid_argument("pushforward: dimension mismatch");
    if (m > n) throw std::invalid_argument("pushforward requires m <= n");
    Eigen::RowVectorXd row = mu.vector().transpose();
    for (TimeIndex k = m; k < n; ++k) row = row * fam.step(k);
    return ProbMeasure::normalized(row.transpose());
}

Eigen::VectorXd semigroup_apply(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                                const Eigen::Ref<const Eigen::VectorXd>& f) {
    if (static_cast<std::size_t>(f.size()) != fam.state_count()) {
        throw std::invalid_argument("semigroup_apply: dimension mismatch");
    }
    if (m > n) throw std::invalid_argument("semigroup_apply requires m <= n");
    Eigen::VectorXd out = f;
    for (TimeIndex k = n - 1; k >= m; --k) out = fam.step(k) * out;
    return out;
}

Eigen::VectorXd semigroup_apply(const FiniteKernelFamily& fam, TimeIndex m, TimeIndex n,
                                const Observable& g) {
    return semigroup_apply(fam, m, n, g.tabulate(fam));
}

}  // namespace tilln
