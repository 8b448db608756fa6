#include "tilln/invariant.hpp"

#include "line_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tilln {

namespace {

double max_row_pair_tv(const Eigen::MatrixXd& M) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < M.rows(); ++j) {
            out = std::max(out, (M.row(i) - M.row(j)).cwiseAbs().sum());
        }
    }
    return out;
}

}  // namespace

BackwardSolution solve_backward(const FiniteKernelFamily& fam, TimeIndex k, double tol,
                                int max_depth) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    Eigen::MatrixXd M = fam.step(k - 1);
    int depth = 1;
    double residual = max_row_pair_tv(M);
    while (residual > tol) {
        if (depth >= max_depth) {
            throw NonConvergence("backward product at k=" + std::to_string(k) +
                                 " still has row spread " + std::to_string(residual) +
                                 " at depth " + std::to_string(depth));
        }
        M = fam.step(k - depth - 1) * M;
        ++depth;
        residual = max_row_pair_tv(M);
    }
    return {ProbMeasure::normalized(M.row(0).transpose()), depth, residual};
}

BackwardSolution InvariantCache::solve(const FiniteKernelFamily& fam, TimeIndex k, double tol,
                                       int max_depth) {
    Key key{fam.content_hash(), k, tol};
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto solution = solve_backward(fam, k, tol, max_depth);
    std::unique_lock lock(mutex_);
    return entries_.emplace(std::move(key), std::move(solution)).first->second;
}

std::size_t InvariantCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

InvariantFamily::InvariantFamily(TimeIndex first, Eigen::MatrixXd masses, int depth_used,
                                 double residual, std::vector<int> depths,
                                 std::vector<double> residuals)
    : first_(first),
      masses_(std::move(masses)),
      depth_used_(depth_used),
      residual_(residual),
      depths_(std::move(depths)),
      residuals_(std::move(residuals)) {}

ProbMeasure InvariantFamily::mu(TimeIndex k) const {
    return ProbMeasure(Eigen::VectorXd(column(k)));
}

Eigen::Ref<const Eigen::VectorXd> InvariantFamily::column(TimeIndex k) const {
    if (!contains(k)) throw std::out_of_range("no invariant measure stored at k=" + std::to_string(k));
    return masses_.col(k - first_);
}

int InvariantFamily::depth_at(TimeIndex k) const {
    if (!contains(k) || depths_.empty()) throw std::out_of_range("no depth recorded");
    return depths_[static_cast<std::size_t>(k - first_)];
}

double InvariantFamily::residual_at(TimeIndex k) const {
    if (!contains(k) || residuals_.empty()) throw std::out_of_range("no residual recorded");
    return residuals_[static_cast<std::size_t>(k - first_)];
}

Eigen::VectorXd InvariantFamily::integrals(const Eigen::Ref<const Eigen::VectorXd>& g) const {
    if (g.size() != masses_.rows()) throw std::invalid_argument("integrand length differs from the state count");
    return masses_.transpose() * g;
}

InvariantFamily InvariantFamily::with_masses(TimeIndex k,
                                             const Eigen::Ref<const Eigen::VectorXd>& masses) const {
    if (!contains(k)) throw std::out_of_range("no invariant measure stored at k=" + std::to_string(k));
    if (masses.size() != masses_.rows()) throw std::invalid_argument("length differs from the state count");
    InvariantFamily out = *this;
    out.masses_.col(k - first_) = masses;
    return out;
}

InvariantFamily solve_family(const FiniteKernelFamily& fam, const TimeWindow& range, double tol,
                             int max_depth, InvariantCache* cache) {
    if (range.empty()) return {};
    const auto count = static_cast<std::size_t>(range.length());
    Eigen::MatrixXd masses(static_cast<Eigen::Index>(fam.state_count()), static_cast<Eigen::Index>(count));
    std::vector<int> depths(count);
    std::vector<double> residuals(count);
    int depth_used = 0;
    double residual = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const TimeIndex k = range.first + static_cast<TimeIndex>(i);
        const auto sol = cache ? cache->solve(fam, k, tol, max_depth) : solve_backward(fam, k, tol, max_depth);
        masses.col(static_cast<Eigen::Index>(i)) = sol.mu.vector();
        depths[i] = sol.depth;
        residuals[i] = sol.residual;
        depth_used = std::max(depth_used, sol.depth);
        residual = std::max(residual, sol.residual);
    }
    return InvariantFamily(range.first, std::move(masses), depth_used, residual, std::move(depths),
                           std::move(residuals));
}

InvariantFamily solve_family_forward(const FiniteKernelFamily& fam, const TimeWindow& range,
                                     double tol, int max_depth) {
    if (range.empty()) return {};
    const auto count = static_cast<std::size_t>(range.length());
    const auto start = solve_backward(fam, range.first, tol, max_depth);
    Eigen::MatrixXd masses(static_cast<Eigen::Index>(fam.state_count()), static_cast<Eigen::Index>(count));
    Eigen::RowVectorXd mu = start.mu.vector().transpose();
    masses.col(0) = mu.transpose();
    for (std::size_t i = 1; i < count; ++i) {
        mu = mu * fam.step(range.first + static_cast<TimeIndex>(i) - 1);
        mu /= mu.sum();
        masses.col(static_cast<Eigen::Index>(i)) = mu.transpose();
    }
    std::vector<int> depths(count, 0);
    depths[0] = start.depth;
    return InvariantFamily(range.first, std::move(masses), start.depth, start.residual, std::move(depths),
                           std::vector<double>(count, start.residual));
}

InvarianceReport check_invariance(const FiniteKernelFamily& fam, const InvariantFamily& family,
                                  const std::vector<std::pair<TimeIndex, TimeIndex>>& pairs) {
    InvarianceReport report;
    for (const auto& [m, n] : pairs) {
        const Eigen::VectorXd start = family.column(m);
        const Eigen::VectorXd target = family.column(n);
        if (m > n) throw std::invalid_argument("invariance pair with m > n");
        Eigen::RowVectorXd row = start.transpose();
        for (TimeIndex k = m; k < n; ++k) row = row * fam.step(k);
        const double tv = tv_distance(row.transpose(), target);
        if (tv > report.max_tv_violation) {
            report.max_tv_violation = tv;
            report.worst_m = m;
            report.worst_n = n;
        }
    }
    return report;
}

std::vector<std::pair<TimeIndex, TimeIndex>> consecutive_pairs(const InvariantFamily& family) {
    std::vector<std::pair<TimeIndex, TimeIndex>> out;
    if (family.size() < 2) return out;
    for (TimeIndex k = family.first(); k < family.last(); ++k) out.emplace_back(k, k + 1);
    return out;
}

VMoments v_moment(const InvariantFamily& family, const Eigen::Ref<const Eigen::VectorXd>& V) {
    VMoments out;
    if (family.empty()) return out;
    const Eigen::VectorXd m = family.integrals(V);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        out.per_time[family.first() + i] = m[i];
        out.sup = i == 0 ? m[i] : std::max(out.sup, m[i]);
    }
    return out;
}

ErgodicityFit fit_ergodic_rate(const FiniteKernelFamily& fam, const InvariantFamily& family,
                               const Eigen::Ref<const Eigen::VectorXd>& V, int m_first,
                               int m_last, const std::vector<TimeIndex>& sample_times) {
    if (m_first < 1 || m_last < m_first) throw std::invalid_argument("invalid m range");
    if (static_cast<std::size_t>(V.size()) != fam.state_count()) {
        throw std::invalid_argument("V length differs from the state count");
    }
    // distances to mu_n are exact only up to the family's residual
    const double kFloor = std::max(1e-14, 10.0 * family.residual());
    ErgodicityFit fit;
    fit.m_first = m_first;
    fit.m_last = m_last;
    fit.envelope.assign(static_cast<std::size_t>(m_last - m_first + 1), 0.0);

    struct Point {
        int m;
        double d;
    };
    std::vector<Point> points;
    for (TimeIndex n : sample_times) {
        const Eigen::VectorXd mu_n = family.column(n);
        // P_{n-m,n} for increasing m, extended on the left one step at a time
        Eigen::MatrixXd P = compose_interval(fam, n - m_first, n);
        for (int m = m_first; m <= m_last; ++m) {
            if (m > m_first) P = fam.step(n - m) * P;
            for (Eigen::Index x = 0; x < P.rows(); ++x) {
                const double d = tv_distance(P.row(x).transpose(), mu_n) / (1.0 + V[x]);
                auto& env = fit.envelope[static_cast<std::size_t>(m - m_first)];
                env = std::max(env, d);
                if (d > kFloor) points.push_back({m, d});
            }
        }
    }
    fit.points = points.size();
    if (points.empty()) {
        fit.alpha = 0.0;
        fit.M_tilde = 1.0;
        fit.M_weighted = 1.0 + V.maxCoeff();
        return fit;
    }
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        xs.push_back(static_cast<double>(p.m));
        ys.push_back(std::log(p.d));
    }
    if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) {
        throw std::invalid_argument("all usable distances share one m; widen the m range");
    }
    const auto line = detail::least_squares(xs, ys);
    fit.alpha = std::exp(line.slope);
    fit.residual_norm = line.rms;
    fit.slope_stderr = line.slope_stderr;
    double log_m = line.intercept;
    for (const auto& p : points) log_m = std::max(log_m, std::log(p.d) - line.slope * p.m);
    fit.M_tilde = std::exp(log_m);
    // |P phi(x)| <= TV(P(x,.), mu_n) |phi|_inf <= M_tilde alpha^m (1+V(x)) (1 + max V) |phi|_V
    fit.M_weighted = fit.M_tilde * (1.0 + V.maxCoeff());
    return fit;
}

}  // namespace tilln
