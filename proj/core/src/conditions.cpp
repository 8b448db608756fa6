#include "tilln/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tilln {

namespace {

void require_length(const FiniteKernelFamily& fam, const Eigen::Ref<const Eigen::VectorXd>& V) {
    if (static_cast<std::size_t>(V.size()) != fam.state_count()) {
        throw std::invalid_argument("V length differs from the state count");
    }
}

}  // namespace

void DriftSpec::validate() const {
    std::vector<std::string> errors;
    if (!(gamma > 0.0 && gamma < 1.0)) errors.emplace_back("gamma out of range (0,1)");
    if (!(C > 0.0)) errors.emplace_back("C must be positive");
    if (errors.empty() && !(R > r_threshold())) {
        std::ostringstream msg;
        msg << "R must satisfy R > C/(1-gamma)^2 = " << r_threshold();
        errors.push_back(msg.str());
    }
    bool any_finite = false;
    for (Eigen::Index i = 0; i < V.size(); ++i) {
        if (std::isnan(V[i]) || V[i] < 0.0) errors.emplace_back("V must take values in [0, inf]");
        if (std::isinf(V[i]) && !allow_infinite) {
            errors.emplace_back("V is infinite at state " + std::to_string(i) +
                                " without allow_infinite");
        }
        if (std::isfinite(V[i])) any_finite = true;
    }
    if (!any_finite) errors.emplace_back("V is infinite everywhere");
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
        throw std::invalid_argument(msg);
    }
}

std::vector<bool> small_set(const Eigen::Ref<const Eigen::VectorXd>& V, double R) {
    std::vector<bool> out(static_cast<std::size_t>(V.size()));
    for (Eigen::Index i = 0; i < V.size(); ++i) out[static_cast<std::size_t>(i)] = V[i] <= R;
    return out;
}

DriftReport check_drift(const FiniteKernelFamily& fam, const DriftSpec& spec,
                        const TimeWindow& window) {
    require_length(fam, spec.V);
    if (window.empty()) throw std::invalid_argument("drift window is empty");
    for (Eigen::Index i = 0; i < spec.V.size(); ++i) {
        if (!std::isfinite(spec.V[i]) && !spec.allow_infinite) {
            throw std::invalid_argument("V is not finite at state " + fam.label(static_cast<std::size_t>(i)));
        }
    }
    DriftReport report;
    report.worst_slack = -std::numeric_limits<double>::infinity();
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    for (TimeIndex n = window.first; n <= window.last; ++n) {
        const Eigen::MatrixXd P = fam.step(n - 1);
        for (Eigen::Index x = 0; x < d; ++x) {
            if (!std::isfinite(spec.V[x])) continue;
            double lhs = 0.0;
            for (Eigen::Index y = 0; y < d; ++y) {
                if (P(x, y) > 0.0) lhs += P(x, y) * spec.V[y];
            }
            const double slack = lhs - (spec.gamma * spec.V[x] + spec.C);
            if (slack > report.worst_slack) {
                report.worst_slack = slack;
                report.worst_time = n;
                report.worst_state = static_cast<std::size_t>(x);
            }
        }
    }
    report.ok = report.worst_slack <= kMinorizationTolerance;
    return report;
}

DriftReport check_drift(const SamplerKernelFamily& fam,
                        const std::function<double(const State&)>& V, double gamma, double C,
                        const std::vector<State>& sites, const TimeWindow& window,
                        std::size_t samples, UniformStream& rng) {
    if (window.empty()) throw std::invalid_argument("drift window is empty");
    if (samples < 2) throw std::invalid_argument("Monte Carlo drift check needs >= 2 samples");
    DriftReport report;
    report.worst_slack = -std::numeric_limits<double>::infinity();
    report.ok = true;
    for (TimeIndex n = window.first; n <= window.last; ++n) {
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const double vx = V(sites[s]);
            if (!std::isfinite(vx)) continue;
            double mean = 0.0;
            double m2 = 0.0;
            for (std::size_t i = 0; i < samples; ++i) {
                const double v = V(fam.draw(n - 1, sites[s], rng));
                const double delta = v - mean;
                mean += delta / static_cast<double>(i + 1);
                m2 += delta * (v - mean);
            }
            const double se = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
            const double slack = mean - (gamma * vx + C);
            if (slack - 3.0 * se > 0.0) report.ok = false;
            if (slack > report.worst_slack) {
                report.worst_slack = slack;
                report.worst_time = n;
                report.worst_state = s;
                report.confidence_radius = 3.0 * se;
            }
        }
    }
    return report;
}

std::optional<DoeblinCertificate> find_doeblin_certificate(
    const FiniteKernelFamily& fam, double R, const Eigen::Ref<const Eigen::VectorXd>& V,
    const TimeWindow& window) {
    require_length(fam, V);
    if (window.empty()) throw std::invalid_argument("certificate window is empty");
    const auto small = small_set(V, R);
    if (std::none_of(small.begin(), small.end(), [](bool b) { return b; })) {
        throw std::invalid_argument("small set C(R) is empty");
    }
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    Eigen::VectorXd colmin = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
    for (TimeIndex n = window.first; n <= window.last; ++n) {
        const Eigen::MatrixXd P = fam.step(n - 1);
        for (Eigen::Index x = 0; x < d; ++x) {
            if (!small[static_cast<std::size_t>(x)]) continue;
            colmin = colmin.cwiseMin(P.row(x).transpose());
        }
    }
    const double beta = colmin.sum();
    if (!(beta > 0.0)) return std::nullopt;
    DoeblinCertificate cert;
    cert.beta = std::min(beta, 1.0);
    cert.nu = ProbMeasure::normalized(colmin / beta);
    cert.R = R;
    cert.window = window;
    return cert;
}

DoeblinReport verify_doeblin(const FiniteKernelFamily& fam, const DoeblinCertificate& cert,
                             const Eigen::Ref<const Eigen::VectorXd>& V) {
    require_length(fam, V);
    if (cert.window.empty()) throw std::invalid_argument("certificate window is empty");
    if (cert.nu.size() != fam.state_count()) throw std::invalid_argument("nu length differs from the state count");
    const auto small = small_set(V, cert.R);
    const Eigen::VectorXd floor = cert.beta * cert.nu.vector();
    DoeblinReport report;
    report.worst_slack = std::numeric_limits<double>::infinity();
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    for (TimeIndex n = cert.window.first; n <= cert.window.last; ++n) {
        const Eigen::MatrixXd P = fam.step(n - 1);
        for (Eigen::Index x = 0; x < d; ++x) {
            if (!small[static_cast<std::size_t>(x)]) continue;
            for (Eigen::Index y = 0; y < d; ++y) {
                const double slack = P(x, y) - floor[y];
                if (slack < report.worst_slack) {
                    report.worst_slack = slack;
                    report.worst_time = n;
                    report.worst_state = static_cast<std::size_t>(x);
                    report.worst_target = static_cast<std::size_t>(y);
                }
            }
        }
    }
    report.ok = cert.beta > 0.0 && cert.beta <= 1.0 && report.worst_slack >= -kMinorizationTolerance;
    return report;
}

DoeblinReport verify_doeblin_analytic(const FiniteKernelFamily& fam,
                                      const DoeblinCertificate& cert,
                                      const Eigen::Ref<const Eigen::VectorXd>& V) {
    require_length(fam, V);
    const auto& lower = fam.entry_lower_bounds();
    if (!lower) throw std::logic_error("family has no analytic entry bounds");
    const auto small = small_set(V, cert.R);
    const Eigen::VectorXd floor = cert.beta * cert.nu.vector();
    DoeblinReport report;
    report.worst_slack = std::numeric_limits<double>::infinity();
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    for (Eigen::Index x = 0; x < d; ++x) {
        if (!small[static_cast<std::size_t>(x)]) continue;
        for (Eigen::Index y = 0; y < d; ++y) {
            const double slack = (*lower)(x, y) - floor[y];
            if (slack < report.worst_slack) {
                report.worst_slack = slack;
                report.worst_state = static_cast<std::size_t>(x);
                report.worst_target = static_cast<std::size_t>(y);
            }
        }
    }
    report.ok = cert.beta > 0.0 && cert.beta <= 1.0 && report.worst_slack >= -kMinorizationTolerance;
    return report;
}

ContractionCertificate contraction_from_doeblin(const DoeblinCertificate& cert) {
    ContractionCertificate out;
    out.n0 = 1;
    out.delta = cert.beta;
    out.R = 2.0 * cert.R;
    out.window = cert.window;
    return out;
}

DobrushinReport dobrushin_pair_bound(const FiniteKernelFamily& fam, int n0, double R,
                                     const Eigen::Ref<const Eigen::VectorXd>& V,
                                     const TimeWindow& window) {
    require_length(fam, V);
    if (n0 < 1) throw std::invalid_argument("n0 must be >= 1");
    if (window.empty()) throw std::invalid_argument("window is empty");
    const auto d = static_cast<Eigen::Index>(fam.state_count());
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (Eigen::Index x = 0; x < d; ++x) {
        for (Eigen::Index y = x; y < d; ++y) {
            if (V[x] + V[y] <= R) pairs.emplace_back(x, y);
        }
    }
    if (pairs.empty()) throw std::invalid_argument("pair set {V(x)+V(y) <= R} is empty");
    DobrushinReport report;
    report.worst_time = window.first;
    for (TimeIndex n = window.first; n <= window.last; ++n) {
        const Eigen::MatrixXd P = compose_interval(fam, n - n0, n);
        for (const auto& [x, y] : pairs) {
            const double tv = (P.row(x) - P.row(y)).cwiseAbs().sum();
            if (tv > report.max_tv) {
                report.max_tv = tv;
                report.worst_time = n;
                report.worst_x = static_cast<std::size_t>(x);
                report.worst_y = static_cast<std::size_t>(y);
            }
        }
    }
    report.implied_delta = 1.0 - report.max_tv / 2.0;
    return report;
}

}  // namespace tilln
