#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tilln/kernel.hpp"

namespace tilln {

/// Drift (Lyapunov) data: sum_y P(n-1,x,n,y) V(y) <= gamma V(x) + C.
///
/// V may take the value +infinity only when allow_infinite is set.
struct DriftSpec {
    Eigen::VectorXd V;
    double gamma = 0.5;
    double C = 1.0;
    double R = 0.0;
    bool allow_infinite = false;

    /// C' = C / (1 - gamma).
    double c_prime() const { return C / (1.0 - gamma); }
    /// rho = gamma + C'/R; below one whenever R > C / (1 - gamma)^2.
    double rho() const { return gamma + c_prime() / R; }
    /// Smallest admissible R is strictly above this value.
    double r_threshold() const { return C / ((1.0 - gamma) * (1.0 - gamma)); }

    /// Throws std::invalid_argument listing every violated constraint.
    void validate() const;
};

/// Sublevel set C(R) = {x : V(x) <= R}.
std::vector<bool> small_set(const Eigen::Ref<const Eigen::VectorXd>& V, double R);

struct DoeblinCertificate {
    double beta = 0.0;
    ProbMeasure nu;
    double R = 0.0;
    /// Times n at which P(n-1, x, n, .) >= beta nu was established.
    TimeWindow window;
    /// Set for user-supplied certificates on sampler kernels.
    bool trusted_unverified = false;
};

struct ContractionCertificate {
    int n0 = 1;
    double delta = 0.0;
    /// Pair-set level: pairs with V(x) + V(y) <= R.
    double R = 0.0;
    TimeWindow window;
};

struct DriftReport {
    bool ok = false;
    /// max over sites of lhs - rhs.
    double worst_slack = 0.0;
    TimeIndex worst_time = 0;
    std::size_t worst_state = 0;
    /// Half-width of the Monte Carlo confidence band at the worst site; zero
    /// for exact checks.
    double confidence_radius = 0.0;
};

/// Exact drift check for times n in `window` (kernel P(n-1, ., n, .)).
/// Throws std::invalid_argument on non-finite V without allow_infinite.
DriftReport check_drift(const FiniteKernelFamily& fam, const DriftSpec& spec,
                        const TimeWindow& window);

/// Monte Carlo drift check for a sampler kernel at the given sites.
/// ok iff the estimate plus three standard errors stays under the bound.
DriftReport check_drift(const SamplerKernelFamily& fam,
                        const std::function<double(const State&)>& V, double gamma, double C,
                        const std::vector<State>& sites, const TimeWindow& window,
                        std::size_t samples, UniformStream& rng);

/// Column-minimum minorization over C(R) and the window; std::nullopt when
/// every column minimum vanishes. Throws std::invalid_argument if C(R) is empty.
std::optional<DoeblinCertificate> find_doeblin_certificate(
    const FiniteKernelFamily& fam, double R, const Eigen::Ref<const Eigen::VectorXd>& V,
    const TimeWindow& window);

struct DoeblinReport {
    bool ok = false;
    /// min over x in C(R), y, n of P(n-1,x,n,y) - beta nu(y).
    double worst_slack = 0.0;
    TimeIndex worst_time = 0;
    std::size_t worst_state = 0;
    std::size_t worst_target = 0;
};

/// Residual tolerance for minorization checks.
inline constexpr double kMinorizationTolerance = 1e-12;

/// Throws std::invalid_argument for an empty window.
DoeblinReport verify_doeblin(const FiniteKernelFamily& fam, const DoeblinCertificate& cert,
                             const Eigen::Ref<const Eigen::VectorXd>& V);

/// Checks the certificate against the family's entry lower bounds, which
/// covers every n in Z. Throws std::logic_error if the family has none.
DoeblinReport verify_doeblin_analytic(const FiniteKernelFamily& fam,
                                      const DoeblinCertificate& cert,
                                      const Eigen::Ref<const Eigen::VectorXd>& V);

/// One-step Doeblin bound gives contraction with delta = beta.
ContractionCertificate contraction_from_doeblin(const DoeblinCertificate& cert);

struct DobrushinReport {
    double max_tv = 0.0;
    double implied_delta = 1.0;
    TimeIndex worst_time = 0;
    std::size_t worst_x = 0;
    std::size_t worst_y = 0;
};

/// Max TV between rows of P(n - n0, ., n, .) over pairs with V(x)+V(y) <= R.
/// Throws std::invalid_argument if the pair set is empty.
DobrushinReport dobrushin_pair_bound(const FiniteKernelFamily& fam, int n0, double R,
                                     const Eigen::Ref<const Eigen::VectorXd>& V,
                                     const TimeWindow& window);

}  // namespace tilln
