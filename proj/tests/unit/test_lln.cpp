#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tilln/lln.hpp"
#include "tilln/models.hpp"

using namespace tilln;

namespace {

const FiniteKernelFamily& two_state() {
    static const FiniteKernelFamily fam = builtin_model("two_state_sinusoid").family;
    return fam;
}

SplitModel two_state_model() {
    auto m = builtin_model("two_state_sinusoid");
    DoeblinCertificate cert;
    cert.beta = 0.25;
    cert.nu = ProbMeasure({0.5, 0.5});
    cert.R = m.drift.R;
    cert.window = {-100, 500000};
    return SplitModel(m.family, cert, m.drift);
}

SplitModel staircase_model() {
    auto m = builtin_model("four_state_staircase");
    auto cert = find_doeblin_certificate(m.family, m.drift.R, m.drift.V, {-100, 5000});
    return SplitModel(m.family, *cert, m.drift);
}

const InvariantFamily& two_state_family() {
    static const InvariantFamily family = solve_family(two_state(), TimeWindow{0, 9999}, 1e-12, 200);
    return family;
}

}  // namespace

TEST(TabooTail, TwoStateSingleStep) {
    const auto s = taboo_tail_exact(two_state(), {true, false}, 0, 1, 1);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], 1.0);
    EXPECT_NEAR(s[1], 1.0 - (0.25 + std::cos(1.0) / 8.0), 1e-15);
    EXPECT_NEAR(s[1], 0.682462, 5e-7);
}

TEST(TabooTail, Conventions) {
    EXPECT_EQ(taboo_tail_exact(two_state(), {true, false}, 5, 0, 0), std::vector<double>{1.0});
    const auto all = taboo_tail_exact(two_state(), {true, true}, 0, 0, 6);
    EXPECT_EQ(all[0], 1.0);
    for (std::size_t n = 1; n < all.size(); ++n) EXPECT_EQ(all[n], 0.0);
    EXPECT_THROW(taboo_tail_exact(two_state(), {true, false}, 0, 2, 3), std::out_of_range);
    EXPECT_THROW(taboo_tail_exact(two_state(), {true}, 0, 0, 3), std::invalid_argument);
    EXPECT_THROW(taboo_tail_exact(two_state(), {true, false}, 0, 0, -1), std::invalid_argument);
}

// Frozen from tests/oracles/two_state.py (scalar recursion over the two
// states outside C = {1, 2}).
TEST(TabooTail, StaircaseMatchesOracle) {
    const auto fam = builtin_model("four_state_staircase").family;
    const std::vector<bool> C{true, true, false, false};
    const auto from3 = taboo_tail_exact(fam, C, 0, 2, 20);
    const std::vector<double> oracle3{1, 0.35, 0.15381103238605923, 0.06957572428588174,
                                      0.0310654154981438, 0.013681681007812207};
    for (std::size_t n = 0; n < oracle3.size(); ++n) EXPECT_NEAR(from3[n], oracle3[n], 1e-15 * (1 + oracle3[n]));
    EXPECT_NEAR(from3[20], 8.520587016215809e-08, 1e-20);

    const auto from4 = taboo_tail_exact(fam, C, 0, 3, 20);
    const std::vector<double> oracle4{1, 0.6, 0.285, 0.13179591921035777, 0.059442643740372086,
                                      0.02626758365923982};
    for (std::size_t n = 0; n < oracle4.size(); ++n) EXPECT_NEAR(from4[n], oracle4[n], 1e-15 * (1 + oracle4[n]));
    EXPECT_NEAR(from4[20], 1.6368780674069547e-07, 1e-20);
}

TEST(TabooTail, MatchesSplitChainSurvival) {
    const auto model = staircase_model();
    const auto exact = taboo_tail_exact(model.base(), model.small(), 0, 3, 20);
    const std::size_t N = 20000;
    std::vector<double> alive(21, 0.0);
    for (std::size_t r = 0; r < N; ++r) {
        const auto run = simulate_split_chain(model, std::size_t{3}, 0, 20, stream_seed(404, r));
        alive[0] += 1.0;
        for (std::size_t n = 1; n <= 20; ++n) {
            if (model.in_small_set(run.trajectory.states[n])) break;
            alive[n] += 1.0;
        }
    }
    for (std::size_t n = 0; n <= 20; ++n) {
        const double p = exact[n];
        const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(N));
        EXPECT_LE(std::abs(alive[n] / static_cast<double>(N) - p), 3 * sigma + 1e-12) << "n=" << n;
    }
}

TEST(TailBound, StaircaseHoldsEverywhere) {
    const auto m = builtin_model("four_state_staircase");
    std::vector<TailSite> sites;
    for (TimeIndex s = -50; s <= 50; s += 5) {
        for (std::size_t x = 0; x < 4; ++x) sites.push_back({s, x});
    }
    const auto r = check_drift_tail_bound(m.family, m.drift, sites, 30);
    EXPECT_TRUE(r.ok);
    EXPECT_NEAR(r.rho, 5.0 / 6.0, 1e-15);
    EXPECT_EQ(r.sites_checked, 42u);
    EXPECT_EQ(r.small_set_sites, 42u);
    EXPECT_GT(r.worst_ratio, 0.0);
    EXPECT_LE(r.worst_ratio, 1.0);
}

TEST(TailBound, UnverifiedDriftRejected) {
    auto m = builtin_model("four_state_staircase");
    m.drift.V[3] = 100.0;
    EXPECT_THROW(check_drift_tail_bound(m.family, m.drift, {{0, 2}}, 5), std::invalid_argument);
    EXPECT_THROW(check_drift_tail_bound(builtin_model("four_state_staircase").family,
                                        builtin_model("four_state_staircase").drift, {}, 5),
                 std::invalid_argument);
}

TEST(TailFit, GeometricReturnTimes) {
    const auto run = simulate_split_chain(two_state_model(), std::size_t{0}, 0, 400000, 21);
    const auto fit = tail_fit(run.log.lengths());
    EXPECT_GE(fit.samples, 99000u);
    EXPECT_NEAR(fit.zeta, 0.75, 0.02);
    EXPECT_NEAR(fit.theta, -std::log(fit.zeta), 1e-15);
    for (int n = fit.fit_first; n <= fit.fit_last; ++n) {
        EXPECT_LE(fit.empirical_survival[static_cast<std::size_t>(n)], fit.K * std::pow(fit.zeta, n) * (1 + 1e-12));
    }
}

TEST(TailFit, DeterministicReturnTimeFails) {
    const std::vector<std::int64_t> fives(100, 5);
    EXPECT_THROW(tail_fit(fives), FitFailure);
    const std::vector<std::int64_t> few(10, 3);
    EXPECT_THROW(tail_fit(few), std::invalid_argument);
}

TEST(TailFit, StaircaseCurveBelowRho) {
    const auto m = builtin_model("four_state_staircase");
    const auto survival = taboo_tail_exact(m.family, small_set(m.drift.V, m.drift.R), 0, 3, 40);
    const auto fit = tail_fit_curve(survival);
    EXPECT_LE(fit.zeta, m.drift.rho());
    EXPECT_GT(fit.zeta, 0.0);
}

// Values from tests/oracles/two_state.py, chain started at mu_0, g(x) = x.
TEST(WllnCovariance, MatchesOracle) {
    const auto table = wlln_covariance_exact(two_state(), two_state_family(), Observable::identity(2.0),
                                             TimeWindow{0, 1999});
    EXPECT_NEAR(table.at(0, 3), 0.0085425313153972213, 1e-10);
    EXPECT_NEAR(table.at(3, 0), table.at(0, 3), 0.0);
    for (TimeIndex i = 0; i < 50; ++i) EXPECT_GE(table.at(i, i), 0.0);
    EXPECT_LE(table.alpha_fit, 17.0 / 24.0 + 0.02);
    EXPECT_GT(table.alpha_fit, 0.0);

    std::vector<std::int64_t> grid(2000);
    std::iota(grid.begin(), grid.end(), 1);
    const auto curve = wlln_variance_curve(table, 2.0, grid);
    EXPECT_NEAR(curve.var_over_n[9], 0.49252449885156863, 1e-9);
    EXPECT_NEAR(curve.var_over_n[1999], 0.56649623844962405, 1e-9);
    EXPECT_NEAR(curve.sup, 0.56659228216143431, 1e-9);
    EXPECT_LE(curve.sup, curve.bound);
    EXPECT_NEAR(curve.bound, 8.0 + 2 * table.C_fit * table.alpha_fit / (1 - table.alpha_fit), 1e-12);
}

TEST(WllnCovariance, AgreesWithErgodicityRate) {
    const auto window = TimeWindow{0, 400};
    const auto family = solve_family(two_state(), TimeWindow{-60, 400}, 1e-12, 200);
    const auto erg = fit_ergodic_rate(two_state(), family, Eigen::Vector2d(2, 2), 1, 25, {0, 100, 200, 300, 400});
    const auto table = wlln_covariance_exact(two_state(), family, Observable::identity(2.0), window, &erg);
    EXPECT_TRUE(table.alpha_consistent);
}

TEST(WllnCovariance, ConstantObservable) {
    const auto table = wlln_covariance_exact(two_state(), two_state_family(), Observable::constant(3.0),
                                             TimeWindow{0, 99});
    EXPECT_LE(table.cov.cwiseAbs().maxCoeff(), 1e-13);
    const auto curve = wlln_variance_curve(table, 3.0, {1, 10, 100});
    for (double v : curve.var_over_n) EXPECT_NEAR(v, 0.0, 1e-12);

    const auto zero = wlln_covariance_exact(two_state(), two_state_family(), Observable::constant(0.0),
                                            TimeWindow{0, 99});
    EXPECT_EQ(wlln_variance_curve(zero, 0.0, {1, 50, 100}).sup, 0.0);
}

TEST(WllnCovariance, IndependentSummands) {
    FiniteKernelFamily iid({"1", "2"}, [](TimeIndex) {
        Eigen::MatrixXd P(2, 2);
        P << 0.3, 0.7, 0.3, 0.7;
        return P;
    }, "test:iid");
    const auto family = solve_family(iid, TimeWindow{0, 199}, 1e-12, 10);
    const auto table = wlln_covariance_exact(iid, family, Observable::identity(2.0), TimeWindow{0, 199});
    const auto curve = wlln_variance_curve(table, 2.0, {1, 7, 200});
    for (double v : curve.var_over_n) EXPECT_NEAR(v, 0.21, 1e-14);
    EXPECT_EQ(table.alpha_fit, 0.0);
}

TEST(WllnCovariance, Errors) {
    EXPECT_THROW(wlln_covariance_exact(two_state(), two_state_family(), Observable::identity(2.0),
                                       TimeWindow{-1, 10}),
                 std::out_of_range);
    EXPECT_THROW(wlln_covariance_exact(two_state(), two_state_family(), Observable::identity(2.0),
                                       TimeWindow{5, 4}),
                 std::invalid_argument);
    const auto table = wlln_covariance_exact(two_state(), two_state_family(), Observable::identity(2.0),
                                             TimeWindow{0, 9});
    EXPECT_THROW(wlln_variance_curve(table, 2.0, {11}), std::out_of_range);
    EXPECT_THROW(wlln_variance_curve(table, 2.0, {0}), std::invalid_argument);
    EXPECT_TRUE(wlln_variance_curve(table, 2.0, {}).n.empty());
}

TEST(Cesaro, Examples) {
    const auto values = cesaro_invariant_mean(two_state_family(), Eigen::Vector2d(1, 2), {1, 10000});
    EXPECT_NEAR(values[0], 1.0 + 0.47717797461381467, 1e-12);
    EXPECT_NEAR(values[1], 1.5916885738100848, 1e-10);
    EXPECT_GE(values[1], 1.0);
    EXPECT_LE(values[1], 2.0);
    for (double v : cesaro_invariant_mean(two_state_family(), Eigen::Vector2d(4, 4), {1, 5, 77})) {
        EXPECT_NEAR(v, 4.0, 1e-12);
    }
    EXPECT_TRUE(cesaro_invariant_mean(two_state_family(), Eigen::Vector2d(1, 2), {}).empty());
    EXPECT_THROW(cesaro_invariant_mean(two_state_family(), Eigen::Vector2d(1, 2), {10001}), std::out_of_range);
}

TEST(DefaultGrid, DecadesAndEnd) {
    EXPECT_EQ(default_n_grid(1000), (std::vector<std::int64_t>{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000}));
    EXPECT_EQ(default_n_grid(7), (std::vector<std::int64_t>{1, 2, 5, 7}));
    EXPECT_THROW(default_n_grid(0), std::invalid_argument);
}

TEST(Slln, ConstantObservableGapIsExactlyZero) {
    const auto report = slln_run(two_state_model(), two_state_family(), Observable::constant(1.5),
                                 ChainStart{std::size_t{0}}, {10, 1000, 5000}, 3, 2);
    for (const auto& rep : report.gaps) {
        for (double g : rep) EXPECT_EQ(g, 0.0);
    }
}

TEST(Slln, GapsBoundedAndRegenerationRate) {
    const auto report = slln_run(two_state_model(), two_state_family(), Observable::identity(2.0),
                                 ChainStart{std::size_t{0}}, {100, 10000}, 12, 4, 2);
    ASSERT_EQ(report.gaps.size(), 4u);
    for (const auto& rep : report.gaps) {
        for (double g : rep) EXPECT_LE(std::abs(g), 2 * 2.0);
    }
    EXPECT_LE(report.max_abs_gap[1], report.max_abs_gap[0] + 0.05);
    // bells are i.i.d. Bernoulli(1/4) here, averaged over 4 replications
    EXPECT_LE(std::abs(report.regeneration_rate[1] - 0.25), 3 * std::sqrt(0.1875 / 40000.0) + 1e-4);
    EXPECT_NEAR(report.cycle_stats.length_mean, 4.0, 3 * std::sqrt(12.0 / report.cycle_stats.cycles));
    EXPECT_NEAR(report.cesaro[1], 1.5916885738100848, 1e-10);

    ASSERT_FALSE(report.kolmogorov_partial_sums.empty());
    for (std::size_t l = 1; l < report.kolmogorov_partial_sums.size(); ++l) {
        ASSERT_GE(report.kolmogorov_partial_sums[l], report.kolmogorov_partial_sums[l - 1]);
    }
    EXPECT_LE(report.kolmogorov_partial_sums.back(), 2.0 * report.kolmogorov_partial_sums[9]);
}

TEST(Slln, WorkerCountDoesNotChangeResult) {
    const auto a = slln_run(two_state_model(), two_state_family(), Observable::identity(2.0),
                            ChainStart{std::size_t{1}}, {50, 3000}, 77, 5, 1);
    const auto b = slln_run(two_state_model(), two_state_family(), Observable::identity(2.0),
                            ChainStart{std::size_t{1}}, {50, 3000}, 77, 5, 3);
    EXPECT_EQ(a.gaps, b.gaps);
    EXPECT_EQ(a.kolmogorov_partial_sums, b.kolmogorov_partial_sums);
}

TEST(Slln, EquilibriumStart) {
    const auto report = slln_run(two_state_model(), two_state_family(), Observable::identity(2.0),
                                 ChainStart{two_state_family().mu(0)}, {10000}, 5, 4);
    EXPECT_LT(report.max_abs_gap[0], 0.05);
}

TEST(Slln, Errors) {
    auto m = builtin_model("four_state_staircase");
    m.drift.V[3] = std::numeric_limits<double>::infinity();
    m.drift.allow_infinite = true;
    auto cert = find_doeblin_certificate(m.family, m.drift.R, m.drift.V, {0, 100});
    const SplitModel model(m.family, *cert, m.drift);
    const std::vector<double> means(100, 0.0);
    EXPECT_THROW(slln_run(model, means, Observable::identity(4.0), 3, {10}, 1, 1), std::invalid_argument);
    EXPECT_THROW(slln_run(model, means, Observable::identity(4.0), 4, {10}, 1, 1), std::out_of_range);
    EXPECT_THROW(slln_run(model, means, Observable::identity(4.0), 0, {}, 1, 1), std::invalid_argument);
    EXPECT_THROW(slln_run(model, means, Observable::identity(4.0), 0, {101}, 1, 1), std::out_of_range);
    EXPECT_THROW(slln_run(model, means, Observable::identity(4.0), 0, {10}, 1, 0), std::invalid_argument);
    EXPECT_THROW(slln_run(two_state_model(), two_state_family(), Observable::identity(2.0),
                          ChainStart{std::size_t{0}}, {10001}, 1, 1),
                 std::out_of_range);
}

TEST(SecondMoments, GeometricCyclesUniform) {
    const auto run = simulate_split_chain(two_state_model(), std::size_t{0}, 0, 400000, 31);
    const auto bins = second_moment_bins(run.log.lengths(), 10);
    EXPECT_EQ(bins.bin_means.size(), 10u);
    // E[L^2] = Var + mean^2 = 12 + 16 for Geometric(1/4)
    EXPECT_NEAR(bins.global_mean, 28.0, 1.0);
    EXPECT_LT(bins.max_z, 5.0);
    const std::vector<std::int64_t> few{1, 2, 3};
    EXPECT_THROW(second_moment_bins(few, 2), std::invalid_argument);
}

TEST(Coupling, IdenticalStartsSharedStream) {
    const auto r = coalescing_couple(two_state_model(), 1, ChainStart{std::size_t{1}}, 200, 8,
                                     CouplingMode::SharedStream);
    EXPECT_EQ(r.coupling_time, 0);
    EXPECT_TRUE(r.coalesced);
    EXPECT_TRUE(r.paths_equal_after);
    EXPECT_EQ(r.path_a, r.path_b);
}

TEST(Coupling, IndependentBellsDominatedByGeometric) {
    const auto exp = coupling_experiment(two_state_model(), 0, ChainStart{two_state_family().mu(0)}, 1000, 19,
                                         2000);
    EXPECT_EQ(exp.coalesced, 2000u);
    EXPECT_EQ(exp.paths_equal, 2000u);
    // joint bells are Bernoulli(1/16) per step, so E[T] <= 16
    EXPECT_LE(exp.mean, 16.0 + 3.0 * exp.stddev / std::sqrt(2000.0));
    for (auto t : exp.coupling_times) EXPECT_GE(t, 0);
}

TEST(Coupling, NoCoalescenceReported) {
    const auto r = coalescing_couple(two_state_model(), 0, ChainStart{std::size_t{1}}, 0, 1);
    EXPECT_EQ(r.coupling_time, -1);
    EXPECT_THROW(coalescing_couple(two_state_model(), 2, ChainStart{std::size_t{1}}, 10, 1), std::out_of_range);
    EXPECT_THROW(coalescing_couple(two_state_model(), 0, ChainStart{std::size_t{1}}, -1, 1), std::invalid_argument);
}

TEST(Coupling, WorkerCountDoesNotChangeResult) {
    const auto a = coupling_experiment(staircase_model(), 3, ChainStart{std::size_t{0}}, 500, 2, 300,
                                       CouplingMode::IndependentBells, 1);
    const auto b = coupling_experiment(staircase_model(), 3, ChainStart{std::size_t{0}}, 500, 2, 300,
                                       CouplingMode::IndependentBells, 4);
    EXPECT_EQ(a.coupling_times, b.coupling_times);
}
