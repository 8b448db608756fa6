#include <gtest/gtest.h>

#include <cmath>

#include "tilln/kernel.hpp"
#include "tilln/models.hpp"

using namespace tilln;

namespace {

double a_of(double t) { return 1.0 / 3.0 + std::sin(t) / 6.0; }
double b_of(double t) { return 0.25 + std::cos(t) / 8.0; }

FiniteKernelFamily two_state() { return builtin_model("two_state_sinusoid").family; }

}  // namespace

TEST(EvalStepKernel, ExampleRows) {
    const auto fam = two_state();
    const auto r1 = eval_step_kernel(fam, -1, std::string_view("1"));
    EXPECT_NEAR(r1[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r1[1], 1.0 / 3.0, 1e-15);
    const auto r2 = eval_step_kernel(fam, -1, std::string_view("2"));
    EXPECT_NEAR(r2[0], 3.0 / 8.0, 1e-15);
    EXPECT_NEAR(r2[1], 5.0 / 8.0, 1e-15);
    const auto r0 = eval_step_kernel(fam, 0, std::size_t{0});
    EXPECT_NEAR(r0[0], 1.0 - a_of(1.0), 1e-15);
    EXPECT_NEAR(r0[1], a_of(1.0), 1e-15);
    EXPECT_NEAR(r0[1], 0.4735785, 5e-8);
}

TEST(EvalStepKernel, Errors) {
    const auto fam = two_state();
    EXPECT_THROW(eval_step_kernel(fam, 0, std::string_view("7")), std::out_of_range);
    FiniteKernelFamily windowed({"a", "b"}, [](TimeIndex) { return Eigen::Matrix2d::Identity().eval(); },
                                "test:identity", TimeWindow{0, 3});
    EXPECT_NO_THROW(windowed.step(3));
    EXPECT_THROW(windowed.step(4), std::out_of_range);
    EXPECT_THROW(windowed.step(-1), std::out_of_range);
}

TEST(FiniteKernelFamily, RejectsNonStochastic) {
    FiniteKernelFamily bad({"1", "2"}, [](TimeIndex) {
        Eigen::MatrixXd P(2, 2);
        P << 0.5, 0.6, 0.5, 0.5;
        return P;
    }, "test:bad");
    EXPECT_THROW(bad.step(0), std::domain_error);
    FiniteKernelFamily negative({"1", "2"}, [](TimeIndex) {
        Eigen::MatrixXd P(2, 2);
        P << 1.1, -0.1, 0.5, 0.5;
        return P;
    }, "test:negative");
    EXPECT_THROW(negative.step(0), std::domain_error);
    FiniteKernelFamily shape({"1", "2"}, [](TimeIndex) { return Eigen::MatrixXd::Identity(3, 3).eval(); },
                             "test:shape");
    EXPECT_THROW(shape.step(0), std::domain_error);
}

TEST(FiniteKernelFamily, LabelsAndHash) {
    const auto fam = two_state();
    EXPECT_EQ(fam.index_of("2"), 1u);
    EXPECT_DOUBLE_EQ(fam.state_value(1), 2.0);
    EXPECT_EQ(fam.content_hash().size(), 64u);
    EXPECT_EQ(fam.content_hash(), two_state().content_hash());
    EXPECT_NE(fam.content_hash(), builtin_model("three_state_cycle").family.content_hash());
    FiniteKernelFamily named({"low", "high"}, [](TimeIndex) { return Eigen::Matrix2d::Identity().eval(); },
                             "test:named");
    EXPECT_DOUBLE_EQ(named.state_value(1), 1.0);
}

TEST(ComposeInterval, IdentityAndProducts) {
    const auto fam = two_state();
    EXPECT_TRUE(compose_interval(fam, 5, 5).isApprox(Eigen::Matrix2d::Identity()));
    EXPECT_TRUE(compose_interval(fam, -1, 0).isApprox(fam.step(-1)));

    // hand product of the steps keyed -2 and -1 (coefficients at t = -1, 0)
    const double a1 = a_of(-1), b1 = b_of(-1), a2 = a_of(0), b2 = b_of(0);
    const double p11 = (1 - a1) * (1 - a2) + a1 * b2;
    const double p12 = (1 - a1) * a2 + a1 * (1 - b2);
    const double p21 = b1 * (1 - a2) + (1 - b1) * b2;
    const double p22 = b1 * a2 + (1 - b1) * (1 - b2);
    const auto P = compose_interval(fam, -2, 0);
    EXPECT_NEAR(P(0, 0), p11, 1e-15);
    EXPECT_NEAR(P(0, 1), p12, 1e-15);
    EXPECT_NEAR(P(1, 0), p21, 1e-15);
    EXPECT_NEAR(P(1, 1), p22, 1e-15);
    EXPECT_NEAR(P.row(0).sum(), 1.0, 1e-12);
    EXPECT_NEAR(P.row(1).sum(), 1.0, 1e-12);
    EXPECT_THROW(compose_interval(fam, 1, 0), std::invalid_argument);
}

TEST(ComposeInterval, SamplerKindRejected) {
    const KernelFamily sampler = as_sampler(two_state());
    EXPECT_THROW(compose_interval(sampler, 0, 1), std::invalid_argument);
    const KernelFamily finite = two_state();
    EXPECT_NO_THROW(compose_interval(finite, 0, 1));
}

TEST(Pushforward, Examples) {
    const auto fam = two_state();
    const auto e1 = ProbMeasure::dirac(2, 0);
    EXPECT_EQ(pushforward(fam, 3, 3, e1), e1);
    const auto r = pushforward(fam, -1, 0, e1);
    EXPECT_NEAR(r[0], 2.0 / 3.0, 1e-15);
    const auto h = pushforward(fam, -1, 0, ProbMeasure::uniform(2));
    EXPECT_NEAR(h[0], 25.0 / 48.0, 1e-15);
    EXPECT_NEAR(h[1], 23.0 / 48.0, 1e-15);
    EXPECT_THROW(pushforward(fam, -1, 0, ProbMeasure::uniform(3)), std::invalid_argument);
}

TEST(SemigroupApply, Examples) {
    const auto fam = two_state();
    const auto ones = semigroup_apply(fam, -7, 3, Eigen::Vector2d(1, 1));
    EXPECT_NEAR(ones[0], 1.0, 1e-12);
    EXPECT_NEAR(ones[1], 1.0, 1e-12);
    EXPECT_TRUE(semigroup_apply(fam, 2, 2, Eigen::Vector2d(3, -1)).isApprox(Eigen::Vector2d(3, -1)));
    const auto v = semigroup_apply(fam, -1, 0, Observable::identity(2.0));
    EXPECT_NEAR(v[0], 4.0 / 3.0, 1e-15);
    EXPECT_NEAR(v[1], 13.0 / 8.0, 1e-15);
    EXPECT_THROW(semigroup_apply(fam, -1, 0, Eigen::Vector3d(1, 1, 1)), std::invalid_argument);
}

TEST(Observable, TabulateAndBound) {
    const auto fam = two_state();
    EXPECT_TRUE(Observable::identity(2.0).tabulate(fam).isApprox(Eigen::Vector2d(1, 2)));
    EXPECT_THROW(Observable::identity(1.5).tabulate(fam), std::domain_error);
    EXPECT_DOUBLE_EQ(Observable::constant(-3).bound(), 3.0);
    const auto t = Observable::table({0.5, -4.0});
    EXPECT_DOUBLE_EQ(t.bound(), 4.0);
    EXPECT_TRUE(t.tabulate(fam).isApprox(Eigen::Vector2d(0.5, -4.0)));
    EXPECT_THROW(Observable::table({1.0, 2.0, 3.0}).tabulate(fam), std::invalid_argument);
}

TEST(SamplerKernel, MatchesExactRowWithinThreeSigma) {
    const auto fam = two_state();
    const auto sampler = as_sampler(fam);
    UniformStream rng(11);
    const std::size_t N = 100000;
    const auto emp = eval_step_kernel(sampler, 0, fam.state_point(0), N, rng);
    EXPECT_EQ(emp.sample_count(), N);
    const auto h = emp.histogram(fam.state_points());
    const double p = fam.step(0)(0, 1);
    EXPECT_LT(std::abs(h[1] - p), 3.0 * std::sqrt(p * (1 - p) / N));
}
