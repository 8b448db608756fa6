#include <gtest/gtest.h>

#include <cmath>

#include "tilln/conditions.hpp"
#include "tilln/models.hpp"

using namespace tilln;

TEST(BuiltinModels, TwoStateEntryBounds) {
    const auto m = builtin_model("two_state_sinusoid");
    const auto& lower = *m.family.entry_lower_bounds();
    for (TimeIndex n = -10000; n <= 10000; ++n) {
        const auto P = m.family.step(n - 1);
        const double a = P(0, 1), b = P(1, 0);
        ASSERT_GE(a, 1.0 / 6.0 - 1e-15);
        ASSERT_LE(a, 0.5 + 1e-15);
        ASSERT_GE(b, 0.125 - 1e-15);
        ASSERT_LE(b, 0.375 + 1e-15);
        ASSERT_TRUE(((P - lower).array() >= -1e-15).all()) << "n=" << n;
    }
}

TEST(BuiltinModels, ThreeStateCycle) {
    const auto m = builtin_model("three_state_cycle");
    const auto P = m.family.step(12);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(P.row(i).sum(), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ((P.row(0) - P.row(1)).cwiseAbs().sum(), 1.0);
}

TEST(BuiltinModels, StaircaseDriftAndSmallSet) {
    const auto m = builtin_model("four_state_staircase");
    EXPECT_NO_THROW(m.drift.validate());
    EXPECT_LT(m.drift.rho(), 1.0);
    EXPECT_NEAR(m.drift.rho(), 5.0 / 6.0, 1e-15);
    const auto small = small_set(m.drift.V, m.drift.R);
    EXPECT_EQ(small, (std::vector<bool>{true, true, false, false}));
    const auto r = check_drift(m.family, m.drift, TimeWindow{-500, 500});
    EXPECT_TRUE(r.ok);
    EXPECT_LT(r.worst_slack, 0.0);
}

TEST(BuiltinModels, UnknownName) {
    EXPECT_THROW(builtin_model("five_state"), std::invalid_argument);
    EXPECT_EQ(builtin_model_names().size(), 3u);
}

TEST(LoadModel, RowsWithWaveformsAndRest) {
    const auto m = load_model(R"({
        "name": "wave2", "states": ["1", "2"],
        "rows": [["rest", {"wave": "sin", "offset": 0.3333333333333333, "amplitude": 0.16666666666666666, "shift": 1}],
                 [{"wave": "cos", "offset": 0.25, "amplitude": 0.125, "shift": 1}, "rest"]],
        "drift": {"V": 2, "gamma": 0.5, "C": 1, "R": 5}
    })");
    EXPECT_EQ(m.name, "wave2");
    const auto ref = builtin_model("two_state_sinusoid");
    for (TimeIndex n = -20; n <= 20; ++n) {
        ASSERT_TRUE(m.family.step(n).isApprox(ref.family.step(n), 1e-15)) << n;
    }
    EXPECT_DOUBLE_EQ(m.drift.R, 5.0);
}

TEST(LoadModel, MatricesWithWindow) {
    const auto m = load_model(R"({
        "states": ["a", "b"], "window": [0, 1],
        "matrices": [[[1, 0], [0.5, 0.5]], [[0.2, 0.8], [0, 1]]],
        "drift": {"V": [1, "inf"], "gamma": 0.5, "C": 1, "R": 5, "allow_infinite": true}
    })");
    EXPECT_DOUBLE_EQ(m.family.step(1)(0, 1), 0.8);
    EXPECT_THROW(m.family.step(2), std::out_of_range);
    EXPECT_TRUE(std::isinf(m.drift.V[1]));
    EXPECT_NO_THROW(m.drift.validate());
}

TEST(LoadModel, Errors) {
    EXPECT_THROW(load_model("{"), std::invalid_argument);
    EXPECT_THROW(load_model(R"({"states": ["1"]})"), std::invalid_argument);
    EXPECT_THROW(load_model(R"({"states": ["1", "2"], "rows": [[1, 0]]})"), std::invalid_argument);
    EXPECT_THROW(load_model(R"({"states": ["1"], "rows": [[{"wave": "square"}]]})"), std::invalid_argument);
    EXPECT_THROW(load_model(R"({"states": ["1", "2"], "rows": [["rest", "rest"], [0, 1]]})"),
                 std::invalid_argument);
}
