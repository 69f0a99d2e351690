#include "drlsvi/core_types.hpp"
#include "drlsvi/environments.hpp"
#include "drlsvi/spec_io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace drlsvi {
namespace {

bool mentions(const std::vector<std::string>& report, const std::string& needle) {
    for (const auto& line : report) {
        if (line.find(needle) != std::string::npos) return true;
    }
    return false;
}

TEST(ValidateSpec, SimulatedSourceIsValid) {
    SimulatedMdpParams p;
    p.delta = 0.3;
    p.xi = {0.025, 0.025, 0.025, 0.025};
    const auto report = validate_spec(build_simulated_mdp(p));
    EXPECT_TRUE(report.empty()) << report.front();
}

TEST(ValidateSpec, FlagsUnnormalizedFactor) {
    auto spec = build_simulated_mdp({});
    spec.mu[0][0] *= 0.9;
    EXPECT_TRUE(mentions(validate_spec(spec), "factor distribution (0,0) not normalized"));
}

TEST(ValidateSpec, FlagsLargeTheta) {
    auto spec = build_simulated_mdp({});
    spec.theta[0] = Eigen::Vector4d(2, 2, 2, 2);
    EXPECT_TRUE(mentions(validate_spec(spec), "exceeds"));
}

TEST(ValidateSpec, FlagsBrokenFeatureSum) {
    auto spec = build_simulated_mdp({});
    std::vector<double> table(spec.features.table().begin(), spec.features.table().end());
    table[0] += 0.01;
    spec.features = FeatureMap(spec.num_states, spec.num_actions, 4, table, spec.features.flags());
    EXPECT_FALSE(validate_spec(spec).empty());
}

TEST(ValidateSpec, FlagsFailStateWithReward) {
    auto spec = build_simulated_mdp({});
    spec.fail_state = simulated::x5;  // x5 pays reward 1
    EXPECT_FALSE(validate_spec(spec).empty());
}

TEST(FailState, ExtensionOfSimulatedSpec) {
    auto spec = build_simulated_mdp({});
    spec.fail_state.reset();
    const auto ext = extend_with_fail_state(spec);
    ASSERT_EQ(ext.dimension(), 5);
    const int sf = *ext.fail_state;
    EXPECT_EQ(sf, spec.num_states);
    for (int a = 0; a < ext.num_actions; ++a) {
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(5);
        e1[0] = 1.0;
        EXPECT_EQ(ext.features(sf, a), e1);
        for (int h = 0; h < ext.horizon; ++h) EXPECT_EQ(ext.reward(h, sf, a), 0.0);
    }
    for (int s = 0; s < spec.num_states; ++s) {
        for (int a = 0; a < spec.num_actions; ++a) {
            EXPECT_EQ(ext.features(s, a)[0], 0.0);
            EXPECT_NEAR(ext.features(s, a).sum(), 1.0, kExactTolerance);
        }
    }
    EXPECT_TRUE(validate_spec(ext).empty());
}

TEST(FailState, RejectsExistingFailState) {
    EXPECT_THROW(extend_with_fail_state(build_simulated_mdp({})), std::invalid_argument);
}

TEST(FailState, RandomSpecsStayValid) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto spec = testing::random_tiny_spec(rng, 3, 2, 2, 3);
        ASSERT_TRUE(validate_spec(spec).empty());
        EXPECT_TRUE(validate_spec(extend_with_fail_state(spec)).empty());
    }
}

TEST(InducedKernel, RowsAreDistributions) {
    std::mt19937_64 rng(3);
    const auto spec = testing::random_tiny_spec(rng, 4, 3, 3, 4);
    const auto mdp = induce_finite_mdp(spec);
    for (int h = 0; h < spec.horizon; ++h) {
        for (int s = 0; s < spec.num_states; ++s) {
            for (int a = 0; a < spec.num_actions; ++a) {
                const auto& row = mdp.next(h, s, a);
                double total = 0.0;
                for (double p : row.probs) {
                    EXPECT_GE(p, -1e-12);
                    total += p;
                }
                EXPECT_NEAR(total, 1.0, kComposedTolerance);
            }
        }
    }
}

TEST(UncertaintyLevels, RejectsOutOfRange) {
    UncertaintyLevels rho(3, 4);
    EXPECT_TRUE(rho.all_zero());
    rho.set(0, 3, 0.5);
    EXPECT_EQ(rho.at(0, 3), 0.5);
    EXPECT_FALSE(rho.all_zero());
    EXPECT_THROW(rho.set(0, 0, 1.5), std::invalid_argument);
    EXPECT_THROW(rho.set(0, 0, -0.1), std::invalid_argument);
}

TEST(SpecIo, RoundTrip) {
    const auto spec = build_simulated_mdp({});
    const auto back = spec_from_json(nlohmann::json::parse(spec_to_json(spec).dump()));
    EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
}

TEST(SpecIo, BuiltinFeatureName) {
    auto doc = spec_to_json(build_simulated_mdp({}));
    doc["features"] = "simulated_five_state";
    doc["feature_params"] = {{"delta", 0.3}, {"xi_l1", 0.1}};
    const auto spec = spec_from_json(doc);
    EXPECT_EQ(spec.features(simulated::x1, simulated::kAllPlus)[3], 0.4);
}

TEST(SpecIo, ExplicitDynamicsRoundTrip) {
    PutOptionParams p;
    p.horizon = 3;
    p.anchors = 4;
    p.initial_grid_points = 3;
    const auto spec = build_put_option(p).spec;
    const auto back = spec_from_json(spec_to_json(spec));
    EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
}

}  // namespace
}  // namespace drlsvi
