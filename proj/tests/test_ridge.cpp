#include "drlsvi/ridge.hpp"
#include "drlsvi/tv_duality.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

namespace drlsvi {
namespace {

Eigen::VectorXd unit(int d, int i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    return e;
}

TEST(GramState, FirstInsertIsDiagonal) {
    GramState g(2, 1.0);
    g.insert(unit(2, 0));
    EXPECT_EQ(g.gram(), (Eigen::Matrix2d() << 2, 0, 0, 1).finished());
    EXPECT_NEAR((g.inverse() - (Eigen::Matrix2d() << 0.5, 0, 0, 1).finished()).norm(), 0.0, 1e-15);
}

TEST(GramState, RepeatedInsertMatchesDirectInverse) {
    GramState g(3, 1.0);
    const Eigen::Vector3d phi = Eigen::Vector3d(1, 1, 0).normalized();
    g.insert(phi);
    g.insert(phi);
    const Eigen::MatrixXd direct = g.gram().inverse();
    EXPECT_LT((g.inverse() - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GramState, ZeroVectorOnlyGrowsStorage) {
    GramState g(3, 1.0);
    g.insert(Eigen::Vector3d::Zero());
    EXPECT_EQ(g.size(), 1);
    EXPECT_EQ(g.gram(), Eigen::Matrix3d::Identity());
    EXPECT_EQ(g.inverse(), Eigen::Matrix3d::Identity());
}

TEST(GramState, RejectsBadInput) {
    GramState g(3, 1.0);
    EXPECT_THROW(g.insert(Eigen::Vector2d(1, 0)), std::invalid_argument);
    EXPECT_THROW(g.insert(Eigen::Vector3d(2, 0, 0)), std::invalid_argument);
    EXPECT_THROW(g.insert(Eigen::Vector3d(std::nan(""), 0, 0)), std::invalid_argument);
    EXPECT_THROW(GramState(3, 0.0), std::invalid_argument);
}

TEST(GramState, LongStreamStaysAccurate) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GramState g(5, 1.0);
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXd phi(5);
        for (int i = 0; i < 5; ++i) phi[i] = u(rng);
        g.insert(phi / phi.sum());
        ASSERT_LT(g.identity_residual(), 1e-8);
    }
    EXPECT_LT((g.inverse() - g.gram().inverse()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(g.inverse().isApprox(g.inverse().transpose(), 0.0));
}

TEST(SolveTruncated, Examples) {
    GramState g(3, 1.0);
    EXPECT_EQ(g.solve_truncated({}, 3.0), Eigen::Vector3d::Zero());
    g.insert(unit(3, 0));
    const std::vector<double> targets{1.0};
    EXPECT_NEAR((g.solve_truncated(targets, 3.0) - Eigen::Vector3d(0.5, 0, 0)).norm(), 0.0, 1e-15);
    EXPECT_EQ(g.solve_truncated(targets, 0.0), Eigen::Vector3d::Zero());
}

TEST(DualInputs, SingleSample) {
    GramState g(3, 1.0);
    EXPECT_TRUE(g.dual_inputs({}, 0, 3.0).terms.empty());
    g.insert(unit(3, 0));
    const std::vector<double> targets{1.0};
    const auto list = g.dual_inputs(targets, 0, 3.0);
    ASSERT_EQ(list.terms.size(), 1u);
    EXPECT_NEAR(list.terms[0].coefficient, 0.5, 1e-15);
    EXPECT_EQ(list.terms[0].value, 1.0);
}

TEST(DualInputs, ReproduceTruncatedSolve) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GramState g(4, 1.0);
    std::vector<double> targets;
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd phi(4);
        for (int i = 0; i < 4; ++i) phi[i] = u(rng);
        g.insert(phi / phi.sum());
        targets.push_back(3.0 * u(rng));
    }
    for (double alpha : {0.0, 0.3, 3.0}) {
        const Eigen::VectorXd w = g.solve_truncated(targets, alpha);
        for (int i = 0; i < 4; ++i) {
            EXPECT_NEAR(g.dual_inputs(targets, i, 3.0).evaluate(alpha), w[i], 1e-12);
        }
    }
}

TEST(BonusDiagonal, VisitCounts) {
    GramState g(3, 1.0);
    EXPECT_EQ(g.bonus_diagonal(), Eigen::Vector3d::Ones());
    for (int k = 1; k <= 5; ++k) {
        g.insert(unit(3, 0));
        EXPECT_NEAR(g.bonus_diagonal()[0], 1.0 / std::sqrt(k + 1.0), 1e-14);
        EXPECT_EQ(g.bonus_diagonal()[1], 1.0);
    }
}

}  // namespace
}  // namespace drlsvi
