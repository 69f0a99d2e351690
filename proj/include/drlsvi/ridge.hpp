#pragma once

#include "drlsvi/tv_duality.hpp"

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace drlsvi {

/**
 * Regularized Gram matrix Lambda = lambda I + sum_t phi_t phi_t^T together
 * with its inverse and the stored feature vectors.
 *
 * The inverse is maintained with Sherman-Morrison rank-one updates and
 * recomputed densely every kRefreshPeriod insertions, or earlier when
 * ||Lambda * Lambda^{-1} - I||_inf exceeds kResidualLimit.
 */
class GramState {
public:
    static constexpr int kRefreshPeriod = 256;
    static constexpr double kResidualLimit = 1e-8;

    /// `max_feature_norm` bounds ||phi||_2 on insertion; pass infinity to
    /// accept unnormalized maps.
    explicit GramState(int dimension, double lambda = 1.0, double max_feature_norm = 1.0);

    int dimension() const { return dimension_; }
    double lambda() const { return lambda_; }
    int size() const { return static_cast<int>(stored_.size() / dimension_); }

    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& inverse() const { return inverse_; }

    /// Stored features as the columns of a d x n matrix, in insertion order.
    Eigen::Map<const Eigen::MatrixXd> features() const {
        return Eigen::Map<const Eigen::MatrixXd>(stored_.data(), dimension_, size());
    }

    void insert(const Eigen::Ref<const Eigen::VectorXd>& phi);

    /// Lambda^{-1} sum_t phi_t min(target_t, alpha).
    Eigen::VectorXd solve_truncated(std::span<const double> targets, double alpha) const;

    /// Terms (e_i^T Lambda^{-1} phi_t, target_t) so that the list evaluated at
    /// alpha reproduces coordinate i of solve_truncated.
    tv::WeightedValueList dual_inputs(std::span<const double> targets, int coordinate,
                                      double cap) const;

    /// Lambda^{-1} Phi, the d x n matrix whose row i holds the dual
    /// coefficients of coordinate i.
    Eigen::MatrixXd coefficient_matrix() const;

    /// sqrt of the diagonal of Lambda^{-1}.
    Eigen::VectorXd bonus_diagonal() const;

    /// ||Lambda * Lambda^{-1} - I||_inf
    double identity_residual() const;

private:
    void refresh();
    void check_targets(std::span<const double> targets) const;

    int dimension_;
    double lambda_;
    double max_feature_norm_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd inverse_;
    std::vector<double> stored_;
    int since_refresh_ = 0;
};

}  // namespace drlsvi
