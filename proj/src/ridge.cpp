#include "drlsvi/ridge.hpp"

#include <cmath>
#include <stdexcept>

namespace drlsvi {

GramState::GramState(int dimension, double lambda, double max_feature_norm)
    : dimension_(dimension), lambda_(lambda), max_feature_norm_(max_feature_norm) {
    if (dimension <= 0) throw std::invalid_argument("GramState: dimension must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("GramState: lambda must be positive");
    gram_ = lambda * Eigen::MatrixXd::Identity(dimension, dimension);
    inverse_ = Eigen::MatrixXd::Identity(dimension, dimension) / lambda;
}

void GramState::insert(const Eigen::Ref<const Eigen::VectorXd>& phi) {
    if (phi.size() != dimension_) throw std::invalid_argument("GramState: wrong feature dimension");
    if (!phi.allFinite()) throw std::invalid_argument("GramState: non-finite feature");
    if (phi.norm() > max_feature_norm_ + 1e-9) {
        throw std::invalid_argument("GramState: feature norm exceeds the configured bound");
    }
    stored_.insert(stored_.end(), phi.data(), phi.data() + dimension_);
    if (phi.squaredNorm() == 0.0) return;

    gram_.noalias() += phi * phi.transpose();
    const Eigen::VectorXd u = inverse_ * phi;
    inverse_.noalias() -= (u * u.transpose()) / (1.0 + phi.dot(u));
    inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();

    if (++since_refresh_ >= kRefreshPeriod || identity_residual() > kResidualLimit) refresh();
}

void GramState::refresh() {
    inverse_ = gram_.llt().solve(Eigen::MatrixXd::Identity(dimension_, dimension_));
    since_refresh_ = 0;
}

double GramState::identity_residual() const {
    const Eigen::MatrixXd r = gram_ * inverse_ - Eigen::MatrixXd::Identity(dimension_, dimension_);
    return r.cwiseAbs().rowwise().sum().maxCoeff();
}

void GramState::check_targets(std::span<const double> targets) const {
    if (targets.size() != static_cast<std::size_t>(size())) {
        throw std::invalid_argument("GramState: one target per stored feature is required");
    }
}

Eigen::VectorXd GramState::solve_truncated(std::span<const double> targets, double alpha) const {
    check_targets(targets);
    Eigen::VectorXd truncated(size());
    for (int t = 0; t < size(); ++t) truncated[t] = std::min(targets[t], alpha);
    if (size() == 0) return Eigen::VectorXd::Zero(dimension_);
    return inverse_ * (features() * truncated);
}

Eigen::MatrixXd GramState::coefficient_matrix() const { return inverse_ * features(); }

tv::WeightedValueList GramState::dual_inputs(std::span<const double> targets, int coordinate,
                                             double cap) const {
    check_targets(targets);
    if (coordinate < 0 || coordinate >= dimension_) {
        throw std::out_of_range("GramState: coordinate out of range");
    }
    tv::WeightedValueList list;
    list.cap = cap;
    if (size() == 0) return list;
    const Eigen::RowVectorXd coefficients = inverse_.row(coordinate) * features();
    list.terms.reserve(size());
    for (int t = 0; t < size(); ++t) list.terms.push_back({coefficients[t], targets[t]});
    return list;
}

Eigen::VectorXd GramState::bonus_diagonal() const { return inverse_.diagonal().cwiseSqrt(); }

}  // namespace drlsvi
