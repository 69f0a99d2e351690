#include "drlsvi/core_types.hpp"

#include <cmath>
#include <sstream>

namespace drlsvi {

namespace {

std::string step_label(int step) { return "step " + std::to_string(step); }

template <class... Args>
std::string concat(const Args&... args) {
    std::ostringstream out;
    out.precision(12);
    (out << ... << args);
    return out.str();
}

bool is_probability_vector(const Eigen::VectorXd& v, double tolerance) {
    if (v.size() == 0) return false;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j]) || v[j] < -tolerance) return false;
    }
    return std::abs(v.sum() - 1.0) <= tolerance;
}

}  // namespace

FeatureMap::FeatureMap(int num_states, int num_actions, int dimension, std::vector<double> table,
                       FeatureFlags flags, std::string builtin)
    : num_states_(num_states), num_actions_(num_actions), dimension_(dimension),
      table_(std::move(table)), flags_(flags), builtin_(std::move(builtin)) {
    if (num_states <= 0 || num_actions <= 0 || dimension <= 0) {
        throw std::invalid_argument("FeatureMap: sizes must be positive");
    }
    if (table_.size() != static_cast<std::size_t>(num_states) * num_actions * dimension) {
        throw std::invalid_argument("FeatureMap: table size does not match |S|*|A|*d");
    }
}

UncertaintyLevels::UncertaintyLevels(int horizon, int dimension, double value)
    : horizon_(horizon), dimension_(dimension),
      levels_(static_cast<std::size_t>(horizon) * dimension, value) {
    if (horizon <= 0 || dimension <= 0) {
        throw std::invalid_argument("UncertaintyLevels: sizes must be positive");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument("UncertaintyLevels: rho must lie in [0,1]");
    }
}

void UncertaintyLevels::set(int step, int coordinate, double rho) {
    if (step < 0 || step >= horizon_ || coordinate < 0 || coordinate >= dimension_) {
        throw std::out_of_range("UncertaintyLevels: index out of range");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("UncertaintyLevels: rho must lie in [0,1]");
    }
    levels_[index(step, coordinate)] = rho;
}

bool UncertaintyLevels::all_zero() const {
    for (double rho : levels_) {
        if (rho != 0.0) return false;
    }
    return true;
}

double LinearMdpSpec::reward(int step, int state, int action) const {
    if (explicit_dynamics) {
        return explicit_dynamics->rewards[step][static_cast<std::size_t>(state) * num_actions + action];
    }
    return features(state, action).dot(theta[step]);
}

FiniteMdp::FiniteMdp(int horizon, int num_states, int num_actions,
                     std::vector<std::vector<double>> rewards,
                     std::vector<std::vector<SparseDistribution>> kernel,
                     Eigen::VectorXd initial_distribution, std::optional<int> fail_state)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
      rewards_(std::move(rewards)), kernel_(std::move(kernel)),
      initial_(std::move(initial_distribution)), fail_state_(fail_state) {
    const auto cells = static_cast<std::size_t>(num_states) * num_actions;
    if (rewards_.size() != static_cast<std::size_t>(horizon) ||
        kernel_.size() != static_cast<std::size_t>(horizon)) {
        throw std::invalid_argument("FiniteMdp: expected one reward and kernel table per step");
    }
    for (int h = 0; h < horizon; ++h) {
        if (rewards_[h].size() != cells || kernel_[h].size() != cells) {
            throw std::invalid_argument("FiniteMdp: table size does not match |S|*|A|");
        }
    }
    if (initial_.size() != num_states) {
        throw std::invalid_argument("FiniteMdp: initial distribution has wrong size");
    }
}

std::vector<std::string> validate_spec(const LinearMdpSpec& spec) {
    std::vector<std::string> report;
    const FeatureMap& phi = spec.features;
    const int d = phi.dimension();
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int H = spec.horizon;

    if (H <= 0) report.push_back("horizon must be positive");
    if (S <= 0 || A <= 0) report.push_back("state and action sets must be nonempty");
    if (phi.num_states() != S || phi.num_actions() != A) {
        report.push_back("feature map does not cover the state-action grid");
        return report;
    }
    if (!report.empty()) return report;

    // Feature map invariants.
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto f = phi(s, a);
            if (!f.allFinite()) {
                report.push_back(concat("feature (", s, ",", a, ") is not finite"));
                continue;
            }
            if (phi.flags().simplex_normalized) {
                if (f.minCoeff() < 0.0) {
                    report.push_back(concat("feature (", s, ",", a, ") has a negative coordinate"));
                }
                if (std::abs(f.sum() - 1.0) >= kExactTolerance) {
                    report.push_back(concat("feature (", s, ",", a, ") does not sum to 1 (sum ",
                                            f.sum(), ")"));
                }
            }
        }
    }

    if (spec.theta.size() != static_cast<std::size_t>(H)) {
        report.push_back("expected one reward vector theta per step");
    } else {
        for (int h = 0; h < H; ++h) {
            if (spec.theta[h].size() != d) {
                report.push_back(concat("theta at ", step_label(h), " has wrong dimension"));
            } else if (spec.theta[h].norm() > std::sqrt(static_cast<double>(d)) + kExactTolerance) {
                report.push_back(concat("theta at ", step_label(h), ": ‖θ‖ exceeds √d (",
                                        spec.theta[h].norm(), " > ", std::sqrt(double(d)), ")"));
            }
        }
    }

    if (spec.explicit_dynamics) {
        const auto& dyn = *spec.explicit_dynamics;
        if (dyn.rewards.size() != static_cast<std::size_t>(H) ||
            dyn.kernel.size() != static_cast<std::size_t>(H)) {
            report.push_back("explicit dynamics must provide one table per step");
        } else {
            for (int h = 0; h < H; ++h) {
                const auto cells = static_cast<std::size_t>(S) * A;
                if (dyn.rewards[h].size() != cells || dyn.kernel[h].size() != cells) {
                    report.push_back(concat("explicit tables at ", step_label(h), " have wrong size"));
                    continue;
                }
                for (std::size_t c = 0; c < cells; ++c) {
                    const auto& row = dyn.kernel[h][c];
                    double total = 0.0;
                    bool ok = row.states.size() == row.probs.size();
                    for (std::size_t j = 0; ok && j < row.states.size(); ++j) {
                        ok = row.states[j] >= 0 && row.states[j] < S && row.probs[j] >= -kExactTolerance;
                        total += row.probs[j];
                    }
                    if (!ok || std::abs(total - 1.0) > kComposedTolerance) {
                        report.push_back(concat("explicit kernel row (", c / A, ",", c % A, ") at ",
                                                step_label(h), " is not a probability vector"));
                    }
                }
            }
        }
    } else if (spec.mu.size() != static_cast<std::size_t>(H)) {
        report.push_back("expected factor distributions for every step");
    } else {
        for (int h = 0; h < H; ++h) {
            if (spec.mu[h].size() != static_cast<std::size_t>(d)) {
                report.push_back(concat("expected d factor distributions at ", step_label(h)));
                continue;
            }
            for (int i = 0; i < d; ++i) {
                const auto& m = spec.mu[h][i];
                if (m.size() != S) {
                    report.push_back(concat("factor distribution (", h, ",", i, ") has wrong support size"));
                } else if (!is_probability_vector(m, kExactTolerance)) {
                    report.push_back(concat("factor distribution (", h, ",", i,
                                            ") not normalized (mass ", m.sum(), ")"));
                }
            }
        }
    }

    if (spec.initial_distribution.size() != S ||
        !is_probability_vector(spec.initial_distribution, kComposedTolerance)) {
        report.push_back("initial distribution is not a probability vector over states");
    }

    if (spec.fail_state && (*spec.fail_state < 0 || *spec.fail_state >= S)) {
        report.push_back("fail state id out of range");
        return report;
    }
    if (!report.empty()) return report;

    // Composed quantities: induced kernels, reward range, fail-state behaviour.
    const FiniteMdp mdp = induce_finite_mdp(spec);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double r = mdp.reward(h, s, a);
                if (phi.flags().reward_normalized &&
                    (r < -kExactTolerance || r > 1.0 + kExactTolerance)) {
                    report.push_back(concat("reward at (", h, ",", s, ",", a, ") outside [0,1]: ", r));
                }
                if (!phi.flags().simplex_normalized && !spec.explicit_dynamics) continue;
                const auto& row = mdp.next(h, s, a);
                double total = 0.0;
                bool negative = false;
                for (double p : row.probs) {
                    total += p;
                    negative = negative || p < -kExactTolerance;
                }
                if (negative || std::abs(total - 1.0) > kComposedTolerance) {
                    report.push_back(concat("induced kernel at (", h, ",", s, ",", a,
                                            ") is not a probability vector"));
                }
            }
        }
    }

    if (spec.fail_state) {
        const int sf = *spec.fail_state;
        for (int h = 0; h < H; ++h) {
            for (int a = 0; a < A; ++a) {
                if (std::abs(mdp.reward(h, sf, a)) > kExactTolerance) {
                    report.push_back(concat("fail state reward nonzero at (", h, ",", a, ")"));
                }
                double self = 0.0;
                const auto& row = mdp.next(h, sf, a);
                for (std::size_t j = 0; j < row.states.size(); ++j) {
                    if (row.states[j] == sf) self += row.probs[j];
                }
                if (std::abs(self - 1.0) > kComposedTolerance) {
                    report.push_back(concat("fail state not absorbing at (", h, ",", a, ")"));
                }
            }
        }
    }
    return report;
}

LinearMdpSpec extend_with_fail_state(const LinearMdpSpec& spec) {
    if (spec.fail_state) {
        throw std::invalid_argument("extend_with_fail_state: spec already has a fail state");
    }
    if (!spec.has_factors()) {
        throw std::invalid_argument("extend_with_fail_state: spec has no factor distributions");
    }
    const int d = spec.dimension();
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int sf = S;

    std::vector<double> table(static_cast<std::size_t>(S + 1) * A * (d + 1), 0.0);
    for (int s = 0; s <= S; ++s) {
        for (int a = 0; a < A; ++a) {
            double* row = table.data() + (static_cast<std::size_t>(s) * A + a) * (d + 1);
            if (s == sf) {
                row[0] = 1.0;
            } else {
                const auto f = spec.features(s, a);
                for (int i = 0; i < d; ++i) row[i + 1] = f[i];
            }
        }
    }

    LinearMdpSpec out;
    out.horizon = spec.horizon;
    out.num_states = S + 1;
    out.num_actions = A;
    out.features = FeatureMap(S + 1, A, d + 1, std::move(table), spec.features.flags());
    out.fail_state = sf;
    out.initial_distribution = Eigen::VectorXd::Zero(S + 1);
    out.initial_distribution.head(S) = spec.initial_distribution;

    for (int h = 0; h < spec.horizon; ++h) {
        Eigen::VectorXd theta(d + 1);
        theta << 0.0, spec.theta[h];
        out.theta.push_back(std::move(theta));

        std::vector<Eigen::VectorXd> factors;
        Eigen::VectorXd point = Eigen::VectorXd::Zero(S + 1);
        point[sf] = 1.0;
        factors.push_back(std::move(point));
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd m = Eigen::VectorXd::Zero(S + 1);
            m.head(S) = spec.mu[h][i];
            factors.push_back(std::move(m));
        }
        out.mu.push_back(std::move(factors));
    }
    return out;
}

FiniteMdp induce_finite_mdp(const LinearMdpSpec& spec) {
    const int H = spec.horizon;
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const auto cells = static_cast<std::size_t>(S) * A;

    std::vector<std::vector<double>> rewards(H, std::vector<double>(cells));
    std::vector<std::vector<SparseDistribution>> kernel;
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) rewards[h][s * A + a] = spec.reward(h, s, a);
        }
    }

    if (spec.explicit_dynamics) {
        kernel = spec.explicit_dynamics->kernel;
    } else {
        if (!spec.has_factors()) {
            throw std::invalid_argument("induce_finite_mdp: spec has neither factors nor explicit dynamics");
        }
        const int d = spec.dimension();
        kernel.assign(H, std::vector<SparseDistribution>(cells));
        Eigen::VectorXd dense(S);
        for (int h = 0; h < H; ++h) {
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) {
                    const auto f = spec.features(s, a);
                    dense.setZero();
                    for (int i = 0; i < d; ++i) {
                        if (f[i] != 0.0) dense += f[i] * spec.mu[h][i];
                    }
                    auto& row = kernel[h][s * A + a];
                    for (int j = 0; j < S; ++j) {
                        if (dense[j] != 0.0) {
                            row.states.push_back(j);
                            row.probs.push_back(dense[j]);
                        }
                    }
                }
            }
        }
    }
    return FiniteMdp(H, S, A, std::move(rewards), std::move(kernel), spec.initial_distribution,
                     spec.fail_state);
}

}  // namespace drlsvi
