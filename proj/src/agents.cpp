#include "drlsvi/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drlsvi {

const char* to_string(AgentKind kind) {
    return kind == AgentKind::robust ? "robust" : "nominal";
}

AgentKind agent_kind_from_string(const std::string& name) {
    if (name == "robust" || name == "dr-lsvi-ucb") return AgentKind::robust;
    if (name == "nominal" || name == "lsvi-ucb") return AgentKind::nominal;
    throw std::invalid_argument("unknown agent kind: " + name);
}

double AgentConfig::theoretical_beta(double c, int dimension, int horizon, int episodes, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("theoretical_beta: p must lie in (0,1)");
    const double iota = std::log(3.0 * dimension * episodes * horizon / p);
    return c * dimension * horizon * std::sqrt(iota);
}

QParams::QParams(AgentKind kind, double beta, int horizon, std::optional<int> fail_state,
                 bool clip_at_horizon, std::shared_ptr<const FeatureMap> features)
    : kind_(kind), beta_(beta), horizon_(horizon), fail_state_(fail_state),
      clip_at_horizon_(clip_at_horizon), features_(std::move(features)), steps_(horizon) {}

double QParams::bonus(int h, const Eigen::Ref<const Eigen::VectorXd>& phi) const {
    const QStep& st = steps_[h];
    if (kind_ == AgentKind::robust) return beta_ * phi.dot(st.bonus_diagonal);
    return beta_ * std::sqrt(std::max(0.0, phi.dot(st.inverse * phi)));
}

double QParams::q_value(int h, int state, int action) const {
    if (fail_state_ && state == *fail_state_) return 0.0;
    const auto phi = (*features_)(state, action);
    const double raw = phi.dot(steps_[h].weights) + bonus(h, phi);
    return std::max(0.0, std::min(raw, ceiling(h)));
}

double QParams::value(int h, int state) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < features_->num_actions(); ++a) best = std::max(best, q_value(h, state, a));
    return best;
}

int QParams::act(int h, int state) const {
    int best_action = 0;
    double best = q_value(h, state, 0);
    for (int a = 1; a < features_->num_actions(); ++a) {
        const double q = q_value(h, state, a);
        if (q > best) {
            best = q;
            best_action = a;
        }
    }
    return best_action;
}

Policy QParams::greedy_policy() const {
    Policy policy(horizon_, features_->num_states());
    for (int h = 0; h < horizon_; ++h) {
        for (int s = 0; s < features_->num_states(); ++s) policy.set(h, s, act(h, s));
    }
    return policy;
}

LsviAgent::LsviAgent(std::shared_ptr<const FeatureMap> features, std::vector<Eigen::VectorXd> theta,
                     std::optional<int> fail_state, AgentConfig config)
    : features_(std::move(features)), theta_(std::move(theta)), fail_state_(fail_state),
      config_(std::move(config)) {
    if (!features_) throw std::invalid_argument("LsviAgent: missing feature map");
    if (theta_.empty()) throw std::invalid_argument("LsviAgent: horizon must be positive");
    if (config_.beta < 0.0) throw std::invalid_argument("LsviAgent: beta must be nonnegative");
    if (!(config_.lambda > 0.0)) throw std::invalid_argument("LsviAgent: lambda must be positive");
    const int d = features_->dimension();
    for (const auto& t : theta_) {
        if (t.size() != d) throw std::invalid_argument("LsviAgent: theta has wrong dimension");
    }
    if (config_.kind == AgentKind::robust &&
        (config_.rho.horizon() != horizon() || config_.rho.dimension() != d)) {
        throw std::invalid_argument("LsviAgent: uncertainty levels do not match H x d");
    }
    const double norm_bound = features_->flags().simplex_normalized
                                  ? 1.0
                                  : std::numeric_limits<double>::infinity();
    grams_.reserve(horizon());
    for (int h = 0; h < horizon(); ++h) grams_.emplace_back(d, config_.lambda, norm_bound);
    next_states_.resize(horizon());
    rewards_.resize(horizon());
}

void LsviAgent::observe(const Transition& transition) {
    const int h = transition.step;
    if (h < 0 || h >= horizon()) throw std::invalid_argument("LsviAgent: step out of range");
    if (transition.feature.size() != features_->dimension()) {
        throw std::invalid_argument("LsviAgent: feature dimension mismatch");
    }
    grams_[h].insert(transition.feature);
    next_states_[h].push_back(transition.next_state);
    rewards_[h].push_back(transition.reward);
}

void LsviAgent::observe(int step, int state, int action, double reward, int next_state) {
    Transition t;
    t.step = step;
    t.state = state;
    t.action = action;
    t.feature = (*features_)(state, action);
    t.reward = reward;
    t.next_state = next_state;
    observe(t);
}

std::vector<double> LsviAgent::next_values(const QParams& params, int step) const {
    // V_{h+1}(s') for every stored next state of step h, memoized per state.
    std::vector<double> memo(features_->num_states(), std::numeric_limits<double>::quiet_NaN());
    const auto& next = next_states_[step];
    std::vector<double> values(next.size());
    for (std::size_t t = 0; t < next.size(); ++t) {
        double& v = memo[next[t]];
        if (std::isnan(v)) v = params.value(step + 1, next[t]);
        values[t] = v;
    }
    return values;
}

QParams LsviAgent::plan() const {
    return config_.kind == AgentKind::robust ? plan_robust() : plan_nominal();
}

QParams LsviAgent::plan_robust() const {
    const int H = horizon();
    const int d = features_->dimension();
    const double cap = H;
    QParams params(AgentKind::robust, config_.beta, H, fail_state_, false, features_);

    for (int h = H - 1; h >= 0; --h) {
        QStep& st = params.step(h);
        const GramState& gram = grams_[h];
        st.nu = Eigen::VectorXd::Zero(d);
        st.alpha = Eigen::VectorXd::Zero(d);
        if (h < H - 1 && gram.size() > 0) {
            std::vector<double> targets = next_values(params, h);
            for (double& v : targets) v = std::clamp(v, 0.0, cap);
            const Eigen::MatrixXd coefficients = gram.coefficient_matrix();
            std::vector<tv::WeightedValue> terms(targets.size());
            for (int i = 0; i < d; ++i) {
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    terms[t] = {coefficients(i, static_cast<Eigen::Index>(t)), targets[t]};
                }
                const tv::DualSolution sol = tv::ridge_dual_sweep(terms, config_.rho.at(h, i), cap);
                st.nu[i] = sol.value;
                st.alpha[i] = sol.alpha;
            }
        }
        st.weights = theta_[h] + st.nu;
        st.bonus_diagonal = gram.bonus_diagonal();
    }
    return params;
}

QParams LsviAgent::plan_nominal() const {
    const int H = horizon();
    const int d = features_->dimension();
    QParams params(AgentKind::nominal, config_.beta, H, fail_state_, config_.nominal_clip_at_horizon,
                   features_);

    for (int h = H - 1; h >= 0; --h) {
        QStep& st = params.step(h);
        const GramState& gram = grams_[h];
        st.nu = Eigen::VectorXd::Zero(d);
        if (gram.size() > 0 && (h < H - 1 || config_.nominal_regress_rewards)) {
            std::vector<double> targets =
                h < H - 1 ? next_values(params, h) : std::vector<double>(gram.size(), 0.0);
            if (config_.nominal_regress_rewards) {
                for (std::size_t t = 0; t < targets.size(); ++t) targets[t] += rewards_[h][t];
            }
            const Eigen::Map<const Eigen::VectorXd> y(targets.data(),
                                                      static_cast<Eigen::Index>(targets.size()));
            st.nu = gram.inverse() * (gram.features() * y);
        }
        st.weights = config_.nominal_regress_rewards ? st.nu : Eigen::VectorXd(theta_[h] + st.nu);
        st.inverse = gram.inverse();
    }
    return params;
}

double estimation_error_term(const GramState& gram, const Eigen::Ref<const Eigen::VectorXd>& phi) {
    return phi.dot(gram.bonus_diagonal());
}

}  // namespace drlsvi
