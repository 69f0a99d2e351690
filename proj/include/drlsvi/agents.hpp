#pragma once

#include "drlsvi/core_types.hpp"
#include "drlsvi/ridge.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace drlsvi {

enum class AgentKind {
    /// DR-LSVI-UCB: per-coordinate TV duals and the d-rectangular bonus.
    robust,
    /// LSVI-UCB: plain ridge regression and the elliptical bonus.
    nominal,
};

const char* to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);

struct AgentConfig {
    AgentKind kind = AgentKind::robust;
    double beta = 1.0;
    double lambda = 1.0;
    /// Radii used by the robust planner. Ignored by the nominal agent.
    UncertaintyLevels rho;
    /// Nominal agent only: clip at H instead of H-h+1.
    bool nominal_clip_at_horizon = false;
    /// Nominal agent only: regress r + V instead of adding the known theta.
    bool nominal_regress_rewards = false;

    /// beta = c * d * H * sqrt(log(3 d K H / p)).
    static double theoretical_beta(double c, int dimension, int horizon, int episodes, double p);
};

/// Everything needed to evaluate the optimistic Q estimate of one episode.
struct QStep {
    /// theta_h + nu_h (robust) or the regression weights (nominal).
    Eigen::VectorXd weights;
    /// nu_h alone (robust) or the regression part of the weights (nominal).
    Eigen::VectorXd nu;
    /// Maximizing truncation level per coordinate (robust only).
    Eigen::VectorXd alpha;
    /// sqrt(diag(Lambda_h^{-1})) for the robust bonus.
    Eigen::VectorXd bonus_diagonal;
    /// Lambda_h^{-1} for the nominal bonus.
    Eigen::MatrixXd inverse;
};

class QParams {
public:
    QParams(AgentKind kind, double beta, int horizon, std::optional<int> fail_state,
            bool clip_at_horizon, std::shared_ptr<const FeatureMap> features);

    int horizon() const { return horizon_; }
    AgentKind kind() const { return kind_; }
    const QStep& step(int h) const { return steps_[h]; }
    QStep& step(int h) { return steps_[h]; }

    double ceiling(int h) const { return clip_at_horizon_ ? horizon_ : horizon_ - h; }
    double bonus(int h, const Eigen::Ref<const Eigen::VectorXd>& phi) const;
    double q_value(int h, int state, int action) const;
    double value(int h, int state) const;

    /// Greedy action; ties go to the lowest action id.
    int act(int h, int state) const;

    /// Greedy action for every (step, state).
    Policy greedy_policy() const;

private:
    AgentKind kind_;
    double beta_;
    int horizon_;
    std::optional<int> fail_state_;
    bool clip_at_horizon_;
    std::shared_ptr<const FeatureMap> features_;
    std::vector<QStep> steps_;
};

/**
 * Online least-squares value iteration agent.
 *
 * One agent per run. The agent knows the feature map and theta (rewards are
 * known); everything about the dynamics comes from observed transitions.
 */
class LsviAgent {
public:
    LsviAgent(std::shared_ptr<const FeatureMap> features, std::vector<Eigen::VectorXd> theta,
              std::optional<int> fail_state, AgentConfig config);

    const AgentConfig& config() const { return config_; }
    int horizon() const { return static_cast<int>(theta_.size()); }
    const FeatureMap& features() const { return *features_; }
    const GramState& gram(int h) const { return grams_[h]; }
    int episodes_observed(int h) const { return grams_[h].size(); }

    /// Backward induction over the transitions observed so far.
    QParams plan() const;

    /// Records a transition at its step.
    void observe(const Transition& transition);

    /// Convenience: observe (s, a, r, s') at step h using the agent's features.
    void observe(int step, int state, int action, double reward, int next_state);

    static int act(const QParams& params, int step, int state) { return params.act(step, state); }

private:
    QParams plan_robust() const;
    QParams plan_nominal() const;
    std::vector<double> next_values(const QParams& params, int step) const;

    std::shared_ptr<const FeatureMap> features_;
    std::vector<Eigen::VectorXd> theta_;
    std::optional<int> fail_state_;
    AgentConfig config_;
    std::vector<GramState> grams_;
    std::vector<std::vector<int>> next_states_;
    std::vector<std::vector<double>> rewards_;
};

/// sum_i phi_i sqrt(e_i^T Lambda^{-1} e_i): one step's contribution to the
/// d-rectangular estimation error.
double estimation_error_term(const GramState& gram, const Eigen::Ref<const Eigen::VectorXd>& phi);

}  // namespace drlsvi
