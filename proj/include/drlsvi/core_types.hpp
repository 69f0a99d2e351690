#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/// Domain types for finite-horizon d-rectangular linear DRMDPs.
///
/// Conventions used throughout the library: states, actions and steps are
/// zero-based integer ids. Step h = 0 is the first decision of an episode and
/// h = H-1 the last. Feature coordinates are likewise zero-based.
namespace drlsvi {

/// Tolerance for quantities constructed exactly (feature sums, factor masses).
inline constexpr double kExactTolerance = 1e-12;
/// Tolerance for composed quantities (induced kernels, accumulated values).
inline constexpr double kComposedTolerance = 1e-10;

struct FeatureFlags {
    /// Every vector is nonnegative and sums to one.
    bool simplex_normalized = true;
    /// Every reward <phi, theta_h> lies in [0,1].
    bool reward_normalized = true;
};

/**
 * Dense (state, action) -> R^d feature table.
 *
 * The table is stored row-major as [state][action][coordinate]. An optional
 * builtin name records where the table came from so that serialized specs
 * can refer to it (for instance "simulated_five_state").
 */
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int num_states, int num_actions, int dimension, std::vector<double> table,
               FeatureFlags flags, std::string builtin = {});

    int dimension() const { return dimension_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    const FeatureFlags& flags() const { return flags_; }
    const std::string& builtin() const { return builtin_; }
    std::span<const double> table() const { return table_; }

    Eigen::Map<const Eigen::VectorXd> operator()(int state, int action) const {
        return Eigen::Map<const Eigen::VectorXd>(
            table_.data() + offset(state, action), dimension_);
    }

private:
    std::size_t offset(int state, int action) const {
        return (static_cast<std::size_t>(state) * num_actions_ + action) * dimension_;
    }

    int num_states_ = 0;
    int num_actions_ = 0;
    int dimension_ = 0;
    std::vector<double> table_;
    FeatureFlags flags_;
    std::string builtin_;
};

/// Per-step, per-factor TV radii rho_{h,i} in [0,1].
class UncertaintyLevels {
public:
    UncertaintyLevels() = default;
    UncertaintyLevels(int horizon, int dimension, double value = 0.0);

    static UncertaintyLevels homogeneous(int horizon, int dimension, double rho) {
        return UncertaintyLevels(horizon, dimension, rho);
    }

    int horizon() const { return horizon_; }
    int dimension() const { return dimension_; }
    double at(int step, int coordinate) const { return levels_[index(step, coordinate)]; }
    void set(int step, int coordinate, double rho);
    bool all_zero() const;

private:
    std::size_t index(int step, int coordinate) const {
        return static_cast<std::size_t>(step) * dimension_ + coordinate;
    }

    int horizon_ = 0;
    int dimension_ = 0;
    std::vector<double> levels_;
};

/// One sparse row of a transition kernel.
struct SparseDistribution {
    std::vector<int> states;
    std::vector<double> probs;
};

/**
 * Rewards and kernels given directly rather than through theta and mu.
 *
 * Used by environments whose features do not induce the dynamics (the
 * put-option map is neither simplex- nor reward-normalized). The agent still
 * receives theta; the explicit tables are what the environment executes.
 */
struct ExplicitDynamics {
    /// rewards[h][s * A + a]
    std::vector<std::vector<double>> rewards;
    /// kernel[h][s * A + a]
    std::vector<std::vector<SparseDistribution>> kernel;
};

struct LinearMdpSpec {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    FeatureMap features;
    /// theta[h], each of size d.
    std::vector<Eigen::VectorXd> theta;
    /// mu[h][i], each a probability vector over states. Empty when the
    /// dynamics are explicit.
    std::vector<std::vector<Eigen::VectorXd>> mu;
    Eigen::VectorXd initial_distribution;
    std::optional<int> fail_state;
    std::optional<ExplicitDynamics> explicit_dynamics;

    int dimension() const { return features.dimension(); }
    bool has_factors() const { return !mu.empty(); }

    /// r_h(s,a): the explicit table when present, <phi(s,a), theta_h> otherwise.
    double reward(int step, int state, int action) const;
};

/// Observed sample (s_h, a_h, r_h, s_{h+1}) with its feature vector.
struct Transition {
    int step = 0;
    int state = 0;
    int action = 0;
    Eigen::VectorXd feature;
    double reward = 0.0;
    int next_state = 0;
};

/// Tabular execution model: what an environment actually samples from.
class FiniteMdp {
public:
    FiniteMdp(int horizon, int num_states, int num_actions,
              std::vector<std::vector<double>> rewards,
              std::vector<std::vector<SparseDistribution>> kernel,
              Eigen::VectorXd initial_distribution, std::optional<int> fail_state);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    std::optional<int> fail_state() const { return fail_state_; }
    const Eigen::VectorXd& initial_distribution() const { return initial_; }

    double reward(int step, int state, int action) const {
        return rewards_[step][static_cast<std::size_t>(state) * num_actions_ + action];
    }
    const SparseDistribution& next(int step, int state, int action) const {
        return kernel_[step][static_cast<std::size_t>(state) * num_actions_ + action];
    }

private:
    int horizon_;
    int num_states_;
    int num_actions_;
    std::vector<std::vector<double>> rewards_;
    std::vector<std::vector<SparseDistribution>> kernel_;
    Eigen::VectorXd initial_;
    std::optional<int> fail_state_;
};

/// Lists every violated invariant of the spec and its feature map.
/// An empty list means the spec is valid.
std::vector<std::string> validate_spec(const LinearMdpSpec& spec);

/// Adds an absorbing zero-reward fail state as a new last state and a new
/// leading feature coordinate. Throws if the spec already has a fail state
/// or has no factor distributions.
LinearMdpSpec extend_with_fail_state(const LinearMdpSpec& spec);

/// P_h(.|s,a) = sum_i phi_i(s,a) mu_{h,i}, or the explicit kernel when given.
FiniteMdp induce_finite_mdp(const LinearMdpSpec& spec);

/// Deterministic nonstationary policy: one action per (step, state).
class Policy {
public:
    Policy() = default;
    Policy(int horizon, int num_states, int fill = 0)
        : horizon_(horizon), num_states_(num_states),
          actions_(static_cast<std::size_t>(horizon) * num_states, fill) {}

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int at(int step, int state) const { return actions_[index(step, state)]; }
    void set(int step, int state, int action) { actions_[index(step, state)] = action; }
    bool operator==(const Policy&) const = default;

private:
    std::size_t index(int step, int state) const {
        return static_cast<std::size_t>(step) * num_states_ + state;
    }

    int horizon_ = 0;
    int num_states_ = 0;
    std::vector<int> actions_;
};

}  // namespace drlsvi
