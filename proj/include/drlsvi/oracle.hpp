#pragma once

#include "drlsvi/core_types.hpp"
#include "drlsvi/ridge.hpp"
#include "drlsvi/rng.hpp"

#include <optional>
#include <vector>

namespace drlsvi {

/// V[h][s], Q[h][s][a] and the greedy policy of a finite (robust) MDP.
struct RobustValueTable {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<std::vector<double>> values;               // [h][s]
    std::vector<std::vector<std::vector<double>>> q;       // [h][s][a]
    Policy policy;
    UncertaintyLevels rho;
};

/// Robust Bellman optimality recursion over the d-rectangular TV set:
/// Q_h(s,a) = r_h(s,a) + sum_i phi_i(s,a) inf_{TV(mu, mu_{h,i}) <= rho_{h,i}} E_mu[V_{h+1}].
/// Requires factor distributions.
RobustValueTable robust_value_iteration(const LinearMdpSpec& spec, const UncertaintyLevels& rho);

/// V^{pi,rho}[h][s] for a deterministic policy.
std::vector<std::vector<double>> robust_policy_evaluation(const LinearMdpSpec& spec, const Policy& policy,
                                                          const UncertaintyLevels& rho);

/// Standard finite-horizon value iteration on the tabular kernel.
RobustValueTable value_iteration(const FiniteMdp& mdp);

/// Standard policy evaluation on the tabular kernel.
std::vector<std::vector<double>> policy_evaluation(const FiniteMdp& mdp, const Policy& policy);

/// Expected value of V_0 under the initial distribution.
double expected_initial_value(const FiniteMdp& mdp, const std::vector<std::vector<double>>& values);

struct EpisodeRecord {
    int initial_state = 0;
    std::vector<int> states;     // s_0 .. s_{H-1}
    std::vector<int> actions;    // a_0 .. a_{H-1}
    std::vector<double> rewards; // r_0 .. r_{H-1}
    int final_state = 0;         // s_H
    double total_reward = 0.0;
    /// sum_h sum_i phi_{h,i} sqrt((Lambda_h^{-1})_ii) with pre-episode Gram states.
    double estimation_error = 0.0;
    /// V_1^{pi_k,rho}(s_1^k) and V_1^{*,rho}(s_1^k) when an oracle is available.
    std::optional<double> policy_value;
    std::optional<double> optimal_value;
};

struct RunLog {
    std::vector<EpisodeRecord> episodes;

    int num_episodes() const { return static_cast<int>(episodes.size()); }
    double cumulative_estimation_error() const;
};

/// Adds sum_h sum_i phi_{h,i} sqrt(e_i^T Lambda_h^{-1} e_i) for one episode.
/// `grams` are the Gram states before the episode's data is inserted.
void track_estimation_error(EpisodeRecord& record, const std::vector<const GramState*>& grams,
                            const std::vector<Eigen::VectorXd>& features);

/// (1/K) sum_k [V_1^*(s_1^k) - V_1^{pi_k}(s_1^k)] using the oracle's optimum.
/// Throws if any episode lacks its policy value.
double average_suboptimality(const RunLog& log, const RobustValueTable& oracle);

/// sqrt(2 H^3 log(3/p) / K) + (2 beta / K) * error.
double regret_bound_rhs(int episodes, int horizon, double p, double beta, double estimation_error);

struct MonteCarloResult {
    double mean = 0.0;
    double std = 0.0;
};

/// Rolls out `episodes` episodes and reports the mean and sample standard
/// deviation of the total reward. Episode k, step h draws from the evaluation
/// stream (master_seed, evaluate, seed, k, h + 1); step 0 of that key draws
/// the initial state.
MonteCarloResult monte_carlo_return(const FiniteMdp& mdp, const Policy& policy, int episodes,
                                    std::uint64_t master_seed, std::uint64_t seed);

}  // namespace drlsvi
