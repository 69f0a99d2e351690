#include "drlsvi/oracle.hpp"

#include "drlsvi/environments.hpp"
#include "drlsvi/tv_duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drlsvi {

namespace {

void check_levels(const LinearMdpSpec& spec, const UncertaintyLevels& rho) {
    if (!spec.has_factors()) {
        throw std::invalid_argument("robust oracle: spec has no factor distributions");
    }
    if (rho.horizon() != spec.horizon || rho.dimension() != spec.dimension()) {
        throw std::invalid_argument("robust oracle: uncertainty levels do not match H x d");
    }
    for (int h = 0; h < spec.horizon; ++h) {
        for (int s = 0; s < spec.num_states; ++s) {
            for (int a = 0; a < spec.num_actions; ++a) {
                if (!std::isfinite(spec.reward(h, s, a)) || !spec.features(s, a).allFinite()) {
                    throw std::invalid_argument("robust oracle: non-finite spec");
                }
            }
        }
    }
}

/// inf over each factor's TV ball of E[next], one entry per coordinate.
Eigen::VectorXd worst_case_factors(const LinearMdpSpec& spec, const UncertaintyLevels& rho, int h,
                                   const std::vector<double>& next) {
    const int d = spec.dimension();
    Eigen::VectorXd out(d);
    const double cap = std::max<double>(spec.horizon, *std::max_element(next.begin(), next.end()));
    for (int i = 0; i < d; ++i) {
        const Eigen::VectorXd& m = spec.mu[h][i];
        out[i] = tv::tv_worst_case_expectation(next, std::span<const double>(m.data(), m.size()),
                                               rho.at(h, i), cap);
    }
    return out;
}

}  // namespace

RobustValueTable robust_value_iteration(const LinearMdpSpec& spec, const UncertaintyLevels& rho) {
    check_levels(spec, rho);
    const int H = spec.horizon;
    const int S = spec.num_states;
    const int A = spec.num_actions;

    RobustValueTable table;
    table.horizon = H;
    table.num_states = S;
    table.num_actions = A;
    table.rho = rho;
    table.values.assign(H, std::vector<double>(S, 0.0));
    table.q.assign(H, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    table.policy = Policy(H, S);

    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        const Eigen::VectorXd worst = worst_case_factors(spec, rho, h, next);
        for (int s = 0; s < S; ++s) {
            int best_action = 0;
            for (int a = 0; a < A; ++a) {
                const double q = spec.reward(h, s, a) + spec.features(s, a).dot(worst);
                table.q[h][s][a] = q;
                if (q > table.q[h][s][best_action]) best_action = a;
            }
            table.policy.set(h, s, best_action);
            table.values[h][s] = table.q[h][s][best_action];
        }
        next = table.values[h];
    }
    return table;
}

std::vector<std::vector<double>> robust_policy_evaluation(const LinearMdpSpec& spec, const Policy& policy,
                                                          const UncertaintyLevels& rho) {
    check_levels(spec, rho);
    if (policy.horizon() != spec.horizon || policy.num_states() != spec.num_states) {
        throw std::invalid_argument("robust_policy_evaluation: policy does not cover the spec");
    }
    const int H = spec.horizon;
    const int S = spec.num_states;
    std::vector<std::vector<double>> values(H, std::vector<double>(S, 0.0));
    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        const Eigen::VectorXd worst = worst_case_factors(spec, rho, h, next);
        for (int s = 0; s < S; ++s) {
            const int a = policy.at(h, s);
            values[h][s] = spec.reward(h, s, a) + spec.features(s, a).dot(worst);
        }
        next = values[h];
    }
    return values;
}

RobustValueTable value_iteration(const FiniteMdp& mdp) {
    const int H = mdp.horizon();
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    RobustValueTable table;
    table.horizon = H;
    table.num_states = S;
    table.num_actions = A;
    table.values.assign(H, std::vector<double>(S, 0.0));
    table.q.assign(H, std::vector<std::vector<double>>(S, std::vector<double>(A, 0.0)));
    table.policy = Policy(H, S);

    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            int best_action = 0;
            for (int a = 0; a < A; ++a) {
                const auto& row = mdp.next(h, s, a);
                double q = mdp.reward(h, s, a);
                for (std::size_t j = 0; j < row.states.size(); ++j) q += row.probs[j] * next[row.states[j]];
                table.q[h][s][a] = q;
                if (q > table.q[h][s][best_action]) best_action = a;
            }
            table.policy.set(h, s, best_action);
            table.values[h][s] = table.q[h][s][best_action];
        }
        next = table.values[h];
    }
    return table;
}

std::vector<std::vector<double>> policy_evaluation(const FiniteMdp& mdp, const Policy& policy) {
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states()) {
        throw std::invalid_argument("policy_evaluation: policy does not cover the MDP");
    }
    const int H = mdp.horizon();
    const int S = mdp.num_states();
    std::vector<std::vector<double>> values(H, std::vector<double>(S, 0.0));
    std::vector<double> next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            const int a = policy.at(h, s);
            const auto& row = mdp.next(h, s, a);
            double v = mdp.reward(h, s, a);
            for (std::size_t j = 0; j < row.states.size(); ++j) v += row.probs[j] * next[row.states[j]];
            values[h][s] = v;
        }
        next = values[h];
    }
    return values;
}

double expected_initial_value(const FiniteMdp& mdp, const std::vector<std::vector<double>>& values) {
    double total = 0.0;
    const auto& init = mdp.initial_distribution();
    for (int s = 0; s < init.size(); ++s) {
        if (init[s] != 0.0) total += init[s] * values[0][s];
    }
    return total;
}

double RunLog::cumulative_estimation_error() const {
    double total = 0.0;
    for (const auto& e : episodes) total += e.estimation_error;
    return total;
}

void track_estimation_error(EpisodeRecord& record, const std::vector<const GramState*>& grams,
                            const std::vector<Eigen::VectorXd>& features) {
    if (grams.size() != features.size()) {
        throw std::invalid_argument("track_estimation_error: one Gram state per step is required");
    }
    for (std::size_t h = 0; h < grams.size(); ++h) {
        record.estimation_error += features[h].dot(grams[h]->bonus_diagonal());
    }
}

double average_suboptimality(const RunLog& log, const RobustValueTable& oracle) {
    if (log.episodes.empty()) throw std::invalid_argument("average_suboptimality: empty log");
    double total = 0.0;
    for (const auto& e : log.episodes) {
        if (!e.policy_value) throw std::invalid_argument("average_suboptimality: missing policy value");
        total += oracle.values[0][e.initial_state] - *e.policy_value;
    }
    return total / log.num_episodes();
}

double regret_bound_rhs(int episodes, int horizon, double p, double beta, double estimation_error) {
    if (episodes <= 0) throw std::invalid_argument("regret_bound_rhs: K must be positive");
    const double H = horizon;
    return std::sqrt(2.0 * H * H * H * std::log(3.0 / p) / episodes) +
           2.0 * beta / episodes * estimation_error;
}

MonteCarloResult monte_carlo_return(const FiniteMdp& mdp, const Policy& policy, int episodes,
                                    std::uint64_t master_seed, std::uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("monte_carlo_return: need at least one episode");
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states()) {
        throw std::invalid_argument("monte_carlo_return: policy does not cover the MDP");
    }
    const auto kind = static_cast<std::uint64_t>(RunKind::evaluate);
    std::vector<double> returns(episodes);
    for (int k = 0; k < episodes; ++k) {
        auto init_rng = CounterRng::stream(master_seed, kind, seed, k, 0);
        int s = sample_initial_state(mdp, init_rng);
        double total = 0.0;
        for (int h = 0; h < mdp.horizon(); ++h) {
            auto rng = CounterRng::stream(master_seed, kind, seed, k, h + 1);
            const StepResult step = env_step(mdp, h, s, policy.at(h, s), rng);
            total += step.reward;
            s = step.next_state;
        }
        returns[k] = total;
    }
    MonteCarloResult out;
    for (double r : returns) out.mean += r;
    out.mean /= episodes;
    if (episodes > 1) {
        double ss = 0.0;
        for (double r : returns) ss += (r - out.mean) * (r - out.mean);
        out.std = std::sqrt(ss / (episodes - 1));
    }
    return out;
}

}  // namespace drlsvi
