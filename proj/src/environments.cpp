#include "drlsvi/environments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace drlsvi {

SimulatedMdpParams SimulatedMdpParams::from_l1(double delta, double xi_l1, double p) {
    SimulatedMdpParams params;
    params.delta = delta;
    params.xi.fill(xi_l1 / 4.0);
    params.p = p;
    return params;
}

double SimulatedMdpParams::xi_l1() const {
    double total = 0.0;
    for (double x : xi) total += std::abs(x);
    return total;
}

namespace simulated {
std::array<int, 4> action_vector(int action) {
    if (action < 0 || action >= kNumActions) throw std::out_of_range("simulated: action id out of range");
    std::array<int, 4> out{};
    for (int j = 0; j < 4; ++j) out[j] = (action >> (3 - j)) & 1 ? 1 : -1;
    return out;
}
}  // namespace simulated

namespace {

Eigen::VectorXd point_mass(int size, int at) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
    v[at] = 1.0;
    return v;
}

Eigen::VectorXd mixture(int size, int first, double w_first, int second, double w_second) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
    v[first] += w_first;
    v[second] += w_second;
    return v;
}

bool is_simulated_layout(const LinearMdpSpec& spec) {
    return spec.horizon == 3 && spec.num_states == 5 && spec.num_actions == simulated::kNumActions &&
           spec.dimension() == 4 && spec.fail_state == simulated::x4 && spec.has_factors();
}

}  // namespace

LinearMdpSpec build_simulated_mdp(const SimulatedMdpParams& params) {
    using namespace simulated;
    const double delta = params.delta;
    const double l1 = params.xi_l1();
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("simulated: delta must lie in (0,1)");
    if (!(delta + l1 < 1.0)) throw std::invalid_argument("simulated: delta + ||xi||_1 must be < 1");
    if (delta - l1 < 0.0) {
        throw std::invalid_argument("simulated: ||xi||_1 must not exceed delta (features would be negative)");
    }
    if (!(params.p > 0.0 && params.p < 1.0)) throw std::invalid_argument("simulated: p must lie in (0,1)");

    constexpr int S = 5;
    constexpr int A = kNumActions;
    constexpr int d = 4;
    std::vector<double> table(static_cast<std::size_t>(S) * A * d, 0.0);
    for (int a = 0; a < A; ++a) {
        const auto av = action_vector(a);
        double inner = 0.0;
        for (int j = 0; j < 4; ++j) inner += params.xi[j] * av[j];
        const double toward_goal = delta + inner;
        auto row = [&](int s) { return table.data() + (static_cast<std::size_t>(s) * A + a) * d; };
        for (int s : {x1, x2, x3}) {
            row(s)[s] = 1.0 - toward_goal;
            row(s)[3] = toward_goal;
        }
        row(x4)[2] = 1.0;
        row(x5)[3] = 1.0;
    }

    LinearMdpSpec spec;
    spec.horizon = 3;
    spec.num_states = S;
    spec.num_actions = A;
    spec.features = FeatureMap(S, A, d, std::move(table), FeatureFlags{true, true}, "simulated_five_state");
    spec.theta = {Eigen::Vector4d(0, 0, 0, 0), Eigen::Vector4d(0, 0, 0, 1), Eigen::Vector4d(0, 0, 0, 1)};
    const double p = params.p;
    const std::vector<Eigen::VectorXd> factors = {
        mixture(S, x2, 1.0 - p, x4, p),
        mixture(S, x3, 1.0 - p, x4, p),
        point_mass(S, x4),
        point_mass(S, x5),
    };
    // The third step's factors never matter (V_4 = 0); they repeat step two.
    spec.mu = {factors, factors, factors};
    spec.initial_distribution = point_mass(S, x1);
    spec.fail_state = x4;
    return spec;
}

LinearMdpSpec perturb_target(const LinearMdpSpec& source, double q) {
    using namespace simulated;
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("perturb_target: q must lie in [0,1]");
    if (!is_simulated_layout(source)) {
        throw std::invalid_argument("perturb_target: spec is not the simulated five-state MDP");
    }
    LinearMdpSpec target = source;
    const int S = source.num_states;
    target.mu[0] = {point_mass(S, x2), point_mass(S, x3), point_mass(S, x4),
                    mixture(S, x5, 1.0 - q, x4, q)};
    return target;
}

double critical_q(double delta, double xi_l1) {
    const double m = delta + xi_l1;
    if (!(m > 0.0 && m < 1.0)) throw std::invalid_argument("critical_q: delta + ||xi||_1 must lie in (0,1)");
    return (4.0 - 2.0 * m * (3.0 - m)) / (4.0 - 2.0 * m);
}

double tent_feature(double price, double anchor, double spacing) {
    return std::max(0.0, 1.0 - std::abs(price - anchor) / spacing);
}

int PutOptionModel::lattice_state(int start, int ups, int downs) const {
    const int moves = ups + downs;
    if (start < 0 || start >= static_cast<int>(start_offsets_.size()) || ups < 0 || downs < 0 ||
        moves > horizon_) {
        throw std::out_of_range("put option: lattice coordinates out of range");
    }
    return start_offsets_[start] + moves * (moves + 1) / 2 + ups;
}

PutOptionModel build_put_option(const PutOptionParams& params) {
    using namespace put_option;
    if (!(params.p_up > 0.0 && params.p_up < 1.0)) throw std::invalid_argument("put option: p_up must lie in (0,1)");
    if (params.horizon <= 0) throw std::invalid_argument("put option: horizon must be positive");
    if (params.anchors < 2) throw std::invalid_argument("put option: need at least two anchors");
    if (params.initial_grid_points < 1) throw std::invalid_argument("put option: empty initial grid");
    if (!(params.up > 0.0 && params.down > 0.0)) throw std::invalid_argument("put option: move factors must be positive");

    const int H = params.horizon;
    const int d = params.anchors;
    const int D = d + 1;
    const int per_start = (H + 1) * (H + 2) / 2;
    const int starts = params.initial_grid_points;
    const int S = starts * per_start + 1;
    constexpr int A = 2;

    PutOptionModel model;
    model.horizon_ = H;
    model.exit_state = S - 1;
    model.spacing = params.anchor_span / d;
    for (int i = 0; i < d; ++i) model.anchors.push_back(params.anchor_start + i * model.spacing);
    model.prices.assign(S, std::numeric_limits<double>::quiet_NaN());
    for (int j = 0; j < starts; ++j) model.start_offsets_.push_back(j * per_start);

    const double grid_step =
        starts > 1 ? (params.initial_high - params.initial_low) / (starts - 1) : 0.0;
    for (int j = 0; j < starts; ++j) {
        const double s0 = params.initial_low + j * grid_step;
        for (int n = 0; n <= H; ++n) {
            for (int u = 0; u <= n; ++u) {
                model.prices[model.lattice_state(j, u, n - u)] =
                    s0 * std::pow(params.up, u) * std::pow(params.down, n - u);
            }
        }
    }

    std::vector<double> table(static_cast<std::size_t>(S) * A * D, 0.0);
    const int tent_action = params.swap_actions ? kHold : kExercise;
    const int payoff_action = params.swap_actions ? kExercise : kHold;
    for (int s = 0; s < S - 1; ++s) {
        const double price = model.prices[s];
        double* tents = table.data() + (static_cast<std::size_t>(s) * A + tent_action) * D;
        for (int i = 0; i < d; ++i) tents[i] = tent_feature(price, model.anchors[i], model.spacing);
        double* payoff = table.data() + (static_cast<std::size_t>(s) * A + payoff_action) * D;
        payoff[d] = std::max(0.0, params.strike - price);
    }

    const auto cells = static_cast<std::size_t>(S) * A;
    ExplicitDynamics dyn;
    dyn.rewards.assign(H, std::vector<double>(cells, 0.0));
    dyn.kernel.assign(H, std::vector<SparseDistribution>(cells));
    for (int h = 0; h < H; ++h) {
        for (int j = 0; j < starts; ++j) {
            for (int n = 0; n <= H; ++n) {
                for (int u = 0; u <= n; ++u) {
                    const int s = model.lattice_state(j, u, n - u);
                    dyn.rewards[h][s * A + kExercise] = std::max(0.0, params.strike - model.prices[s]);
                    dyn.kernel[h][s * A + kExercise] = {{model.exit_state}, {1.0}};
                    auto& hold = dyn.kernel[h][s * A + kHold];
                    if (n < H) {
                        hold.states = {model.lattice_state(j, u + 1, n - u), model.lattice_state(j, u, n - u + 1)};
                        hold.probs = {params.p_up, 1.0 - params.p_up};
                    } else {
                        // Beyond the horizon; never sampled within an episode.
                        hold = {{s}, {1.0}};
                    }
                }
            }
        }
        for (int a = 0; a < A; ++a) dyn.kernel[h][model.exit_state * A + a] = {{model.exit_state}, {1.0}};
    }

    LinearMdpSpec& spec = model.spec;
    spec.horizon = H;
    spec.num_states = S;
    spec.num_actions = A;
    spec.features = FeatureMap(S, A, D, std::move(table), FeatureFlags{false, false}, "put_option");
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(D);
    theta[d] = 1.0;
    spec.theta.assign(H, theta);
    spec.initial_distribution = Eigen::VectorXd::Zero(S);
    for (int j = 0; j < starts; ++j) spec.initial_distribution[model.lattice_state(j, 0, 0)] = 1.0 / starts;
    spec.fail_state = model.exit_state;
    spec.explicit_dynamics = std::move(dyn);
    return model;
}

FeatureMap tabular_feature_encoding(int num_states, int num_actions) {
    if (num_states <= 0 || num_actions <= 0) throw std::invalid_argument("tabular: sizes must be positive");
    const int d = num_states * num_actions;
    std::vector<double> table(static_cast<std::size_t>(d) * d, 0.0);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            const int index = s * num_actions + a;
            table[static_cast<std::size_t>(index) * d + index] = 1.0;
        }
    }
    return FeatureMap(num_states, num_actions, d, std::move(table), FeatureFlags{true, true}, "tabular");
}

LinearMdpSpec build_random_tabular(int num_states, int num_actions, int horizon, std::uint64_t seed) {
    if (horizon <= 0) throw std::invalid_argument("tabular: horizon must be positive");
    LinearMdpSpec spec;
    spec.horizon = horizon;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.features = tabular_feature_encoding(num_states, num_actions);
    const int d = spec.dimension();
    CounterRng rng(CounterRng::derive_key({seed, static_cast<std::uint64_t>(RunKind::environment)}));
    for (int h = 0; h < horizon; ++h) {
        Eigen::VectorXd theta(d);
        for (int i = 0; i < d; ++i) theta[i] = rng.uniform();
        spec.theta.push_back(std::move(theta));
        std::vector<Eigen::VectorXd> factors;
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd m(num_states);
            for (int s = 0; s < num_states; ++s) m[s] = -std::log1p(-rng.uniform());
            m /= m.sum();
            factors.push_back(std::move(m));
        }
        spec.mu.push_back(std::move(factors));
    }
    spec.initial_distribution = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
    return spec;
}

namespace {
int sample_from(const double* probs, const int* states, std::size_t n, double u) {
    double cumulative = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        cumulative += probs[j];
        if (u < cumulative) return states[j];
    }
    // Rounding left u above the accumulated mass: take the last positive entry.
    for (std::size_t j = n; j-- > 0;) {
        if (probs[j] > 0.0) return states[j];
    }
    throw std::logic_error("sample_from: empty distribution");
}
}  // namespace

StepResult env_step(const FiniteMdp& mdp, int step, int state, int action, CounterRng& rng) {
    const auto& row = mdp.next(step, state, action);
    const int next = sample_from(row.probs.data(), row.states.data(), row.states.size(), rng.uniform());
    return {mdp.reward(step, state, action), next};
}

int sample_initial_state(const FiniteMdp& mdp, CounterRng& rng) {
    const Eigen::VectorXd& init = mdp.initial_distribution();
    std::vector<int> ids(init.size());
    for (int s = 0; s < init.size(); ++s) ids[s] = s;
    return sample_from(init.data(), ids.data(), ids.size(), rng.uniform());
}

}  // namespace drlsvi
