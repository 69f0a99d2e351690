#pragma once

#include "drlsvi/core_types.hpp"
#include "drlsvi/rng.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace drlsvi {

// ---------------------------------------------------------------------------
// Five-state linear MDP with a fail state and a TV-perturbed first step.

struct SimulatedMdpParams {
    double delta = 0.3;
    std::array<double, 4> xi{0.025, 0.025, 0.025, 0.025};
    /// Probability of falling into the fail state from x1/x2's factors.
    double p = 0.001;

    /// xi spread evenly over the four coordinates.
    static SimulatedMdpParams from_l1(double delta, double xi_l1, double p = 0.001);
    double xi_l1() const;
};

namespace simulated {
/// States x1..x5 as zero-based ids.
inline constexpr int x1 = 0, x2 = 1, x3 = 2, x4 = 3, x5 = 4;
inline constexpr int kNumActions = 16;
/// Action id 0 is (-1,-1,-1,-1), id 15 is (1,1,1,1); lexicographic in between.
inline constexpr int kAllMinus = 0;
inline constexpr int kAllPlus = 15;
std::array<int, 4> action_vector(int action);
}  // namespace simulated

LinearMdpSpec build_simulated_mdp(const SimulatedMdpParams& params);

/// Replaces the first-step factors with (d_x2, d_x3, d_x4, (1-q) d_x5 + q d_x4).
LinearMdpSpec perturb_target(const LinearMdpSpec& source, double q);

/// Perturbation level above which (-1,-1,-1,-1) is claimed optimal at x1:
/// [4 - 2m(3 - m)] / [4 - 2m] with m = delta + ||xi||_1.
double critical_q(double delta, double xi_l1);

// ---------------------------------------------------------------------------
// American put option on a binomial price lattice.

struct PutOptionParams {
    double p_up = 0.5;
    int horizon = 10;
    int anchors = 20;
    double strike = 100.0;
    double up = 1.02;
    double down = 0.98;
    double initial_low = 95.0;
    double initial_high = 105.0;
    int initial_grid_points = 41;
    double anchor_start = 80.0;
    double anchor_span = 60.0;
    /// Exchange the two feature rows relative to the default map.
    bool swap_actions = false;
};

namespace put_option {
inline constexpr int kExercise = 0;
inline constexpr int kHold = 1;
}  // namespace put_option

struct PutOptionModel {
    LinearMdpSpec spec;
    /// Price of every state; NaN for the exit state.
    std::vector<double> prices;
    int exit_state = 0;
    std::vector<double> anchors;
    double spacing = 0.0;

    /// Lattice state reached from initial grid point `start` after `ups` up
    /// moves and `downs` down moves.
    int lattice_state(int start, int ups, int downs) const;

private:
    friend PutOptionModel build_put_option(const PutOptionParams& params);
    int horizon_ = 0;
    std::vector<int> start_offsets_;
};

PutOptionModel build_put_option(const PutOptionParams& params);

/// max{0, 1 - |price - anchor| / spacing}
double tent_feature(double price, double anchor, double spacing);

// ---------------------------------------------------------------------------
// Tabular helpers.

/// One-hot map of dimension |S|*|A|; index s*|A| + a.
FeatureMap tabular_feature_encoding(int num_states, int num_actions);

/// Random tabular MDP with canonical features: rewards uniform in [0,1],
/// kernels drawn from a seeded generator, uniform initial distribution.
LinearMdpSpec build_random_tabular(int num_states, int num_actions, int horizon, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct StepResult {
    double reward;
    int next_state;
};

/// Samples s' ~ P_h(.|s,a) with one draw from `rng` and returns (r_h(s,a), s').
StepResult env_step(const FiniteMdp& mdp, int step, int state, int action, CounterRng& rng);

/// Draws an initial state from the MDP's initial distribution.
int sample_initial_state(const FiniteMdp& mdp, CounterRng& rng);

}  // namespace drlsvi
