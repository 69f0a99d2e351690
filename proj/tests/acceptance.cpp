// Acceptance checks, one per criterion id (1..9).
//
//   acceptance <id>     run one criterion
//   acceptance all      run every criterion
//
// Each criterion prints a single line "criterion <id>: PASS|FAIL <details>"
// and the exit status is nonzero if any requested criterion fails.

#include "drlsvi/agents.hpp"
#include "drlsvi/environments.hpp"
#include "drlsvi/oracle.hpp"
#include "drlsvi/runner.hpp"
#include "drlsvi/tv_duality.hpp"

#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

namespace {

using namespace drlsvi;
using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
    bool pass;
    std::string details;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("drlsvi_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1: dual vs greedy-transport primal on random instances.
Outcome duality_equivalence() {
    Stopwatch clock;
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> support(1, 8);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    const double cap = 5.0;
    double worst = 0.0;
    int instances = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = support(rng);
        std::vector<double> values(n);
        for (auto& v : values) v = cap * value(rng);
        const auto probs = testing::dirichlet(rng, n);
        for (int k = 0; k <= 10; ++k) {
            const double rho = k / 10.0;
            const double dual = tv::tv_worst_case_expectation(values, probs, rho, cap);
            const double primal = tv::brute_force_tv_infimum(values, probs, rho, cap);
            worst = std::max(worst, std::abs(dual - primal));
            ++instances;
        }
    }
    const double t = clock.seconds();
    return {instances >= 10000 && worst < 1e-10 && t < 10.0,
            fmt("%.0f instances, max |dual-primal| = %.3g (< 1e-10), %.2fs (< 10s)", instances, worst, t)};
}

// 2: ridge_dual_sweep vs a 1e-4 alpha grid on signed coefficients.
Outcome sweep_exactness() {
    Stopwatch clock;
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> coef(-1.0, 1.0), unit(0.0, 1.0);
    const double cap = 3.0;
    double worst = 0.0;
    const int instances = 1000;
    for (int trial = 0; trial < instances; ++trial) {
        std::vector<tv::WeightedValue> terms(1 + trial % 10);
        for (auto& t : terms) t = {coef(rng), cap * unit(rng)};
        const double rho = std::floor(unit(rng) * 11.0) / 10.0;
        const auto sol = tv::ridge_dual_sweep(terms, rho, cap);
        worst = std::max(worst, std::abs(sol.value - testing::grid_sweep(terms, rho, cap, 1e-4)));
    }
    const double t = clock.seconds();
    return {worst <= 1e-4 && t < 10.0,
            fmt("%.0f instances, max |sweep-grid| = %.3g (<= 1e-4), %.2fs (< 10s)", instances, worst, t)};
}

// 3: robust value iteration vs exhaustive extreme-point adversaries.
Outcome robust_dp_brute_force() {
    Stopwatch clock;
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> rho_pick(0, 10);
    double worst = 0.0;
    const int instances = 200;
    for (int trial = 0; trial < instances; ++trial) {
        const int S = 2 + trial % 3, A = 1 + (trial / 3) % 3, H = 1 + (trial / 9) % 3, d = 1 + (trial / 27) % 4;
        const auto spec = testing::random_tiny_spec(rng, S, A, H, d);
        UncertaintyLevels rho(H, d);
        for (int h = 0; h < H; ++h) {
            for (int i = 0; i < d; ++i) rho.set(h, i, rho_pick(rng) / 10.0);
        }
        const auto table = robust_value_iteration(spec, rho);
        const auto expected = testing::enumerate_robust_values(spec, rho);
        for (int h = 0; h < H; ++h) {
            for (int s = 0; s < S; ++s) worst = std::max(worst, std::abs(table.values[h][s] - expected[h][s]));
        }
    }
    const double t = clock.seconds();
    return {worst < 1e-8 && t < 30.0,
            fmt("%.0f random DRMDPs, max |DP-enumeration| = %.3g (< 1e-8), %.2fs (< 30s)", instances, worst, t)};
}

// 4: tabular rho = 0 equivalence of the robust and nominal planners.
Outcome tabular_equivalence() {
    Stopwatch clock;
    const auto spec = build_random_tabular(4, 3, 3, 404);
    const auto features = std::make_shared<const FeatureMap>(spec.features);
    AgentConfig rc;
    rc.kind = AgentKind::robust;
    rc.beta = 0.5;
    rc.rho = UncertaintyLevels(3, 12, 0.0);
    AgentConfig nc = rc;
    nc.kind = AgentKind::nominal;
    LsviAgent robust(features, spec.theta, spec.fail_state, rc);
    LsviAgent nominal(features, spec.theta, spec.fail_state, nc);
    const FiniteMdp mdp = induce_finite_mdp(spec);
    double worst = 0.0;
    int policy_mismatches = 0;
    const int K = 200;
    for (int k = 0; k < K; ++k) {
        const auto pr = robust.plan();
        const auto pn = nominal.plan();
        for (int h = 0; h < 3; ++h) {
            for (int s = 0; s < 4; ++s) {
                for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(pr.q_value(h, s, a) - pn.q_value(h, s, a)));
            }
        }
        if (!(pr.greedy_policy() == pn.greedy_policy())) ++policy_mismatches;
        // Both agents see the same stream: actions follow the robust agent's plan,
        // which equals the nominal one whenever the policies agree.
        auto init = CounterRng::stream(404, 1, 0, k, 0);
        int s = sample_initial_state(mdp, init);
        for (int h = 0; h < 3; ++h) {
            auto rng = CounterRng::stream(404, 1, 0, k, h + 1);
            const int a = pr.act(h, s);
            const auto step = env_step(mdp, h, s, a, rng);
            robust.observe(h, s, a, step.reward, step.next_state);
            nominal.observe(h, s, a, step.reward, step.next_state);
            s = step.next_state;
        }
    }
    const double t = clock.seconds();
    return {worst < 1e-10 && policy_mismatches == 0 && t < 10.0,
            fmt("K=%.0f, max |Q_robust-Q_nominal| = %.3g (< 1e-10), %.0f policy mismatches, %.2fs (< 10s)", K, worst,
                policy_mismatches, t)};
}

// 5: first-step action switch of the exact non-robust target oracle.
Outcome critical_perturbation() {
    Stopwatch clock;
    bool pass = true;
    std::string details;
    const UncertaintyLevels zero(3, 4, 0.0);
    for (const double xi : {0.1, 0.3}) {
        const auto source = build_simulated_mdp(SimulatedMdpParams::from_l1(0.3, xi));
        const double expected = xi == 0.1 ? 0.6 : 0.4;
        double observed = -1.0;
        int previous = -1;
        bool clean = true;
        for (int k = 0; k <= 100; ++k) {
            const double q = k / 100.0;
            const int a = robust_value_iteration(perturb_target(source, q), zero).policy.at(0, simulated::x1);
            if (a != simulated::kAllPlus && a != simulated::kAllMinus) clean = false;
            if (previous == simulated::kAllPlus && a == simulated::kAllMinus && observed < 0) observed = q;
            previous = a;
        }
        const bool ok = clean && observed >= 0 && std::abs(observed - expected) <= 0.01 + 1e-12;
        pass = pass && ok;
        details += fmt("||xi||_1=%.1f: switch at q=%.2f (expected %.2f +- 0.01); ", xi, observed, expected);
    }
    const double t = clock.seconds();
    pass = pass && t < 5.0;
    return {pass, details + fmt("%.2fs (< 5s)", t)};
}

runner::ExperimentConfig simulated_config(double xi_l1) {
    json doc = {{"environment", {{"name", "simulated"}, {"delta", 0.3}, {"xi_l1", xi_l1}, {"p", 0.001}}},
                {"rho", {{"entries", {{{"h", 1}, {"i", 4}, {"value", 0.5}}}}}},
                {"train_episodes", 100},
                {"eval_episodes", 100},
                {"num_seeds", 10},
                {"master_seed", 20240501}};
    return runner::parse_config(doc);
}

// 6: AveSubopt against the computable bound with the theoretical beta.
Outcome theorem_bound() {
    Stopwatch clock;
    auto config = simulated_config(0.1);
    config.beta.constant.reset();
    config.beta.recipe_c = 1.0;
    config.confidence = 0.05;
    const auto env = runner::make_environment(config.environment);
    const int seeds = 20;
    std::vector<int> held(seeds, 0);
    std::vector<double> gap(seeds, 0.0);
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < worker_count(); ++w) {
        pool.emplace_back([&] {
            for (int s = next++; s < seeds; s = next++) {
                const auto r = runner::train_agent(config, env, AgentKind::robust, static_cast<std::uint64_t>(s));
                held[s] = *r.ave_subopt <= *r.thm1_bound ? 1 : 0;
                gap[s] = *r.thm1_bound - *r.ave_subopt;
            }
        });
    }
    for (auto& t : pool) t.join();
    int count = 0;
    double min_gap = 1e300;
    for (int s = 0; s < seeds; ++s) {
        count += held[s];
        min_gap = std::min(min_gap, gap[s]);
    }
    const double t = clock.seconds();
    return {count >= 19 && t < 120.0,
            fmt("bound held in %.0f/20 seeds (>= 19), min(bound - AveSubopt) = %.4g, %.2fs (< 120s)", count, min_gap,
                t)};
}

std::map<std::pair<std::string, double>, std::vector<double>> by_agent_target(
    const std::vector<runner::ResultRow>& rows) {
    std::map<std::pair<std::string, double>, std::vector<double>> out;
    for (const auto& r : rows) out[{r.agent, r.target_param}].push_back(r.mean_reward);
    return out;
}

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
}

// 7: robust beats nominal far from the source, nominal is no worse at the source.
Outcome robustness_crossover() {
    Stopwatch clock;
    auto config = simulated_config(0.1);
    config.beta.constant = 2.0;
    config.targets = {0.0, 0.9};
    runner::RunOptions options;
    options.out = scratch("c7");
    options.jobs = worker_count();
    const auto groups = by_agent_target(runner::cmd_sweep(config, options));
    // Rows come sorted by agent then seed, so per-target vectors are paired by seed.
    const auto& r9 = groups.at({"robust", 0.9});
    const auto& n9 = groups.at({"nominal", 0.9});
    int wins = 0;
    for (std::size_t s = 0; s < r9.size(); ++s) wins += r9[s] > n9[s] ? 1 : 0;
    const double diff9 = mean_of(r9) - mean_of(n9);
    const double r0 = mean_of(groups.at({"robust", 0.0}));
    const double n0 = mean_of(groups.at({"nominal", 0.0}));
    const double t = clock.seconds();
    fs::remove_all(options.out);
    const bool pass = diff9 > 0.0 && wins >= 8 && n0 >= r0 && t < 300.0;
    return {pass, fmt("q=0.9: robust-nominal = %.4f, robust ahead in %.0f/10 seeds (>= 8); ", diff9, wins) +
                      fmt("q=0.0: nominal %.4f vs robust %.4f; %.1fs (< 300s)", n0, r0, t)};
}

// 8: put-option stability across the p_u sweep.
Outcome put_option_stability() {
    Stopwatch clock;
    json doc = {{"environment", {{"name", "put_option"}, {"p_up", 0.5}, {"horizon", 10}, {"anchors", 20},
                                 {"swap_actions", true}}},
                {"beta", 1.0},
                {"rho", 0.5},
                {"train_episodes", 500},
                {"eval_episodes", 100},
                {"num_seeds", 10},
                {"master_seed", 20240501}};
    json targets = json::array();
    for (int k = 0; k < 15; ++k) targets.push_back(std::round((0.15 + 0.05 * k) * 100.0) / 100.0);
    doc["targets"] = targets;
    const auto config = runner::parse_config(doc);
    runner::RunOptions options;
    options.out = scratch("c8");
    options.jobs = worker_count();
    const auto groups = by_agent_target(runner::cmd_sweep(config, options));
    auto curve = [&](const std::string& agent) {
        std::vector<double> means;
        for (const auto& [key, values] : groups) {
            if (key.first == agent) means.push_back(mean_of(values));
        }
        return means;
    };
    auto spread = [](const std::vector<double>& v) {
        const double m = mean_of(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    const auto robust = curve("robust"), nominal = curve("nominal");
    const double sr = spread(robust), sn = spread(nominal);
    const double wr = *std::min_element(robust.begin(), robust.end());
    const double wn = *std::min_element(nominal.begin(), nominal.end());
    const double t = clock.seconds();
    fs::remove_all(options.out);
    const bool pass = robust.size() == 15 && sr < sn && wr >= wn && t < 600.0;
    return {pass, fmt("std over p_u: robust %.4f < nominal %.4f; worst case: robust %.4f >= nominal %.4f; ", sr, sn,
                      wr, wn) +
                      fmt("%.1fs (< 600s)", t)};
}

// 9: byte-identical CSV across reruns.
Outcome reproducibility() {
    Stopwatch clock;
    auto sim = simulated_config(0.1);
    sim.beta.constant = 2.0;
    sim.targets = {0.0, 0.3, 0.6, 0.9};
    sim.seeds = {0, 1, 2};
    json put_doc = {{"environment", {{"name", "put_option"}, {"swap_actions", true}}},
                    {"beta", 1.0},
                    {"rho", 0.5},
                    {"train_episodes", 20},
                    {"eval_episodes", 20},
                    {"targets", {0.3, 0.5, 0.7}},
                    {"seeds", {0, 1}}};
    auto put = runner::parse_config(put_doc);
    bool identical = true;
    std::string details;
    for (const auto* config : {&sim, &put}) {
        std::string first;
        for (int run = 0; run < 3; ++run) {
            runner::RunOptions options;
            options.out = scratch("c9_" + std::to_string(run));
            // Third run reuses the second directory: resumed cells must not change bytes.
            if (run == 2) options.out = fs::temp_directory_path() / "drlsvi_acceptance_c9_1";
            options.jobs = run == 0 ? 1 : worker_count();
            if (run == 2) {
                runner::cmd_sweep(*config, options);
            } else {
                fs::remove_all(options.out);
                runner::cmd_sweep(*config, options);
            }
            const std::string csv = slurp(options.out / "results.csv");
            if (run == 0) {
                first = csv;
            } else if (csv != first) {
                identical = false;
            }
        }
        details += config->environment.name + " " + std::to_string(first.size()) + " bytes; ";
    }
    for (int run = 0; run < 2; ++run) fs::remove_all(scratch("c9_" + std::to_string(run)));
    return {identical, details + (identical ? "fresh, parallel and resumed reruns byte-identical"
                                            : "CSV bytes differ between reruns") +
                           fmt(", %.1fs", clock.seconds())};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& criteria() {
    static const std::map<int, std::pair<const char*, std::function<Outcome()>>> table = {
        {1, {"duality oracle equivalence", duality_equivalence}},
        {2, {"sweep exactness", sweep_exactness}},
        {3, {"robust DP vs brute force", robust_dp_brute_force}},
        {4, {"tabular rho=0 equivalence", tabular_equivalence}},
        {5, {"critical perturbation", critical_perturbation}},
        {6, {"bound vs AveSubopt", theorem_bound}},
        {7, {"robustness crossover", robustness_crossover}},
        {8, {"put-option stability", put_option_stability}},
        {9, {"reproducibility", reproducibility}},
    };
    return table;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <1-9|all>\n", argv[0]);
        return 2;
    }
    std::vector<int> ids;
    const std::string arg = argv[1];
    if (arg == "all") {
        for (const auto& [id, _] : criteria()) ids.push_back(id);
    } else {
        const int id = std::atoi(argv[1]);
        if (!criteria().count(id)) {
            std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
            return 2;
        }
        ids.push_back(id);
    }
    int failures = 0;
    for (int id : ids) {
        const auto& [name, fn] = criteria().at(id);
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s %s: %s\n", id, outcome.pass ? "PASS" : "FAIL", name, outcome.details.c_str());
        std::fflush(stdout);
        failures += outcome.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
