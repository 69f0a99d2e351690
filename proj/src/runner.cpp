#include "drlsvi/runner.hpp"

#include "drlsvi/spec_io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace drlsvi::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

template <typename T>
T read_or(const json& doc, const char* key, T fallback) {
    return doc.contains(key) ? doc.at(key).get<T>() : fallback;
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : doc.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

EnvironmentConfig parse_environment(const json& doc) {
    if (!doc.is_object()) throw ConfigError("environment must be an object");
    EnvironmentConfig env;
    env.name = doc.at("name").get<std::string>();
    if (env.name == "simulated") {
        reject_unknown(doc, {"name", "delta", "xi", "xi_l1", "p"}, "environment");
        const double delta = read_or(doc, "delta", 0.3);
        const double p = read_or(doc, "p", 0.001);
        if (doc.contains("xi") && doc.contains("xi_l1")) {
            throw ConfigError("environment: give either xi or xi_l1, not both");
        }
        if (doc.contains("xi")) {
            env.simulated.delta = delta;
            env.simulated.p = p;
            env.simulated.xi = doc.at("xi").get<std::array<double, 4>>();
        } else {
            env.simulated = SimulatedMdpParams::from_l1(delta, read_or(doc, "xi_l1", 0.1), p);
        }
    } else if (env.name == "put_option") {
        reject_unknown(doc,
                       {"name", "p_up", "horizon", "anchors", "strike", "up", "down", "initial_low",
                        "initial_high", "initial_grid_points", "anchor_start", "anchor_span", "swap_actions"},
                       "environment");
        auto& p = env.put_option;
        p.p_up = read_or(doc, "p_up", p.p_up);
        p.horizon = read_or(doc, "horizon", p.horizon);
        p.anchors = read_or(doc, "anchors", p.anchors);
        p.strike = read_or(doc, "strike", p.strike);
        p.up = read_or(doc, "up", p.up);
        p.down = read_or(doc, "down", p.down);
        p.initial_low = read_or(doc, "initial_low", p.initial_low);
        p.initial_high = read_or(doc, "initial_high", p.initial_high);
        p.initial_grid_points = read_or(doc, "initial_grid_points", p.initial_grid_points);
        p.anchor_start = read_or(doc, "anchor_start", p.anchor_start);
        p.anchor_span = read_or(doc, "anchor_span", p.anchor_span);
        p.swap_actions = read_or(doc, "swap_actions", p.swap_actions);
    } else if (env.name == "tabular") {
        reject_unknown(doc, {"name", "states", "actions", "horizon", "seed"}, "environment");
        env.tabular_states = read_or(doc, "states", env.tabular_states);
        env.tabular_actions = read_or(doc, "actions", env.tabular_actions);
        env.tabular_horizon = read_or(doc, "horizon", env.tabular_horizon);
        env.tabular_seed = read_or<std::uint64_t>(doc, "seed", env.tabular_seed);
        if (env.tabular_states < 1 || env.tabular_actions < 1 || env.tabular_horizon < 1) {
            throw ConfigError("environment: tabular sizes must be positive");
        }
    } else {
        throw ConfigError("environment: unknown name '" + env.name + "'");
    }
    return env;
}

RhoConfig parse_rho(const json& doc) {
    RhoConfig rho;
    if (doc.is_number()) {
        rho.homogeneous = doc.get<double>();
    } else if (doc.is_array()) {
        rho.matrix = doc.get<std::vector<std::vector<double>>>();
    } else if (doc.is_object()) {
        reject_unknown(doc, {"homogeneous", "entries"}, "rho");
        rho.homogeneous = read_or(doc, "homogeneous", 0.0);
        for (const auto& e : doc.value("entries", json::array())) {
            rho.entries.push_back({e.at("h").get<int>(), e.at("i").get<int>(), e.at("value").get<double>()});
        }
    } else {
        throw ConfigError("rho must be a number, a matrix or an object");
    }
    return rho;
}

std::vector<double> default_targets(const EnvironmentConfig& env) {
    if (env.name == "put_option") return {env.put_option.p_up};
    return {0.0};
}

void check_targets(const ExperimentConfig& config) {
    for (double t : config.targets) {
        if (!std::isfinite(t)) throw ConfigError("targets must be finite");
        const auto& name = config.environment.name;
        if (name == "simulated" && (t < 0.0 || t > 1.0)) {
            throw ConfigError("targets: perturbation q must lie in [0, 1]");
        }
        if (name == "put_option" && (t <= 0.0 || t >= 1.0)) {
            throw ConfigError("targets: p_u must lie in (0, 1)");
        }
        if (name == "tabular" && t != 0.0) {
            throw ConfigError("targets: the tabular environment only has the source domain (0)");
        }
    }
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

/// Everything that determines a trained policy, minus the seed list.
std::string training_fingerprint(const ExperimentConfig& config) {
    json doc = config_to_json(config);
    doc.erase("seeds");
    doc.erase("output_dir");
    doc.erase("eval_episodes");
    doc.erase("targets");
    doc.erase("record_timing");
    return hex(fnv1a(doc.dump()));
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return doc.at(key).get<double>();
}

std::vector<std::uint64_t> resolve_seeds(const ExperimentConfig& config, const RunOptions& options) {
    auto seeds = options.seeds ? *options.seeds : config.seeds;
    if (seeds.empty()) throw ConfigError("no seeds to run");
    return seeds;
}

struct Cell {
    AgentKind kind;
    std::uint64_t seed;
};

std::vector<Cell> make_cells(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
    std::vector<Cell> cells;
    for (AgentKind kind : config.agents) {
        for (auto seed : seeds) cells.push_back({kind, seed});
    }
    return cells;
}

fs::path cell_dir(const fs::path& out, const Cell& cell) {
    return out / "cells" / (std::string(to_string(cell.kind)) + "_seed" + std::to_string(cell.seed));
}

/// Runs fn(0..n-1) on `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

json train_summary(const ExperimentConfig& config, const Environment& env, const TrainResult& r) {
    return {{"agent", to_string(r.kind)},
            {"seed", r.seed},
            {"env", env.config.name},
            {"fingerprint", training_fingerprint(config)},
            {"beta", r.beta},
            {"train_episodes", config.train_episodes},
            {"ave_subopt", optional_json(r.ave_subopt)},
            {"est_error", r.estimation_error},
            {"thm1_bound", optional_json(r.thm1_bound)},
            {"seconds", r.seconds},
            {"policy", policy_to_json(r.policy)}};
}

TrainResult train_from_summary(const json& doc) {
    TrainResult r;
    r.kind = agent_kind_from_string(doc.at("agent").get<std::string>());
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.policy = policy_from_json(doc.at("policy"));
    r.beta = doc.at("beta").get<double>();
    r.ave_subopt = optional_from(doc, "ave_subopt");
    r.estimation_error = doc.at("est_error").get<double>();
    r.thm1_bound = optional_from(doc, "thm1_bound");
    r.seconds = doc.value("seconds", 0.0);
    return r;
}

void save_cell(const fs::path& dir, const ExperimentConfig& config, const Environment& env,
               const TrainResult& r) {
    write_file(dir / "runlog.json", run_log_to_json(r.log).dump() + "\n");
    // Written last: its presence marks the cell as complete.
    write_file(dir / "policy.json", train_summary(config, env, r).dump(1) + "\n");
}

std::optional<TrainResult> load_cell(const fs::path& dir, const ExperimentConfig& config) {
    const fs::path file = dir / "policy.json";
    if (!fs::exists(file)) return std::nullopt;
    try {
        const json doc = json::parse(read_file(file));
        if (doc.value("fingerprint", std::string{}) != training_fingerprint(config)) return std::nullopt;
        return train_from_summary(doc);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void sort_rows(std::vector<ResultRow>& rows, const ExperimentConfig& config) {
    auto agent_rank = [&](const std::string& name) {
        for (std::size_t i = 0; i < config.agents.size(); ++i) {
            if (name == to_string(config.agents[i])) return i;
        }
        return config.agents.size();
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
        const auto ra = agent_rank(a.agent), rb = agent_rank(b.agent);
        if (ra != rb) return ra < rb;
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.target_param < b.target_param;
    });
}

void write_results(const fs::path& out, const std::vector<ResultRow>& rows, bool record_timing) {
    write_file(out / "results.csv", to_csv(rows, record_timing));
    write_file(out / "summary.json", aggregate(rows).dump(1) + "\n");
}

json manifest(const ExperimentConfig& config, const std::string& command, const json& cells) {
    return {{"version", kVersion},
            {"command", command},
            {"fingerprint", training_fingerprint(config)},
            {"config", config_to_json(config)},
            {"cells", cells}};
}

}  // namespace

// ---------------------------------------------------------------------------

UncertaintyLevels RhoConfig::build(int horizon, int dimension) const {
    UncertaintyLevels levels(horizon, dimension, 0.0);
    auto check = [](double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("rho values must lie in [0, 1]");
        return v;
    };
    if (matrix) {
        if (matrix->size() != static_cast<std::size_t>(horizon)) {
            throw ConfigError("rho matrix needs " + std::to_string(horizon) + " rows");
        }
        for (int h = 0; h < horizon; ++h) {
            if ((*matrix)[h].size() != static_cast<std::size_t>(dimension)) {
                throw ConfigError("rho matrix rows need " + std::to_string(dimension) + " entries");
            }
            for (int i = 0; i < dimension; ++i) levels.set(h, i, check((*matrix)[h][i]));
        }
        return levels;
    }
    for (int h = 0; h < horizon; ++h) {
        for (int i = 0; i < dimension; ++i) levels.set(h, i, check(homogeneous));
    }
    for (const auto& e : entries) {
        if (e.step < 1 || e.step > horizon || e.coordinate < 1 || e.coordinate > dimension) {
            throw ConfigError("rho entry (" + std::to_string(e.step) + "," + std::to_string(e.coordinate) +
                              ") is outside 1..H x 1..d");
        }
        levels.set(e.step - 1, e.coordinate - 1, check(e.value));
    }
    return levels;
}

ExperimentConfig parse_config(const json& doc) {
    try {
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
        reject_unknown(doc,
                       {"environment", "agents", "beta", "lambda", "rho", "confidence",
                        "nominal_clip_at_horizon", "nominal_regress_rewards", "train_episodes",
                        "eval_episodes", "targets", "seeds", "num_seeds", "master_seed", "output_dir",
                        "record_timing"},
                       "config");
        ExperimentConfig config;
        config.environment = parse_environment(doc.at("environment"));

        if (doc.contains("agents")) {
            config.agents.clear();
            for (const auto& a : doc.at("agents")) {
                try {
                    config.agents.push_back(agent_kind_from_string(a.get<std::string>()));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            }
            if (config.agents.empty()) throw ConfigError("agents must not be empty");
        }

        if (doc.contains("beta")) {
            const json& beta = doc.at("beta");
            if (beta.is_number()) {
                config.beta.constant = beta.get<double>();
                if (!(*config.beta.constant >= 0.0)) throw ConfigError("beta must be non-negative");
            } else {
                reject_unknown(beta, {"recipe", "c"}, "beta");
                if (beta.value("recipe", std::string("theoretical")) != "theoretical") {
                    throw ConfigError("beta: the only recipe is 'theoretical'");
                }
                config.beta.recipe_c = read_or(beta, "c", 1.0);
                if (!(config.beta.recipe_c > 0.0)) throw ConfigError("beta: c must be positive");
            }
        }

        config.lambda = read_or(doc, "lambda", config.lambda);
        if (!(config.lambda > 0.0)) throw ConfigError("lambda must be positive");
        if (doc.contains("rho")) config.rho = parse_rho(doc.at("rho"));
        config.confidence = read_or(doc, "confidence", config.confidence);
        if (!(config.confidence > 0.0 && config.confidence < 1.0)) {
            throw ConfigError("confidence must lie in (0, 1)");
        }
        config.nominal_clip_at_horizon = read_or(doc, "nominal_clip_at_horizon", false);
        config.nominal_regress_rewards = read_or(doc, "nominal_regress_rewards", false);
        config.train_episodes = read_or(doc, "train_episodes", config.train_episodes);
        config.eval_episodes = read_or(doc, "eval_episodes", config.eval_episodes);
        if (config.train_episodes < 1) throw ConfigError("train_episodes must be at least 1");
        if (config.eval_episodes < 1) throw ConfigError("eval_episodes must be at least 1");

        config.targets = doc.contains("targets") ? doc.at("targets").get<std::vector<double>>()
                                                 : default_targets(config.environment);
        if (config.targets.empty()) throw ConfigError("targets must not be empty");
        check_targets(config);

        if (doc.contains("seeds") && doc.contains("num_seeds")) {
            throw ConfigError("give either seeds or num_seeds, not both");
        }
        if (doc.contains("seeds")) {
            config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            const int n = read_or(doc, "num_seeds", 10);
            if (n < 1) throw ConfigError("num_seeds must be at least 1");
            for (int s = 0; s < n; ++s) config.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (config.seeds.empty()) throw ConfigError("seeds must not be empty");
        config.master_seed = read_or<std::uint64_t>(doc, "master_seed", config.master_seed);
        config.output_dir = read_or<std::string>(doc, "output_dir", "");
        config.record_timing = read_or(doc, "record_timing", false);

        // Build once so that environment parameters and rho shapes are checked up front.
        const Environment env = make_environment(config.environment);
        config.rho.build(env.source.horizon, env.source.dimension());
        return config;
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json config_to_json(const ExperimentConfig& config) {
    const auto& e = config.environment;
    json env{{"name", e.name}};
    if (e.name == "simulated") {
        env["delta"] = e.simulated.delta;
        env["xi"] = e.simulated.xi;
        env["p"] = e.simulated.p;
    } else if (e.name == "put_option") {
        const auto& p = e.put_option;
        env.update({{"p_up", p.p_up},
                    {"horizon", p.horizon},
                    {"anchors", p.anchors},
                    {"strike", p.strike},
                    {"up", p.up},
                    {"down", p.down},
                    {"initial_low", p.initial_low},
                    {"initial_high", p.initial_high},
                    {"initial_grid_points", p.initial_grid_points},
                    {"anchor_start", p.anchor_start},
                    {"anchor_span", p.anchor_span},
                    {"swap_actions", p.swap_actions}});
    } else {
        env.update({{"states", e.tabular_states},
                    {"actions", e.tabular_actions},
                    {"horizon", e.tabular_horizon},
                    {"seed", e.tabular_seed}});
    }

    json agents = json::array();
    for (auto k : config.agents) agents.push_back(to_string(k));

    json beta = config.beta.constant ? json(*config.beta.constant)
                                     : json{{"recipe", "theoretical"}, {"c", config.beta.recipe_c}};
    json rho;
    if (config.rho.matrix) {
        rho = *config.rho.matrix;
    } else {
        json entries = json::array();
        for (const auto& en : config.rho.entries) {
            entries.push_back({{"h", en.step}, {"i", en.coordinate}, {"value", en.value}});
        }
        rho = {{"homogeneous", config.rho.homogeneous}, {"entries", entries}};
    }

    return {{"environment", env},
            {"agents", agents},
            {"beta", beta},
            {"lambda", config.lambda},
            {"rho", rho},
            {"confidence", config.confidence},
            {"nominal_clip_at_horizon", config.nominal_clip_at_horizon},
            {"nominal_regress_rewards", config.nominal_regress_rewards},
            {"train_episodes", config.train_episodes},
            {"eval_episodes", config.eval_episodes},
            {"targets", config.targets},
            {"seeds", config.seeds},
            {"master_seed", config.master_seed},
            {"output_dir", config.output_dir},
            {"record_timing", config.record_timing}};
}

// ---------------------------------------------------------------------------

LinearMdpSpec Environment::target(double parameter) const {
    if (config.name == "simulated") return perturb_target(source, parameter);
    if (config.name == "put_option") {
        PutOptionParams p = config.put_option;
        p.p_up = parameter;
        return build_put_option(p).spec;
    }
    return source;
}

bool Environment::bound_certifiable() const {
    const auto& flags = source.features.flags();
    return has_oracle() && flags.simplex_normalized && flags.reward_normalized;
}

Environment make_environment(const EnvironmentConfig& config) {
    Environment env;
    env.config = config;
    if (config.name == "simulated") {
        env.source = build_simulated_mdp(config.simulated);
    } else if (config.name == "put_option") {
        env.put_option = build_put_option(config.put_option);
        env.source = env.put_option->spec;
    } else if (config.name == "tabular") {
        env.source = build_random_tabular(config.tabular_states, config.tabular_actions, config.tabular_horizon,
                                          config.tabular_seed);
    } else {
        throw ConfigError("unknown environment '" + config.name + "'");
    }
    return env;
}

UncertaintyLevels agent_levels(const ExperimentConfig& config, const Environment& env, AgentKind kind) {
    const int H = env.source.horizon;
    const int d = env.source.dimension();
    if (kind == AgentKind::nominal) return UncertaintyLevels(H, d, 0.0);
    return config.rho.build(H, d);
}

AgentConfig make_agent_config(const ExperimentConfig& config, const Environment& env, AgentKind kind) {
    AgentConfig a;
    a.kind = kind;
    a.lambda = config.lambda;
    a.rho = agent_levels(config, env, kind);
    a.nominal_clip_at_horizon = config.nominal_clip_at_horizon;
    a.nominal_regress_rewards = config.nominal_regress_rewards;
    a.beta = config.beta.constant
                 ? *config.beta.constant
                 : AgentConfig::theoretical_beta(config.beta.recipe_c, env.source.dimension(), env.source.horizon,
                                                 config.train_episodes, config.confidence);
    return a;
}

TrainResult train_agent(const ExperimentConfig& config, const Environment& env, AgentKind kind,
                        std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const LinearMdpSpec& spec = env.source;
    const FiniteMdp mdp = induce_finite_mdp(spec);
    const AgentConfig agent_config = make_agent_config(config, env, kind);
    auto features = std::make_shared<const FeatureMap>(spec.features);
    LsviAgent agent(features, spec.theta, spec.fail_state, agent_config);

    std::optional<RobustValueTable> oracle;
    if (env.has_oracle()) oracle = robust_value_iteration(spec, agent_config.rho);

    TrainResult result;
    result.kind = kind;
    result.seed = seed;
    result.beta = agent_config.beta;
    const auto train_kind = static_cast<std::uint64_t>(RunKind::train);

    for (int k = 0; k < config.train_episodes; ++k) {
        const QParams params = agent.plan();
        EpisodeRecord record;
        auto init_rng = CounterRng::stream(config.master_seed, train_kind, seed, k, 0);
        int s = sample_initial_state(mdp, init_rng);
        record.initial_state = s;
        if (oracle) {
            const auto values = robust_policy_evaluation(spec, params.greedy_policy(), agent_config.rho);
            record.policy_value = values[0][s];
            record.optimal_value = oracle->values[0][s];
        }
        for (int h = 0; h < spec.horizon; ++h) {
            const int a = params.act(h, s);
            // Gram state of step h has not seen this episode yet.
            record.estimation_error += estimation_error_term(agent.gram(h), spec.features(s, a));
            auto rng = CounterRng::stream(config.master_seed, train_kind, seed, k, h + 1);
            const StepResult step = env_step(mdp, h, s, a, rng);
            record.states.push_back(s);
            record.actions.push_back(a);
            record.rewards.push_back(step.reward);
            record.total_reward += step.reward;
            agent.observe(h, s, a, step.reward, step.next_state);
            s = step.next_state;
        }
        record.final_state = s;
        result.log.episodes.push_back(std::move(record));
    }

    result.policy = agent.plan().greedy_policy();
    result.estimation_error = result.log.cumulative_estimation_error();
    if (oracle) result.ave_subopt = average_suboptimality(result.log, *oracle);
    if (kind == AgentKind::robust && env.bound_certifiable()) {
        result.thm1_bound = regret_bound_rhs(config.train_episodes, spec.horizon, config.confidence, result.beta,
                                         result.estimation_error);
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<ResultRow> evaluate_policy(const ExperimentConfig& config, const Environment& env,
                                       const TrainResult& trained) {
    std::vector<ResultRow> rows;
    for (double t : config.targets) {
        const FiniteMdp mdp = induce_finite_mdp(env.target(t));
        const auto mc = monte_carlo_return(mdp, trained.policy, config.eval_episodes, config.master_seed,
                                           trained.seed);
        ResultRow row;
        row.seed = trained.seed;
        row.agent = to_string(trained.kind);
        row.env = env.config.name;
        row.target_param = t;
        row.mean_reward = mc.mean;
        row.std_reward = mc.std;
        row.ave_subopt = trained.ave_subopt;
        row.est_error = trained.estimation_error;
        row.thm1_bound = trained.thm1_bound;
        row.seconds = trained.seconds;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string to_csv(const std::vector<ResultRow>& rows, bool record_timing) {
    std::string out = std::string(kCsvHeader) + "\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
    for (const auto& r : rows) {
        out += std::to_string(r.seed) + "," + r.agent + "," + r.env + "," + format_double(r.target_param) + "," +
               format_double(r.mean_reward) + "," + format_double(r.std_reward) + "," + opt(r.ave_subopt) + "," +
               format_double(r.est_error) + "," + opt(r.thm1_bound) + "," +
               format_double(record_timing ? r.seconds : 0.0) + "\n";
    }
    return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("results CSV has an unexpected header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 10) throw std::runtime_error("results CSV row has " + std::to_string(f.size()) + " fields");
        auto opt = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return std::stod(s);
        };
        ResultRow r;
        r.seed = std::stoull(f[0]);
        r.agent = f[1];
        r.env = f[2];
        r.target_param = std::stod(f[3]);
        r.mean_reward = std::stod(f[4]);
        r.std_reward = std::stod(f[5]);
        r.ave_subopt = opt(f[6]);
        r.est_error = std::stod(f[7]);
        r.thm1_bound = opt(f[8]);
        r.seconds = std::stod(f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

json aggregate(const std::vector<ResultRow>& rows) {
    // Keyed by first appearance of (agent, env, target).
    std::vector<std::tuple<std::string, std::string, double>> keys;
    std::map<std::tuple<std::string, std::string, double>, std::vector<double>> groups;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.agent, r.env, r.target_param);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(r.mean_reward);
    }
    json out = json::array();
    for (const auto& key : keys) {
        const auto& v = groups[key];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        out.push_back({{"agent", std::get<0>(key)},
                       {"env", std::get<1>(key)},
                       {"target_param", std::get<2>(key)},
                       {"mean", mean},
                       {"std", sd},
                       {"n", v.size()}});
    }
    return out;
}

// ---------------------------------------------------------------------------

void cmd_train(const ExperimentConfig& config, const RunOptions& options) {
    const Environment env = make_environment(config.environment);
    const auto cells = make_cells(config, resolve_seeds(config, options));
    write_file(options.out / "spec.json", spec_to_json(env.source).dump() + "\n");
    std::vector<json> summaries(cells.size());
    parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
        const TrainResult r = train_agent(config, env, cells[i].kind, cells[i].seed);
        save_cell(cell_dir(options.out, cells[i]), config, env, r);
        summaries[i] = {{"agent", to_string(r.kind)}, {"seed", r.seed}, {"seconds", r.seconds}, {"resumed", false}};
    });
    write_file(options.out / "manifest.json", manifest(config, "train", summaries).dump(1) + "\n");
}

std::vector<ResultRow> cmd_evaluate(const ExperimentConfig& config, const RunOptions& options,
                                    const std::optional<fs::path>& policy_file) {
    const Environment env = make_environment(config.environment);
    const bool timing = options.record_timing || config.record_timing;
    if (policy_file) {
        const TrainResult trained = train_from_summary(json::parse(read_file(*policy_file)));
        const auto rows = evaluate_policy(config, env, trained);
        std::vector<ResultRow> all;
        const fs::path csv = options.out / "results.csv";
        if (fs::exists(csv)) all = parse_csv(read_file(csv));
        all.insert(all.end(), rows.begin(), rows.end());
        write_results(options.out, all, timing);
        return rows;
    }
    const auto cells = make_cells(config, resolve_seeds(config, options));
    std::vector<std::vector<ResultRow>> per_cell(cells.size());
    parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
        const fs::path file = cell_dir(options.out, cells[i]) / "policy.json";
        if (!fs::exists(file)) {
            throw std::runtime_error("no trained policy at " + file.string() + "; run train first");
        }
        per_cell[i] = evaluate_policy(config, env, train_from_summary(json::parse(read_file(file))));
    });
    std::vector<ResultRow> rows;
    for (auto& r : per_cell) rows.insert(rows.end(), r.begin(), r.end());
    sort_rows(rows, config);
    write_results(options.out, rows, timing);
    return rows;
}

void cmd_oracle(const ExperimentConfig& config, const RunOptions& options) {
    const Environment env = make_environment(config.environment);
    json index = json::array();
    auto solve = [&](const std::string& label, const LinearMdpSpec& spec) {
        for (AgentKind kind : config.agents) {
            const UncertaintyLevels levels = agent_levels(config, env, kind);
            json entry{{"domain", label}, {"agent", to_string(kind)}};
            std::optional<RobustValueTable> table;
            const FiniteMdp mdp = induce_finite_mdp(spec);
            if (spec.has_factors()) {
                table = robust_value_iteration(spec, levels);
            } else if (levels.all_zero()) {
                table = value_iteration(mdp);
                table->rho = levels;
            }
            if (!table) {
                entry["note"] = "no factor distributions; robust values unavailable for rho > 0";
            } else {
                const std::string file = label + "_" + to_string(kind) + ".json";
                write_file(options.out / "oracle" / file, value_table_to_json(*table).dump() + "\n");
                entry["file"] = file;
                entry["initial_value"] = expected_initial_value(mdp, table->values);
            }
            index.push_back(std::move(entry));
        }
    };
    solve("source", env.source);
    for (double t : config.targets) solve("target_" + format_double(t), env.target(t));
    write_file(options.out / "oracle" / "index.json", index.dump(1) + "\n");
}

std::vector<ResultRow> cmd_sweep(const ExperimentConfig& config, const RunOptions& options) {
    const Environment env = make_environment(config.environment);
    const bool timing = options.record_timing || config.record_timing;
    cmd_oracle(config, options);
    write_file(options.out / "spec.json", spec_to_json(env.source).dump() + "\n");

    const auto cells = make_cells(config, resolve_seeds(config, options));
    std::vector<std::vector<ResultRow>> per_cell(cells.size());
    std::vector<json> summaries(cells.size());
    parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
        const fs::path dir = cell_dir(options.out, cells[i]);
        bool resumed = true;
        std::optional<TrainResult> trained = load_cell(dir, config);
        if (!trained) {
            resumed = false;
            trained = train_agent(config, env, cells[i].kind, cells[i].seed);
            save_cell(dir, config, env, *trained);
        }
        per_cell[i] = evaluate_policy(config, env, *trained);
        summaries[i] = {{"agent", to_string(cells[i].kind)},
                        {"seed", cells[i].seed},
                        {"seconds", trained->seconds},
                        {"resumed", resumed}};
    });
    std::vector<ResultRow> rows;
    for (auto& r : per_cell) rows.insert(rows.end(), r.begin(), r.end());
    sort_rows(rows, config);
    write_results(options.out, rows, timing);
    write_file(options.out / "manifest.json", manifest(config, "sweep", summaries).dump(1) + "\n");
    return rows;
}

}  // namespace drlsvi::runner
