#pragma once

#include "drlsvi/agents.hpp"
#include "drlsvi/core_types.hpp"
#include "drlsvi/environments.hpp"
#include "drlsvi/oracle.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drlsvi::runner {

/// Invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnvironmentConfig {
    std::string name;  // "simulated", "put_option" or "tabular"
    SimulatedMdpParams simulated;
    PutOptionParams put_option;
    int tabular_states = 4;
    int tabular_actions = 3;
    int tabular_horizon = 3;
    std::uint64_t tabular_seed = 1;
};

struct BetaConfig {
    /// Constant beta; when absent the theoretical recipe is used.
    std::optional<double> constant;
    double recipe_c = 1.0;
};

/// Uncertainty radii as written in the config: a homogeneous value plus
/// optional per-(h,i) overrides using one-based indices.
struct RhoConfig {
    double homogeneous = 0.0;
    struct Entry {
        int step;
        int coordinate;
        double value;
    };
    std::vector<Entry> entries;
    std::optional<std::vector<std::vector<double>>> matrix;

    UncertaintyLevels build(int horizon, int dimension) const;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    std::vector<AgentKind> agents{AgentKind::robust, AgentKind::nominal};
    BetaConfig beta;
    double lambda = 1.0;
    RhoConfig rho;
    bool nominal_clip_at_horizon = false;
    bool nominal_regress_rewards = false;
    /// Confidence parameter p of the bound and of the beta recipe.
    double confidence = 0.05;
    int train_episodes = 100;
    int eval_episodes = 100;
    std::vector<double> targets;
    std::vector<std::uint64_t> seeds;
    std::uint64_t master_seed = 20240501;
    std::string output_dir;
    /// Write wall-clock seconds into the results CSV (breaks byte equality).
    bool record_timing = false;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical echo of the config (everything that affects results).
nlohmann::json config_to_json(const ExperimentConfig& config);

struct Environment {
    EnvironmentConfig config;
    LinearMdpSpec source;
    std::optional<PutOptionModel> put_option;

    /// Target domain for a sweep parameter (q or p_u).
    LinearMdpSpec target(double parameter) const;
    /// Whether exact robust oracles exist (factor distributions available).
    bool has_oracle() const { return source.has_factors(); }
    /// Whether the bound of the d-rectangular analysis can be certified.
    bool bound_certifiable() const;
};

Environment make_environment(const EnvironmentConfig& config);

AgentConfig make_agent_config(const ExperimentConfig& config, const Environment& env, AgentKind kind);
UncertaintyLevels agent_levels(const ExperimentConfig& config, const Environment& env, AgentKind kind);

struct TrainResult {
    AgentKind kind = AgentKind::robust;
    std::uint64_t seed = 0;
    Policy policy;
    RunLog log;
    double beta = 0.0;
    std::optional<double> ave_subopt;
    double estimation_error = 0.0;
    std::optional<double> thm1_bound;
    double seconds = 0.0;
};

/// K episodes of plan / act / observe on the source domain.
TrainResult train_agent(const ExperimentConfig& config, const Environment& env, AgentKind kind,
                        std::uint64_t seed);

struct ResultRow {
    std::uint64_t seed = 0;
    std::string agent;
    std::string env;
    double target_param = 0.0;
    double mean_reward = 0.0;
    double std_reward = 0.0;
    std::optional<double> ave_subopt;
    double est_error = 0.0;
    std::optional<double> thm1_bound;
    double seconds = 0.0;
};

inline constexpr const char* kCsvHeader =
    "seed,agent,env,target_param,mean_reward,std_reward,ave_subopt,est_error,thm1_bound,seconds";

/// One row per target for a trained policy.
std::vector<ResultRow> evaluate_policy(const ExperimentConfig& config, const Environment& env,
                                       const TrainResult& trained);

std::string format_double(double value);
std::string to_csv(const std::vector<ResultRow>& rows, bool record_timing);
std::vector<ResultRow> parse_csv(const std::string& text);

/// Orchestration entry points. Each returns the rows it produced (empty for
/// train and oracle) and writes its artifacts under `out`.
struct RunOptions {
    std::filesystem::path out;
    std::optional<std::vector<std::uint64_t>> seeds;
    int jobs = 1;
    bool record_timing = false;
};

void cmd_train(const ExperimentConfig& config, const RunOptions& options);
std::vector<ResultRow> cmd_evaluate(const ExperimentConfig& config, const RunOptions& options,
                                    const std::optional<std::filesystem::path>& policy_file = {});
void cmd_oracle(const ExperimentConfig& config, const RunOptions& options);
std::vector<ResultRow> cmd_sweep(const ExperimentConfig& config, const RunOptions& options);

/// Per-(agent, target) mean and sample std of mean_reward across seeds.
nlohmann::json aggregate(const std::vector<ResultRow>& rows);

}  // namespace drlsvi::runner
