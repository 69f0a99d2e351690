// drlsvi: train | evaluate | oracle | sweep
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
// Failures also print a one-line JSON error document on stderr and, when
// the output directory is known, write it to <out>/error.json.

#include "drlsvi/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using drlsvi::runner::ConfigError;

namespace {

int report(const std::string& kind, const std::string& message, const fs::path& out, int code) {
    const nlohmann::json doc{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << doc.dump() << "\n";
    if (!out.empty()) {
        std::error_code ec;
        fs::create_directories(out, ec);
        std::ofstream(out / "error.json") << doc.dump(1) << "\n";
    }
    return code;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item[0] == '-') throw ConfigError("--seeds: '" + item + "' is not a seed");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ConfigError("--seeds needs at least one seed");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online distributionally robust LSVI experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string seeds_text;
    std::string policy_path;
    int jobs = 1;
    bool timing = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory (defaults to the config's output_dir)");
        cmd->add_option("--seeds", seeds_text, "comma separated seeds overriding the config");
        cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        cmd->add_flag("--timing", timing, "write wall-clock seconds into results.csv");
    };
    auto* train = app.add_subcommand("train", "train agents on the source domain");
    auto* evaluate = app.add_subcommand("evaluate", "roll out trained policies on the target sweep");
    auto* oracle = app.add_subcommand("oracle", "exact robust value tables");
    auto* sweep = app.add_subcommand("sweep", "oracle, train and evaluate every (agent, seed) cell");
    for (auto* cmd : {train, evaluate, oracle, sweep}) add_common(cmd);
    evaluate->add_option("--policy", policy_path, "evaluate a single policy artifact");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return report("config", e.what(), {}, 2);
    }

    fs::path out = out_dir;
    try {
        auto config = drlsvi::runner::load_config(config_path);
        if (out.empty()) out = config.output_dir;
        if (out.empty()) throw ConfigError("no output directory: pass --out or set output_dir");

        drlsvi::runner::RunOptions options;
        options.out = out;
        options.jobs = jobs;
        options.record_timing = timing;
        if (!seeds_text.empty()) options.seeds = parse_seeds(seeds_text);
        fs::create_directories(out);

        if (*train) {
            drlsvi::runner::cmd_train(config, options);
        } else if (*evaluate) {
            std::optional<fs::path> policy;
            if (!policy_path.empty()) policy = policy_path;
            drlsvi::runner::cmd_evaluate(config, options, policy);
        } else if (*oracle) {
            drlsvi::runner::cmd_oracle(config, options);
        } else {
            drlsvi::runner::cmd_sweep(config, options);
        }
        std::cout << "wrote " << out.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        return report("config", e.what(), out, 2);
    } catch (const std::exception& e) {
        return report("runtime", e.what(), out, 3);
    }
}
