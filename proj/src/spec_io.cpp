#include "drlsvi/spec_io.hpp"

#include "drlsvi/environments.hpp"

#include <stdexcept>

namespace drlsvi {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& doc) {
    const auto values = doc.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

FeatureMap builtin_features(const json& doc, int states, int actions) {
    const std::string name = doc.at("features").get<std::string>();
    if (name == "simulated_five_state") {
        const json& params = doc.at("feature_params");
        SimulatedMdpParams p;
        p.delta = params.at("delta").get<double>();
        if (params.contains("xi")) {
            p.xi = params.at("xi").get<std::array<double, 4>>();
        } else {
            p = SimulatedMdpParams::from_l1(p.delta, params.at("xi_l1").get<double>());
        }
        return build_simulated_mdp(p).features;
    }
    if (name == "tabular") return tabular_feature_encoding(states, actions);
    throw std::invalid_argument("spec_from_json: unknown builtin feature map '" + name + "'");
}

}  // namespace

json spec_to_json(const LinearMdpSpec& spec) {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int d = spec.dimension();
    json doc;
    doc["d"] = d;
    doc["H"] = spec.horizon;
    doc["states"] = S;
    doc["actions"] = A;

    json theta = json::array();
    for (const auto& t : spec.theta) theta.push_back(vector_to_json(t));
    doc["theta"] = std::move(theta);

    json mu = json::array();
    for (const auto& step : spec.mu) {
        json factors = json::array();
        for (const auto& m : step) factors.push_back(vector_to_json(m));
        mu.push_back(std::move(factors));
    }
    doc["mu"] = std::move(mu);

    json features = json::array();
    for (int s = 0; s < S; ++s) {
        json row = json::array();
        for (int a = 0; a < A; ++a) row.push_back(vector_to_json(spec.features(s, a)));
        features.push_back(std::move(row));
    }
    doc["features"] = std::move(features);
    if (!spec.features.builtin().empty()) doc["builtin"] = spec.features.builtin();

    doc["fail_state"] = spec.fail_state ? json(*spec.fail_state) : json(nullptr);
    doc["initial_distribution"] = vector_to_json(spec.initial_distribution);
    doc["flags"] = {{"simplex_normalized", spec.features.flags().simplex_normalized},
                    {"reward_normalized", spec.features.flags().reward_normalized}};

    if (spec.explicit_dynamics) {
        const auto& dyn = *spec.explicit_dynamics;
        json rewards = json::array();
        json kernel = json::array();
        for (int h = 0; h < spec.horizon; ++h) {
            json r_step = json::array();
            json k_step = json::array();
            for (int s = 0; s < S; ++s) {
                json r_row = json::array();
                json k_row = json::array();
                for (int a = 0; a < A; ++a) {
                    const auto c = static_cast<std::size_t>(s) * A + a;
                    r_row.push_back(dyn.rewards[h][c]);
                    json entries = json::array();
                    const auto& row = dyn.kernel[h][c];
                    for (std::size_t j = 0; j < row.states.size(); ++j) {
                        entries.push_back(json::array({row.states[j], row.probs[j]}));
                    }
                    k_row.push_back(std::move(entries));
                }
                r_step.push_back(std::move(r_row));
                k_step.push_back(std::move(k_row));
            }
            rewards.push_back(std::move(r_step));
            kernel.push_back(std::move(k_step));
        }
        doc["rewards"] = std::move(rewards);
        doc["kernel"] = std::move(kernel);
    }
    return doc;
}

LinearMdpSpec spec_from_json(const json& doc) {
    LinearMdpSpec spec;
    spec.horizon = doc.at("H").get<int>();
    spec.num_states = doc.at("states").get<int>();
    spec.num_actions = doc.at("actions").get<int>();
    const int d = doc.at("d").get<int>();
    const int S = spec.num_states;
    const int A = spec.num_actions;

    FeatureFlags flags;
    if (doc.contains("flags")) {
        flags.simplex_normalized = doc["flags"].value("simplex_normalized", true);
        flags.reward_normalized = doc["flags"].value("reward_normalized", true);
    }

    if (doc.at("features").is_string()) {
        spec.features = builtin_features(doc, S, A);
    } else {
        std::vector<double> table;
        table.reserve(static_cast<std::size_t>(S) * A * d);
        const json& rows = doc.at("features");
        if (rows.size() != static_cast<std::size_t>(S)) {
            throw std::invalid_argument("spec_from_json: features must have one row per state");
        }
        for (const auto& row : rows) {
            if (row.size() != static_cast<std::size_t>(A)) {
                throw std::invalid_argument("spec_from_json: features must have one entry per action");
            }
            for (const auto& f : row) {
                const auto v = f.get<std::vector<double>>();
                if (v.size() != static_cast<std::size_t>(d)) {
                    throw std::invalid_argument("spec_from_json: feature vector has wrong dimension");
                }
                table.insert(table.end(), v.begin(), v.end());
            }
        }
        spec.features = FeatureMap(S, A, d, std::move(table), flags, doc.value("builtin", std::string{}));
    }
    if (spec.features.dimension() != d) {
        throw std::invalid_argument("spec_from_json: builtin feature dimension differs from d");
    }

    for (const auto& t : doc.at("theta")) spec.theta.push_back(vector_from_json(t));
    for (const auto& step : doc.value("mu", json::array())) {
        std::vector<Eigen::VectorXd> factors;
        for (const auto& m : step) factors.push_back(vector_from_json(m));
        spec.mu.push_back(std::move(factors));
    }
    spec.initial_distribution = vector_from_json(doc.at("initial_distribution"));
    if (doc.contains("fail_state") && !doc["fail_state"].is_null()) {
        spec.fail_state = doc["fail_state"].get<int>();
    }

    if (doc.contains("kernel")) {
        ExplicitDynamics dyn;
        for (const auto& step : doc.at("rewards")) {
            std::vector<double> flat;
            for (const auto& row : step) {
                for (const auto& r : row) flat.push_back(r.get<double>());
            }
            dyn.rewards.push_back(std::move(flat));
        }
        for (const auto& step : doc.at("kernel")) {
            std::vector<SparseDistribution> flat;
            for (const auto& row : step) {
                for (const auto& entries : row) {
                    SparseDistribution dist;
                    for (const auto& e : entries) {
                        dist.states.push_back(e.at(0).get<int>());
                        dist.probs.push_back(e.at(1).get<double>());
                    }
                    flat.push_back(std::move(dist));
                }
            }
            dyn.kernel.push_back(std::move(flat));
        }
        spec.explicit_dynamics = std::move(dyn);
    }
    return spec;
}

json value_table_to_json(const RobustValueTable& table) {
    json doc;
    doc["H"] = table.horizon;
    doc["states"] = table.num_states;
    doc["actions"] = table.num_actions;
    doc["values"] = table.values;
    doc["q"] = table.q;
    doc["policy"] = policy_to_json(table.policy)["actions"];
    json rho = json::array();
    for (int h = 0; h < table.rho.horizon(); ++h) {
        std::vector<double> row;
        for (int i = 0; i < table.rho.dimension(); ++i) row.push_back(table.rho.at(h, i));
        rho.push_back(row);
    }
    doc["rho"] = std::move(rho);
    return doc;
}

json policy_to_json(const Policy& policy) {
    json actions = json::array();
    for (int h = 0; h < policy.horizon(); ++h) {
        std::vector<int> row(policy.num_states());
        for (int s = 0; s < policy.num_states(); ++s) row[s] = policy.at(h, s);
        actions.push_back(std::move(row));
    }
    return {{"H", policy.horizon()}, {"states", policy.num_states()}, {"actions", std::move(actions)}};
}

Policy policy_from_json(const json& doc) {
    Policy policy(doc.at("H").get<int>(), doc.at("states").get<int>());
    const json& actions = doc.at("actions");
    if (actions.size() != static_cast<std::size_t>(policy.horizon())) {
        throw std::invalid_argument("policy_from_json: one action row per step is required");
    }
    for (int h = 0; h < policy.horizon(); ++h) {
        const auto row = actions[h].get<std::vector<int>>();
        if (row.size() != static_cast<std::size_t>(policy.num_states())) {
            throw std::invalid_argument("policy_from_json: action row does not cover every state");
        }
        for (int s = 0; s < policy.num_states(); ++s) policy.set(h, s, row[s]);
    }
    return policy;
}

json run_log_to_json(const RunLog& log) {
    json episodes = json::array();
    for (const auto& e : log.episodes) {
        json doc;
        doc["initial_state"] = e.initial_state;
        doc["states"] = e.states;
        doc["actions"] = e.actions;
        doc["rewards"] = e.rewards;
        doc["final_state"] = e.final_state;
        doc["return"] = e.total_reward;
        doc["estimation_error"] = e.estimation_error;
        doc["policy_value"] = e.policy_value ? json(*e.policy_value) : json(nullptr);
        doc["optimal_value"] = e.optimal_value ? json(*e.optimal_value) : json(nullptr);
        episodes.push_back(std::move(doc));
    }
    return {{"K", log.num_episodes()},
            {"cumulative_estimation_error", log.cumulative_estimation_error()},
            {"episodes", std::move(episodes)}};
}

}  // namespace drlsvi
