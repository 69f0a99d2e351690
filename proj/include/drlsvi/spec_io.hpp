#pragma once

#include "drlsvi/core_types.hpp"
#include "drlsvi/oracle.hpp"

#include <json.hpp>

namespace drlsvi {

/**
 * JSON document for a LinearMdpSpec.
 *
 * Keys: d, H, states, actions, theta (H x d), mu (H x d x |S|, empty for
 * explicit dynamics), features (|S| x |A| x d), fail_state (null when
 * absent), initial_distribution, flags {simplex_normalized,
 * reward_normalized}, builtin (optional name), and for explicit dynamics
 * `rewards` (H x |S| x |A|) and `kernel` (H x |S| x |A| list of [state, prob]).
 *
 * On input `features` may also be a builtin name: "simulated_five_state" (with a
 * `feature_params` object {delta, xi}) or "tabular".
 */
nlohmann::json spec_to_json(const LinearMdpSpec& spec);
LinearMdpSpec spec_from_json(const nlohmann::json& doc);

nlohmann::json value_table_to_json(const RobustValueTable& table);
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc);
nlohmann::json run_log_to_json(const RunLog& log);

}  // namespace drlsvi
