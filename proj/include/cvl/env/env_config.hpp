#pragma once

#include <memory>
#include <string>

#include "cvl/env/environment.hpp"
#include "cvl/kv.hpp"

namespace cvl::env {

/// Built-in environments: "chain", "gridworld3x3", "gridworld5x5",
/// "gridworld5x5-transfer" (same layout, goal in the top-right corner) and
/// "mountain_car". Anything else is treated as a path to an env config file.
std::unique_ptr<Environment> make_env(const std::string& name_or_path);

/// Env from key/values. Keys: type (gridworld | chain | mountain_car), id,
/// width, height, goal_x, goal_y, layout (path to ASCII grid), step_reward,
/// goal_reward, slip_prob, gamma, horizon, n_actions, goal_position.
std::unique_ptr<Environment> make_env(const KeyValues& kv);

}  // namespace cvl::env
