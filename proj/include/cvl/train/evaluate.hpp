#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvl/env/environment.hpp"
#include "cvl/policy/policy.hpp"

namespace cvl::train {

struct ReturnStats {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    double goal_rate = 0.0;  // fraction of episodes ending in a terminal state
    std::vector<double> returns;
};

/// Undiscounted returns of n_episodes horizon-length rollouts of `act`.
/// Deterministic in `seed`.
ReturnStats evaluate(const env::Environment& env, const env::Policy& act, int n_episodes, std::uint64_t seed);

/// Rollouts with deterministic actions (argmax / tanh(mean)).
ReturnStats evaluate(const env::Environment& env, const policy::PolicyParams& policy, int n_episodes,
                     std::uint64_t seed);

/// Loads the policy from a checkpoint; InvalidSpec if it was trained on a
/// different environment.
ReturnStats evaluate_checkpoint(const std::string& path, const env::Environment& env, int n_episodes,
                                std::uint64_t seed);

}  // namespace cvl::train
