#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "cvl/env/environment.hpp"

namespace cvl::env {

enum class BehaviorKind { EpsilonSoftTabular, ScriptedMountainCar, UniformRandom };

struct BehaviorParams {
    double epsilon = 0.1;  // epsilon_soft_tabular, in [0, 1]
    double sigma = 0.3;    // scripted_mountain_car Gaussian action noise, >= 0
};

struct BehaviorPolicy {
    Policy act;
    std::string descriptor;
    /// pi(a|s) as an n_states x n_actions row-stochastic table, for tabular kinds.
    std::optional<Eigen::MatrixXd> table;
};

/// epsilon_soft_tabular: with prob. epsilon a uniform action, otherwise the
/// greedy action of the optimal Q from value iteration (ties -> lowest index).
/// scripted_mountain_car: clip(sign(v) + N(0, sigma^2), -1, 1), with sign(0) = +1.
/// uniform_random: uniform over the action space.
BehaviorPolicy behavior_policy(BehaviorKind kind, const BehaviorParams& params, const Environment& env);

BehaviorKind parse_behavior_kind(const std::string& name);

/// Policy that samples from a row-stochastic table (tabular envs only).
Policy table_policy(Eigen::MatrixXd table);

}  // namespace cvl::env
