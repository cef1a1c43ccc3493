#pragma once

#include <Eigen/Dense>

namespace cvl::nn {

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double max_grad_norm = 100.0;  // <= 0 disables clipping
};

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    long long step_count = 0;
    AdamConfig config;

    static AdamState zeros(Eigen::Index n, const AdamConfig& config);
};

struct AdamStepInfo {
    double grad_norm = 0.0;     // before clipping
    double applied_norm = 0.0;  // after clipping
};

/// Clips `grads` to max_grad_norm, then applies a bias-corrected Adam update.
/// Throws NumericalFault, leaving state and params untouched, if any gradient
/// is non-finite; ShapeError if sizes differ.
AdamStepInfo adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

}  // namespace cvl::nn
