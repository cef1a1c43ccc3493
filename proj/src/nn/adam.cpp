#include "cvl/nn/adam.hpp"

#include <cmath>

#include "cvl/errors.hpp"

namespace cvl::nn {

AdamState AdamState::zeros(Eigen::Index n, const AdamConfig& config) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(n);
    s.second_moment = Eigen::VectorXd::Zero(n);
    s.config = config;
    return s;
}

AdamStepInfo adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
    }
    if (!grads.allFinite()) throw NumericalFault("adam_step: non-finite gradient, update skipped");

    const AdamConfig& c = state.config;
    AdamStepInfo info;
    info.grad_norm = grads.norm();
    double scale = 1.0;
    if (c.max_grad_norm > 0.0 && info.grad_norm > c.max_grad_norm) scale = c.max_grad_norm / info.grad_norm;
    info.applied_norm = info.grad_norm * scale;

    state.step_count += 1;
    state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * scale * grads;
    state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * (scale * grads).cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
    params.array() -= c.learning_rate * (state.first_moment.array() / bc1) /
                      ((state.second_moment.array() / bc2).sqrt() + c.epsilon);
    return info;
}

}  // namespace cvl::nn
