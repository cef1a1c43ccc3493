#include <algorithm>
#include <cmath>

#include "cvl/env/environment.hpp"
#include "cvl/errors.hpp"

namespace cvl::env {

MountainCarEnv::MountainCarEnv(int horizon, double goal_position, double gamma)
    : horizon_(horizon), goal_position_(goal_position), gamma_(gamma) {
    if (horizon <= 0) throw InvalidSpec("horizon must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1)");
}

Space MountainCarEnv::state_space() const {
    Space sp;
    sp.discrete = false;
    sp.dim = 2;
    sp.low = Vec(2);
    sp.high = Vec(2);
    sp.low << kMinPosition, -kMaxSpeed;
    sp.high << kMaxPosition, kMaxSpeed;
    return sp;
}

Space MountainCarEnv::action_space() const {
    Space sp;
    sp.discrete = false;
    sp.dim = 1;
    sp.low = scalar_vec(-1.0);
    sp.high = scalar_vec(1.0);
    return sp;
}

Vec MountainCarEnv::reset(Rng& rng) const {
    std::uniform_real_distribution<double> pos(-0.6, -0.4);
    Vec s(2);
    s << pos(rng), 0.0;
    return s;
}

StepResult MountainCarEnv::step(const Vec& state, const Vec& action, Rng&) const {
    if (state.size() != 2 || action.size() != 1) throw ShapeError("mountain car expects (2-state, 1-action)");
    if (!state.allFinite() || !action.allFinite()) throw NumericalFault("non-finite mountain car input");
    const double force = std::clamp(action(0), -1.0, 1.0);
    double position = state(0);
    double velocity = state(1);
    velocity += force * kPower - 0.0025 * std::cos(3.0 * position);
    velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
    position += velocity;
    position = std::clamp(position, kMinPosition, kMaxPosition);
    if (position == kMinPosition && velocity < 0.0) velocity = 0.0;

    const bool done = position >= goal_position_;
    StepResult res;
    res.next_state = Vec(2);
    res.next_state << position, velocity;
    res.reward = -kActionCost * force * force + (done ? kGoalReward : 0.0);
    res.done = done;
    return res;
}

Featurizer MountainCarEnv::state_featurizer() const {
    // Maps position and velocity onto roughly [-1, 1].
    Featurizer f;
    f.kind = Featurizer::Kind::Affine;
    f.shift = Vec(2);
    f.scale = Vec(2);
    f.shift << -0.3, 0.0;
    f.scale << 1.0 / 0.9, 1.0 / kMaxSpeed;
    return f;
}

Featurizer MountainCarEnv::action_featurizer() const {
    Featurizer f;
    f.kind = Featurizer::Kind::Affine;
    f.shift = Vec::Zero(1);
    f.scale = Vec::Ones(1);
    return f;
}

}  // namespace cvl::env
