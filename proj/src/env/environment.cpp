#include "cvl/env/environment.hpp"

#include <cmath>
#include <string>

#include "cvl/errors.hpp"

namespace cvl::env {

void Featurizer::encode_into(const Vec& raw, Eigen::Ref<Vec> out) const {
    if (kind == Kind::OneHot) {
        const double idx = raw(0);
        if (!(idx >= 0 && idx < n)) throw ShapeError("one-hot index out of range");
        out.setZero();
        out(static_cast<Eigen::Index>(idx)) = 1.0;
        return;
    }
    if (raw.size() != shift.size()) throw ShapeError("featurizer input dimension mismatch");
    out = (raw - shift).cwiseProduct(scale);
}

Vec Featurizer::operator()(const Vec& raw) const {
    Vec out(output_dim());
    encode_into(raw, out);
    return out;
}

TabularEnv::TabularEnv(std::string id, TabularMDP mdp) : id_(std::move(id)), mdp_(std::move(mdp)) {
    mdp_.validate();
}

Space TabularEnv::state_space() const {
    Space sp;
    sp.discrete = true;
    sp.n = mdp_.n_states;
    sp.dim = 1;
    return sp;
}

Space TabularEnv::action_space() const {
    Space sp;
    sp.discrete = true;
    sp.n = mdp_.n_actions;
    sp.dim = 1;
    return sp;
}

namespace {

int sample_index(const double* probs, int n, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    int last_positive = 0;
    for (int i = 0; i < n; ++i) {
        if (probs[i] > 0.0) last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    return last_positive;
}

int checked_index(const Vec& v, int n, const char* what) {
    if (v.size() != 1) throw ShapeError(std::string(what) + " must be a 1-vector index");
    const double x = v(0);
    if (!std::isfinite(x)) throw NumericalFault(std::string(what) + " is not finite");
    const double r = std::round(x);
    if (r != x || r < 0 || r >= n) {
        if (std::string(what) == "action") throw InvalidAction("action index out of range");
        throw InvalidSpec(std::string(what) + " index out of range");
    }
    return static_cast<int>(r);
}

}  // namespace

Vec TabularEnv::reset(Rng& rng) const {
    return scalar_vec(sample_index(mdp_.start_dist.data(), mdp_.n_states, rng));
}

StepResult TabularEnv::step(const Vec& state, const Vec& action, Rng& rng) const {
    const int s = checked_index(state, mdp_.n_states, "state");
    const int a = checked_index(action, mdp_.n_actions, "action");
    const double* row = &mdp_.transition[(static_cast<std::size_t>(s) * mdp_.n_actions + a) * mdp_.n_states];
    const int next = sample_index(row, mdp_.n_states, rng);
    return {scalar_vec(next), mdp_.reward[next], false};
}

Featurizer TabularEnv::state_featurizer() const {
    Featurizer f;
    f.kind = Featurizer::Kind::OneHot;
    f.n = mdp_.n_states;
    return f;
}

Featurizer TabularEnv::action_featurizer() const {
    Featurizer f;
    f.kind = Featurizer::Kind::OneHot;
    f.n = mdp_.n_actions;
    return f;
}

Trajectory rollout_from(const Environment& env, const Vec& start, const Policy& policy, Rng& rng,
                        int max_len) {
    if (max_len < 0 || max_len > env.horizon()) throw InvalidSpec("max_len must lie in [0, horizon]");
    Trajectory traj;
    traj.states.reserve(max_len + 1);
    traj.actions.reserve(max_len);
    traj.rewards.reserve(max_len);
    traj.states.push_back(start);
    for (int t = 0; t < max_len; ++t) {
        Vec action = policy(traj.states.back(), rng);
        if (!action.allFinite()) throw NumericalFault("policy emitted a non-finite action");
        StepResult res = env.step(traj.states.back(), action, rng);
        traj.actions.push_back(std::move(action));
        traj.rewards.push_back(res.reward);
        traj.states.push_back(std::move(res.next_state));
        if (res.done) {
            traj.terminal = true;
            break;
        }
    }
    return traj;
}

Trajectory rollout(const Environment& env, const Policy& policy, Rng& rng, int max_len) {
    if (max_len < 0 || max_len > env.horizon()) throw InvalidSpec("max_len must lie in [0, horizon]");
    Vec start = env.reset(rng);
    return rollout_from(env, start, policy, rng, max_len);
}

}  // namespace cvl::env
