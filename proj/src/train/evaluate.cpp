#include "cvl/train/evaluate.hpp"

#include <cmath>

#include "cvl/errors.hpp"
#include "cvl/train/checkpoint.hpp"

namespace cvl::train {

ReturnStats evaluate(const env::Environment& env, const env::Policy& act, int n_episodes, std::uint64_t seed) {
    if (n_episodes < 1) throw InvalidSpec("n_episodes must be >= 1");
    Rng rng = make_stream(seed, stream::kEval);
    ReturnStats stats;
    int reached = 0;
    for (int i = 0; i < n_episodes; ++i) {
        const env::Trajectory traj = env::rollout(env, act, rng, env.horizon());
        double total = 0.0;
        for (double r : traj.rewards) total += r;
        stats.returns.push_back(total);
        if (traj.terminal) ++reached;
    }
    double sum = 0.0;
    for (double r : stats.returns) sum += r;
    stats.mean = sum / n_episodes;
    double sq = 0.0;
    for (double r : stats.returns) sq += (r - stats.mean) * (r - stats.mean);
    stats.std = std::sqrt(sq / n_episodes);
    stats.goal_rate = static_cast<double>(reached) / n_episodes;
    return stats;
}

ReturnStats evaluate(const env::Environment& env, const policy::PolicyParams& policy, int n_episodes,
                     std::uint64_t seed) {
    const env::Policy act = [&policy](const env::Vec& s, Rng&) { return policy::deterministic_action(policy, s); };
    return evaluate(env, act, n_episodes, seed);
}

ReturnStats evaluate_checkpoint(const std::string& path, const env::Environment& env, int n_episodes,
                                std::uint64_t seed) {
    const Checkpoint ck = load_checkpoint(path);
    if (ck.model.env_id != env.id()) {
        throw InvalidSpec("checkpoint was trained on '" + ck.model.env_id + "', not '" + env.id() + "'");
    }
    return evaluate(env, ck.model.policy, n_episodes, seed);
}

}  // namespace cvl::train
