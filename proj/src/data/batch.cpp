#include <algorithm>
#include <numeric>

#include "cvl/data/dataset.hpp"
#include "cvl/data/truncgeom.hpp"
#include "cvl/errors.hpp"

namespace cvl::data {

namespace detail {
void count_reward_reads(std::uint64_t n);
}

ContrastiveBatch sample_batch(const OfflineDataset& dataset, double gamma, Rng& rng, bool include_rewards,
                              int episodes_per_batch, SamplerDiagnostics* diagnostics) {
    if (dataset.episodes.empty()) throw InvalidSpec("cannot sample from an empty dataset");
    if (include_rewards && !dataset.rewards_available) {
        throw RewardRequired("rewards requested from a reward-free dataset");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1)");
    if (episodes_per_batch < 1) throw InvalidSpec("episodes_per_batch must be >= 1");

    std::size_t usable = 0;
    for (const auto& ep : dataset.episodes) usable += ep.length() >= 1 ? 1 : 0;
    if (usable == 0) throw InvalidSpec("dataset has no episode with at least two states");
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(episodes_per_batch), usable);

    std::uniform_int_distribution<std::size_t> pick(0, dataset.episodes.size() - 1);
    std::vector<std::size_t> chosen;
    chosen.reserve(want);
    while (chosen.size() < want) {
        const std::size_t e = pick(rng);
        if (dataset.episodes[e].length() < 1) {
            if (diagnostics != nullptr) ++diagnostics->skipped_episodes;
            continue;
        }
        if (std::find(chosen.begin(), chosen.end(), e) != chosen.end()) continue;
        chosen.push_back(e);
    }

    ContrastiveBatch batch;
    std::size_t total = 0;
    for (std::size_t e : chosen) total += dataset.episodes[e].length();
    batch.anchor_states.reserve(total);
    batch.anchor_actions.reserve(total);
    batch.positives.reserve(total);
    batch.offsets.reserve(total);
    batch.times.reserve(total);
    batch.episode_ids.reserve(total);
    std::vector<double> rewards;
    if (include_rewards) rewards.reserve(total);

    const double p = 1.0 - gamma;
    for (std::size_t e : chosen) {
        const Trajectory& ep = dataset.episodes[e];
        const int len = static_cast<int>(ep.length());
        for (int t = 0; t < len; ++t) {
            const int dt = TruncGeom(p, t, len).sample(rng);
            batch.anchor_states.push_back(ep.states[t]);
            batch.anchor_actions.push_back(ep.actions[t]);
            batch.positives.push_back(ep.states[t + dt]);
            batch.offsets.push_back(dt);
            batch.times.push_back(t);
            batch.episode_ids.push_back(static_cast<int>(e));
            if (include_rewards) rewards.push_back(ep.rewards[t + dt - 1]);
        }
    }
    if (include_rewards) {
        detail::count_reward_reads(rewards.size());
        batch.future_rewards = std::move(rewards);
    }
    return batch;
}

}  // namespace cvl::data
