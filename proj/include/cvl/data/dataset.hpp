#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvl/env/behavior.hpp"
#include "cvl/env/environment.hpp"
#include "cvl/rng.hpp"

namespace cvl::data {

using env::Trajectory;
using env::Vec;

inline constexpr int kDatasetVersion = 1;

struct OfflineDataset {
    std::vector<Trajectory> episodes;
    std::string env_id;
    double gamma = 0.99;
    int horizon = 0;
    bool rewards_available = true;
    std::string behavior_descriptor;

    std::size_t n_transitions() const;
};

/// Rolls out `behavior` for n_episodes episodes of at most env.horizon() steps.
/// Deterministic in `seed`. Throws InvalidSpec when n_episodes < 1.
OfflineDataset generate_dataset(const env::Environment& env, const env::BehaviorPolicy& behavior,
                                int n_episodes, std::uint64_t seed);

/// Text encoding: a versioned header followed by one line per episode.
/// Floating-point values are stored as the hex of their 64-bit pattern.
std::string serialize(const OfflineDataset& dataset);
/// Throws FormatError (with line/offset) or VersionError.
OfflineDataset deserialize(const std::string& text);

void save(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load(const std::string& path);

/// Field-by-field equality with bitwise comparison of floating-point values
/// (so NaN sentinels compare equal to themselves).
bool identical(const OfflineDataset& a, const OfflineDataset& b);

/// Replaces every reward by the NaN sentinel and clears rewards_available.
OfflineDataset strip_rewards(OfflineDataset dataset);

/// Number of reward values handed out to training code since process start.
std::uint64_t reward_reads();

struct ContrastiveBatch {
    std::vector<Vec> anchor_states;
    std::vector<Vec> anchor_actions;
    std::vector<Vec> positives;     // s_{t + dt}
    std::vector<int> offsets;       // dt >= 1
    std::vector<int> times;         // t
    std::vector<int> episode_ids;
    std::optional<std::vector<double>> future_rewards;  // r(s_{t + dt})

    std::size_t size() const { return anchor_states.size(); }
};

struct SamplerDiagnostics {
    long long skipped_episodes = 0;  // episodes with fewer than two states
};

/// Draws `episodes_per_batch` distinct episodes uniformly (fewer when the
/// dataset is smaller) and emits one anchor per timestep of each: (s_t, a_t),
/// positive s_{t+dt} with dt ~ TruncGeom(1 - gamma, t, L) and, if requested,
/// r(s_{t+dt}). Throws RewardRequired when rewards are requested from a
/// reward-free dataset and InvalidSpec when no usable episode exists.
ContrastiveBatch sample_batch(const OfflineDataset& dataset, double gamma, Rng& rng, bool include_rewards,
                              int episodes_per_batch = 2, SamplerDiagnostics* diagnostics = nullptr);

/// Empirical (s, a) visitation counts of a tabular dataset, n_states x n_actions.
Eigen::MatrixXd anchor_counts(const OfflineDataset& dataset, int n_states, int n_actions);

}  // namespace cvl::data
