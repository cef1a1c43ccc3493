#pragma once

#include <optional>
#include <string>

#include "cvl/critic/critic.hpp"
#include "cvl/policy/policy.hpp"
#include "cvl/rff/rff.hpp"

namespace cvl::train {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to resume Q estimation and act: critic, RFF state, policy.
struct Model {
    critic::CriticParams critic;
    std::optional<rff::RFFState> rff;
    policy::PolicyParams policy;
    std::string env_id;
};

struct Checkpoint {
    Model model;
    std::string config_hash;
    long long step = 0;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws FormatError or VersionError.
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cvl::train
