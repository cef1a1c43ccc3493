#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvl/kv.hpp"

namespace cvl::train {

struct TrainConfig {
    // Data and environment. horizon <= 0 means "use the dataset's horizon".
    std::string env;
    std::string dataset;
    std::string unlabeled_dataset;
    double gamma = 0.99;
    int horizon = 0;

    // Optimisation.
    std::uint64_t seed = 0;
    int epochs = 1;
    int steps_per_epoch = 1000;
    int episodes_per_batch = 2;
    double learning_rate = 3e-4;
    double max_grad_norm = 100.0;

    // Critic.
    std::vector<int> critic_hidden{256, 256};
    int latent_dim = 64;
    bool densenet = true;
    bool layernorm = true;
    bool l2_normalize = true;
    double tau = 1.0;  // InfoNCE temperature
    double lambda_partition = 0.001;
    double ema_beta = 0.005;

    // Q estimation.
    bool use_rff = true;
    int rff_dim = 2048;
    double xi_ema = 0.01;

    // Policy.
    std::vector<int> policy_hidden{256, 256};
    double boltzmann_tau = 1.0;
    double lambda_bc = 0.1;
    double entropy_coeff = 0.1;
    int n_action_samples = 10;
    double log_std_min = -5.0;
    double log_std_max = 2.0;

    // Pretraining (critic only, reward-free).
    int pretrain_steps = 0;

    // Bookkeeping.
    int eval_every = 0;
    int eval_episodes = 10;
    bool log_wall_time = false;
    double max_fault_fraction = 0.01;

    /// Unknown keys and out-of-range values throw InvalidSpec.
    static TrainConfig from_kv(const KeyValues& kv);
    KeyValues to_kv() const;
    void validate() const;
    /// FNV-1a of the canonical key-value text, as 16 hex digits.
    std::string hash() const;
};

std::vector<int> parse_widths(const std::string& text);
std::string format_widths(const std::vector<int>& widths);

}  // namespace cvl::train
