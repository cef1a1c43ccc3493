#pragma once

#include <string>
#include <vector>

#include "cvl/data/dataset.hpp"
#include "cvl/env/environment.hpp"
#include "cvl/train/checkpoint.hpp"
#include "cvl/train/config.hpp"
#include "cvl/train/metrics.hpp"

namespace cvl::train {

struct TrainOutputs {
    std::string checkpoint_dir;  // empty: no checkpoint files
    std::string metrics_path;    // empty: metrics kept in memory only
};

struct TrainResult {
    Model model;
    std::vector<MetricsRecord> metrics;
    std::vector<std::string> checkpoints;
    long long steps = 0;
    long long faults = 0;
};

/// Fresh critic, policy and (when use_rff) random features for `env`.
Model initialize_model(const TrainConfig& config, const env::Environment& env);

/// Per step: sample a batch, take a critic gradient step, build Q (random
/// features or direct estimate), update the policy, move psi_target, refresh
/// xi. One checkpoint before training and one per epoch.
/// Throws InvalidSpec on dataset/environment mismatch and NumericalFault when
/// more than max_fault_fraction of steps fault.
TrainResult train(const TrainConfig& config, const data::OfflineDataset& dataset, const env::Environment& env,
                  const TrainOutputs& outputs = {});

/// config.pretrain_steps critic-only updates on `unlabeled` (rewards never
/// read), then train() on `labeled` starting from those critic weights.
TrainResult pretrain_then_finetune(const TrainConfig& config, const data::OfflineDataset& unlabeled,
                                   const data::OfflineDataset& labeled, const env::Environment& env,
                                   const TrainOutputs& outputs = {});

}  // namespace cvl::train
