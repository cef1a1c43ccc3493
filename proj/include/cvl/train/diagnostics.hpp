#pragma once

#include <cstdint>

#include "cvl/critic/critic.hpp"
#include "cvl/data/dataset.hpp"
#include "cvl/env/tabular_mdp.hpp"
#include "cvl/oracle/oracle.hpp"
#include "cvl/policy/policy.hpp"

namespace cvl::train {

// Oracle comparisons for runs on tabular environments. The behavior table is
// the policy that generated the dataset.

/// Policy table of a discrete policy network, n_states x n_actions.
oracle::PolicyTable policy_table(const policy::PolicyParams& policy, int n_states);

struct RatioRecovery {
    double spearman = 0.0;
    std::size_t n_triples = 0;
};

/// Spearman between exp(phi(s,a)^T psi(s') / T) and the exact ratio
/// d(s'|s,a) / m(s') over triples with (s,a) in the dataset and a positive
/// exact ratio. The marginal uses the dataset's anchor frequencies.
RatioRecovery ratio_recovery(const critic::CriticParams& critic, const data::OfflineDataset& dataset,
                             const env::TabularMDP& mdp, const oracle::PolicyTable& behavior);

struct QTopology {
    double spearman_critic = 0.0;       // direct estimate from the critic
    double spearman_exact_ratio = 0.0;  // same estimator, exact ratio in place of exp(f)
    std::size_t n_pairs = 0;
};

/// Spearman between the reward-weighted future-sample Q estimate and the
/// behavior policy's exact Q over distinct dataset (s,a) pairs. Future
/// samples come from n_batches sampled contrastive batches.
QTopology q_topology(const critic::CriticParams& critic, const data::OfflineDataset& dataset,
                     const env::TabularMDP& mdp, const oracle::PolicyTable& behavior, double gamma, int n_batches,
                     int episodes_per_batch, std::uint64_t seed);

/// Fraction of distinct dataset (s,a) pairs with
/// Q^pi(s,a) >= Q^mu(s,a) - tolerance * (r_max - r_min).
double improvement_fraction(const policy::PolicyParams& policy, const data::OfflineDataset& dataset,
                            const env::TabularMDP& mdp, const oracle::PolicyTable& behavior, double tolerance);

}  // namespace cvl::train
