#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "cvl/critic/critic.hpp"
#include "cvl/env/environment.hpp"
#include "cvl/nn/adam.hpp"
#include "cvl/nn/mlp.hpp"
#include "cvl/rff/q_estimators.hpp"
#include "cvl/rff/rff.hpp"
#include "cvl/rng.hpp"

namespace cvl::policy {

using nn::Mat;
using nn::Vec;

/// Action-value interface used by the policy objective. States are raw
/// environment states; actions are columns (a single index row for discrete
/// spaces).
class QFunction {
public:
    virtual ~QFunction() = default;
    /// Q(states[i], actions.col(i)) for every column. When `action_grad` is
    /// non-null it receives dQ/da (continuous actions only).
    virtual Vec evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const = 0;
};

/// Wraps a plain function; the gradient callback may be empty for discrete use.
class LambdaQ final : public QFunction {
public:
    using ValueFn = std::function<double(const Vec& state, const Vec& action)>;
    using GradFn = std::function<Vec(const Vec& state, const Vec& action)>;

    explicit LambdaQ(ValueFn value, GradFn grad = {}) : value_(std::move(value)), grad_(std::move(grad)) {}
    Vec evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const override;

private:
    ValueFn value_;
    GradFn grad_;
};

/// 1/(1 - gamma) * F(phi(s, a))^T xi.
class RffQ final : public QFunction {
public:
    RffQ(const critic::CriticParams& critic, const rff::RFFState& rff, double gamma)
        : critic_(critic), rff_(rff), gamma_(gamma) {}
    Vec evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const override;

private:
    const critic::CriticParams& critic_;
    const rff::RFFState& rff_;
    double gamma_;
};

/// Reward-weighted sum of exp(f) over a fixed set of psi_target-encoded futures.
class DirectQ final : public QFunction {
public:
    DirectQ(const critic::CriticParams& critic, rff::FutureSamples futures, double gamma)
        : critic_(critic), futures_(std::move(futures)), gamma_(gamma) {}
    Vec evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const override;

private:
    const critic::CriticParams& critic_;
    rff::FutureSamples futures_;
    double gamma_;
};

struct PolicyConfig {
    std::vector<int> hidden{256, 256};
    bool densenet = true;
    bool layernorm = true;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

/// Categorical policy over n actions, or a tanh-squashed diagonal Gaussian
/// over [-1, 1]^d. The network maps enc(s) to logits or to [mean; raw log std].
struct PolicyParams {
    nn::MLP net;
    bool discrete = true;
    int action_dim = 1;  // number of actions when discrete
    double log_std_min = -5.0;
    double log_std_max = 2.0;
    env::Featurizer state_features;
};

PolicyParams make_policy(const PolicyConfig& config, const env::Featurizer& state_features,
                         const env::Space& action_space, Rng& rng);

Mat encode_policy_states(const PolicyParams& policy, const std::vector<Vec>& states);

/// Softmax probabilities, n_actions x B. Discrete policies only.
Mat action_probabilities(const PolicyParams& policy, const std::vector<Vec>& states);

struct GaussianHeads {
    Mat mean;     // d x B, pre-squash
    Mat log_std;  // d x B, within [log_std_min, log_std_max]
};

GaussianHeads gaussian_heads(const PolicyParams& policy, const std::vector<Vec>& states);

struct ActionSamples {
    Mat actions;    // d x (B * n), sample j of state i in column i * n + j
    Vec log_probs;  // B * n
};

ActionSamples sample_actions(const PolicyParams& policy, const std::vector<Vec>& states, Rng& rng, int n);

/// log pi(a | s); continuous actions are clipped just inside (-1, 1).
double log_prob(const PolicyParams& policy, const Vec& state, const Vec& action);

/// argmax of the logits (lowest index on ties) or tanh(mean).
Vec deterministic_action(const PolicyParams& policy, const Vec& state);

struct PolicyLoss {
    double loss = 0.0;
    double mean_q = 0.0;
    Vec grad;  // flat parameter gradient
};

/// E_s KL(pi(.|s) || exp(Q(s, .) / tau) / Z). Discrete policies sum over all
/// actions; continuous ones use n_samples reparameterised samples per state.
PolicyLoss kl_boltzmann_loss(const PolicyParams& policy, const QFunction& q, const std::vector<Vec>& states,
                             double tau, int n_samples, Rng& rng);

/// -E log pi(a_data | s) - entropy_coeff * H(pi(.|s)). The entropy is exact
/// for discrete policies and a reparameterised n_samples estimate otherwise.
PolicyLoss bc_loss(const PolicyParams& policy, const std::vector<Vec>& states, const std::vector<Vec>& actions,
                   double entropy_coeff, int n_samples, Rng& rng);

struct PolicyUpdateConfig {
    double tau = 1.0;
    double lambda_bc = 0.1;
    double entropy_coeff = 0.1;
    int n_action_samples = 10;
};

struct PolicyMetrics {
    double kl_loss = 0.0;
    double bc_loss = 0.0;
    double total = 0.0;
    double mean_q = 0.0;
    double grad_norm = 0.0;
};

/// One Adam step on kl_boltzmann_loss + lambda_bc * bc_loss. With
/// lambda_bc == 0 the behavior term is neither evaluated nor sampled.
PolicyMetrics policy_update(PolicyParams& policy, const std::vector<Vec>& states, const std::vector<Vec>& actions,
                            const QFunction& q, const PolicyUpdateConfig& config, nn::AdamState& optimizer,
                            Rng& rng);

/// Candidate (column) with the largest Q; lowest index on ties.
int greedy_decode(const QFunction& q, const Vec& state, const Mat& candidates);

}  // namespace cvl::policy
