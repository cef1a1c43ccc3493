#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cvl/data/dataset.hpp"
#include "cvl/env/environment.hpp"
#include "cvl/nn/adam.hpp"
#include "cvl/nn/mlp.hpp"

namespace cvl::critic {

using nn::Mat;
using nn::Vec;

struct CriticConfig {
    std::vector<int> hidden{256, 256};
    int latent_dim = 64;
    bool densenet = true;
    bool layernorm = true;
    bool l2_normalize = true;
    double temperature = 1.0;
};

/// Paired encoders phi(s, a) and psi(s') whose inner product is the implicit
/// log density ratio, plus the slowly moving copy psi_target used for value
/// estimation.
struct CriticParams {
    nn::MLP phi;
    nn::MLP psi;
    nn::MLP psi_target;
    bool l2_normalize_outputs = true;
    double infonce_temperature = 1.0;
    env::Featurizer state_features;
    env::Featurizer action_features;

    int latent_dim() const { return phi.config().output_dim; }
};

CriticParams make_critic(const CriticConfig& config, const env::Featurizer& state_features,
                         const env::Featurizer& action_features, Rng& rng);

/// Network inputs: [enc(s); enc(a)] and enc(s') as columns.
Mat encode_anchors(const CriticParams& critic, const std::vector<Vec>& states, const std::vector<Vec>& actions);
Mat encode_anchors(const CriticParams& critic, const std::vector<Vec>& states, const Mat& actions);
Mat encode_states(const CriticParams& critic, const std::vector<Vec>& states);

/// phi embeddings (normalised when configured).
Mat embed_anchors(const CriticParams& critic, const Mat& anchor_inputs);

enum class PsiNet { Online, Target };

/// psi embeddings (normalised when configured). Every call adds the number of
/// encoded states to psi_forward_count().
Mat embed_futures(const CriticParams& critic, const Mat& state_inputs, PsiNet which);

/// Number of states pushed through either psi network since process start.
std::uint64_t psi_forward_count();

/// L[i][j] = phi(s_i, a_i)^T psi(s_j^+) / temperature, psi = online network.
/// Throws BatchTooSmall for fewer than two anchors, NumericalFault on
/// non-finite logits.
Mat critic_logits(const CriticParams& critic, const data::ContrastiveBatch& batch);

/// Mean over rows of -log softmax(row)[i]. Optionally writes dLoss/dLogits.
double infonce_loss(const Mat& logits, Mat* grad = nullptr);

/// Mean over rows of (log sum_j exp L[i][j])^2. Optionally writes dReg/dLogits.
double partition_reg(const Mat& logits, Mat* grad = nullptr);

struct CriticLoss {
    double total = 0.0;
    double infonce = 0.0;
    double partition = 0.0;
    double positive_logit_mean = 0.0;
    Vec phi_grad;
    Vec psi_grad;
    int degenerate_embeddings = 0;
};

/// infonce + lambda_partition * partition_reg with gradients for phi and psi.
CriticLoss critic_loss(const CriticParams& critic, const data::ContrastiveBatch& batch, double lambda_partition);

struct CriticOptimizer {
    nn::AdamState phi;
    nn::AdamState psi;

    static CriticOptimizer create(const CriticParams& critic, const nn::AdamConfig& config);
};

struct CriticMetrics {
    double loss = 0.0;
    double infonce = 0.0;
    double partition_reg = 0.0;
    double positive_logit_mean = 0.0;
    double phi_grad_norm = 0.0;
    double psi_grad_norm = 0.0;
};

/// One Adam step on phi and psi. Never touches reward fields.
CriticMetrics critic_gradient_step(CriticParams& critic, const data::ContrastiveBatch& batch,
                                   double lambda_partition, CriticOptimizer& optimizer);

/// psi_target <- beta * psi + (1 - beta) * psi_target.
void ema_update(CriticParams& critic, double beta);

/// critic_gradient_step followed by ema_update.
CriticMetrics critic_update(CriticParams& critic, const data::ContrastiveBatch& batch, double lambda_partition,
                            double ema_beta, CriticOptimizer& optimizer);

}  // namespace cvl::critic
