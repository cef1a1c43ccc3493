#include "cvl/critic/critic.hpp"

#include <atomic>
#include <cmath>

#include "cvl/errors.hpp"

namespace cvl::critic {

namespace {

std::atomic<std::uint64_t> g_psi_forwards{0};

// Row-wise log-sum-exp and softmax.
Eigen::VectorXd row_logsumexp(const Mat& logits, Mat* softmax) {
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Mat shifted = logits.colwise() - row_max;
    Mat expd = shifted.array().exp().matrix();
    const Eigen::VectorXd sums = expd.rowwise().sum();
    if (softmax != nullptr) *softmax = expd.array().colwise() / sums.array();
    return row_max.array() + sums.array().log();
}

void check_square_finite(const Mat& logits) {
    if (logits.rows() != logits.cols()) throw ShapeError("logits must be square");
    if (logits.rows() == 0) throw BatchTooSmall("empty logits");
    if (!logits.allFinite()) throw NumericalFault("non-finite logits");
}

}  // namespace

CriticParams make_critic(const CriticConfig& config, const env::Featurizer& state_features,
                         const env::Featurizer& action_features, Rng& rng) {
    if (config.latent_dim <= 0) throw InvalidSpec("latent_dim must be positive");
    if (!(config.temperature > 0.0)) throw InvalidSpec("InfoNCE temperature must be positive");
    CriticParams c;
    c.state_features = state_features;
    c.action_features = action_features;
    c.l2_normalize_outputs = config.l2_normalize;
    c.infonce_temperature = config.temperature;
    nn::MLPConfig phi_cfg{state_features.output_dim() + action_features.output_dim(), config.hidden, config.latent_dim,
                          config.densenet, config.layernorm};
    nn::MLPConfig psi_cfg{state_features.output_dim(), config.hidden, config.latent_dim, config.densenet,
                          config.layernorm};
    c.phi = nn::MLP::init(phi_cfg, rng);
    c.psi = nn::MLP::init(psi_cfg, rng);
    c.psi_target = c.psi;
    return c;
}

Mat encode_anchors(const CriticParams& critic, const std::vector<Vec>& states, const std::vector<Vec>& actions) {
    if (states.size() != actions.size()) throw ShapeError("anchor states and actions differ in count");
    const int ds = critic.state_features.output_dim();
    const int da = critic.action_features.output_dim();
    Mat out(ds + da, static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        critic.state_features.encode_into(states[i], out.col(col).head(ds));
        critic.action_features.encode_into(actions[i], out.col(col).tail(da));
    }
    return out;
}

Mat encode_anchors(const CriticParams& critic, const std::vector<Vec>& states, const Mat& actions) {
    if (static_cast<Eigen::Index>(states.size()) != actions.cols()) {
        throw ShapeError("anchor states and actions differ in count");
    }
    const int ds = critic.state_features.output_dim();
    const int da = critic.action_features.output_dim();
    Mat out(ds + da, actions.cols());
    for (Eigen::Index i = 0; i < actions.cols(); ++i) {
        critic.state_features.encode_into(states[static_cast<std::size_t>(i)], out.col(i).head(ds));
        critic.action_features.encode_into(actions.col(i), out.col(i).tail(da));
    }
    return out;
}

Mat encode_states(const CriticParams& critic, const std::vector<Vec>& states) {
    const int ds = critic.state_features.output_dim();
    Mat out(ds, static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i) {
        critic.state_features.encode_into(states[i], out.col(static_cast<Eigen::Index>(i)));
    }
    return out;
}

Mat embed_anchors(const CriticParams& critic, const Mat& anchor_inputs) {
    Mat out = nn::forward(critic.phi, anchor_inputs);
    return critic.l2_normalize_outputs ? nn::l2_normalize_columns(out) : out;
}

Mat embed_futures(const CriticParams& critic, const Mat& state_inputs, PsiNet which) {
    g_psi_forwards.fetch_add(static_cast<std::uint64_t>(state_inputs.cols()));
    Mat out = nn::forward(which == PsiNet::Online ? critic.psi : critic.psi_target, state_inputs);
    return critic.l2_normalize_outputs ? nn::l2_normalize_columns(out) : out;
}

std::uint64_t psi_forward_count() { return g_psi_forwards.load(); }

Mat critic_logits(const CriticParams& critic, const data::ContrastiveBatch& batch) {
    if (batch.size() < 2) throw BatchTooSmall("contrastive batch needs at least two anchors");
    const Mat phi = embed_anchors(critic, encode_anchors(critic, batch.anchor_states, batch.anchor_actions));
    const Mat psi = embed_futures(critic, encode_states(critic, batch.positives), PsiNet::Online);
    Mat logits = (phi.transpose() * psi) / critic.infonce_temperature;
    if (!logits.allFinite()) throw NumericalFault("non-finite critic logits");
    return logits;
}

double infonce_loss(const Mat& logits, Mat* grad) {
    check_square_finite(logits);
    Mat softmax;
    const Eigen::VectorXd lse = row_logsumexp(logits, grad != nullptr ? &softmax : nullptr);
    const auto k = static_cast<double>(logits.rows());
    const double loss = (lse - logits.diagonal()).sum() / k;
    if (grad != nullptr) {
        *grad = softmax;
        grad->diagonal().array() -= 1.0;
        *grad /= k;
    }
    return loss;
}

double partition_reg(const Mat& logits, Mat* grad) {
    check_square_finite(logits);
    Mat softmax;
    const Eigen::VectorXd lse = row_logsumexp(logits, grad != nullptr ? &softmax : nullptr);
    const auto k = static_cast<double>(logits.rows());
    if (grad != nullptr) *grad = (softmax.array().colwise() * (2.0 * lse.array() / k)).matrix();
    return lse.squaredNorm() / k;
}

CriticLoss critic_loss(const CriticParams& critic, const data::ContrastiveBatch& batch, double lambda_partition) {
    if (batch.size() < 2) throw BatchTooSmall("contrastive batch needs at least two anchors");
    nn::ForwardCache phi_cache;
    nn::ForwardCache psi_cache;
    const Mat phi_raw = nn::forward(critic.phi, encode_anchors(critic, batch.anchor_states, batch.anchor_actions),
                                    &phi_cache);
    const Mat psi_inputs = encode_states(critic, batch.positives);
    g_psi_forwards.fetch_add(static_cast<std::uint64_t>(psi_inputs.cols()));
    const Mat psi_raw = nn::forward(critic.psi, psi_inputs, &psi_cache);

    CriticLoss out;
    Eigen::RowVectorXd phi_norms;
    Eigen::RowVectorXd psi_norms;
    int bad_phi = 0;
    int bad_psi = 0;
    const bool norm = critic.l2_normalize_outputs;
    const Mat phi = norm ? nn::l2_normalize_columns(phi_raw, &phi_norms, &bad_phi) : phi_raw;
    const Mat psi = norm ? nn::l2_normalize_columns(psi_raw, &psi_norms, &bad_psi) : psi_raw;
    out.degenerate_embeddings = bad_phi + bad_psi;

    const double temp = critic.infonce_temperature;
    const Mat logits = (phi.transpose() * psi) / temp;
    if (!logits.allFinite()) throw NumericalFault("non-finite critic logits");

    Mat g_nce;
    Mat g_reg;
    out.infonce = infonce_loss(logits, &g_nce);
    out.partition = partition_reg(logits, &g_reg);
    out.total = out.infonce + lambda_partition * out.partition;
    out.positive_logit_mean = logits.diagonal().mean();

    const Mat g = g_nce + lambda_partition * g_reg;
    Mat d_phi = psi * g.transpose() / temp;
    Mat d_psi = phi * g / temp;
    if (norm) {
        d_phi = nn::l2_normalize_backward(phi, phi_norms, d_phi);
        d_psi = nn::l2_normalize_backward(psi, psi_norms, d_psi);
    }
    out.phi_grad = nn::backward(critic.phi, phi_cache, d_phi);
    out.psi_grad = nn::backward(critic.psi, psi_cache, d_psi);
    return out;
}

CriticOptimizer CriticOptimizer::create(const CriticParams& critic, const nn::AdamConfig& config) {
    return {nn::AdamState::zeros(critic.phi.num_params(), config),
            nn::AdamState::zeros(critic.psi.num_params(), config)};
}

CriticMetrics critic_gradient_step(CriticParams& critic, const data::ContrastiveBatch& batch, double lambda_partition,
                                   CriticOptimizer& optimizer) {
    CriticLoss loss = critic_loss(critic, batch, lambda_partition);
    if (!loss.phi_grad.allFinite() || !loss.psi_grad.allFinite()) {
        throw NumericalFault("non-finite critic gradient, update skipped");
    }
    CriticMetrics m;
    m.loss = loss.total;
    m.infonce = loss.infonce;
    m.partition_reg = loss.partition;
    m.positive_logit_mean = loss.positive_logit_mean;
    m.phi_grad_norm = nn::adam_step(optimizer.phi, critic.phi.params(), loss.phi_grad).grad_norm;
    m.psi_grad_norm = nn::adam_step(optimizer.psi, critic.psi.params(), loss.psi_grad).grad_norm;
    return m;
}

void ema_update(CriticParams& critic, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidSpec("EMA coefficient must lie in [0, 1]");
    if (beta == 0.0) return;
    if (beta == 1.0) {
        critic.psi_target.params() = critic.psi.params();
        return;
    }
    critic.psi_target.params() = beta * critic.psi.params() + (1.0 - beta) * critic.psi_target.params();
}

CriticMetrics critic_update(CriticParams& critic, const data::ContrastiveBatch& batch, double lambda_partition,
                            double ema_beta, CriticOptimizer& optimizer) {
    CriticMetrics m = critic_gradient_step(critic, batch, lambda_partition, optimizer);
    ema_update(critic, ema_beta);
    return m;
}

}  // namespace cvl::critic
