#include "cvl/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cvl/errors.hpp"
#include "detail.hpp"

namespace cvl::policy {

namespace {

// Shared by the critic-backed Q functions: value and optional dQ/da through phi.
template <class ValueFromPhi>
Vec critic_q(const critic::CriticParams& critic, const std::vector<Vec>& states, const Mat& actions,
             Mat* action_grad, ValueFromPhi&& value_from_phi) {
    const Mat inputs = critic::encode_anchors(critic, states, actions);
    if (action_grad == nullptr) {
        return value_from_phi(critic::embed_anchors(critic, inputs), nullptr);
    }
    if (critic.action_features.kind != env::Featurizer::Kind::Affine) {
        throw InvalidSpec("action gradients need a continuous action space");
    }
    nn::ForwardCache cache;
    const Mat raw = nn::forward(critic.phi, inputs, &cache);
    Eigen::RowVectorXd norms;
    const Mat phi = critic.l2_normalize_outputs ? nn::l2_normalize_columns(raw, &norms) : raw;
    Mat d_phi;
    Vec q = value_from_phi(phi, &d_phi);
    if (critic.l2_normalize_outputs) d_phi = nn::l2_normalize_backward(phi, norms, d_phi);
    Mat input_grad;
    nn::backward(critic.phi, cache, d_phi, &input_grad);
    const int da = critic.action_features.output_dim();
    *action_grad = input_grad.bottomRows(da).array().colwise() * critic.action_features.scale.array();
    return q;
}

}  // namespace

Vec LambdaQ::evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const {
    if (static_cast<Eigen::Index>(states.size()) != actions.cols()) throw ShapeError("one action per state required");
    if (action_grad != nullptr && !grad_) throw InvalidSpec("this Q function has no action gradient");
    Vec q(actions.cols());
    if (action_grad != nullptr) action_grad->resize(actions.rows(), actions.cols());
    for (Eigen::Index i = 0; i < actions.cols(); ++i) {
        const Vec a = actions.col(i);
        q[i] = value_(states[static_cast<std::size_t>(i)], a);
        if (action_grad != nullptr) action_grad->col(i) = grad_(states[static_cast<std::size_t>(i)], a);
    }
    return q;
}

Vec RffQ::evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const {
    return critic_q(critic_, states, actions, action_grad, [&](const Mat& phi, Mat* d_phi) {
        return rff::q_nce_rff_batch(phi, rff_, gamma_, d_phi);
    });
}

Vec DirectQ::evaluate(const std::vector<Vec>& states, const Mat& actions, Mat* action_grad) const {
    return critic_q(critic_, states, actions, action_grad, [&](const Mat& phi, Mat* d_phi) {
        return rff::q_nce_direct_batch(phi, futures_, critic_.infonce_temperature, gamma_, d_phi);
    });
}

PolicyParams make_policy(const PolicyConfig& config, const env::Featurizer& state_features,
                         const env::Space& action_space, Rng& rng) {
    if (!(config.log_std_min < config.log_std_max)) throw InvalidSpec("log_std_min must be below log_std_max");
    PolicyParams p;
    p.discrete = action_space.discrete;
    p.action_dim = action_space.discrete ? action_space.n : action_space.dim;
    if (p.action_dim <= 0) throw InvalidSpec("empty action space");
    p.log_std_min = config.log_std_min;
    p.log_std_max = config.log_std_max;
    p.state_features = state_features;
    const int out = p.discrete ? p.action_dim : 2 * p.action_dim;
    p.net = nn::MLP::init({state_features.output_dim(), config.hidden, out, config.densenet, config.layernorm}, rng);
    return p;
}

Mat encode_policy_states(const PolicyParams& policy, const std::vector<Vec>& states) {
    Mat out(policy.state_features.output_dim(), static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i) {
        policy.state_features.encode_into(states[i], out.col(static_cast<Eigen::Index>(i)));
    }
    return out;
}

namespace detail {

Mat log_softmax_columns(const Mat& logits) {
    const Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
    const Mat shifted = logits.rowwise() - mx;
    const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    return shifted.rowwise() - lse;
}

double log1m_tanh2(double u) {
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
    const double x = -2.0 * u;
    const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return 2.0 * (std::numbers::ln2 - u - softplus);
}

RawHeads raw_heads(const PolicyParams& policy, const Mat& out) {
    const int d = policy.action_dim;
    RawHeads h;
    h.mean = out.topRows(d);
    h.raw_log_std = out.bottomRows(d);
    const double half = 0.5 * (policy.log_std_max - policy.log_std_min);
    h.log_std = (policy.log_std_min + half * (h.raw_log_std.array().tanh() + 1.0)).matrix();
    h.d_log_std_d_raw = (half * (1.0 - h.raw_log_std.array().tanh().square())).matrix();
    return h;
}

}  // namespace detail

Mat action_probabilities(const PolicyParams& policy, const std::vector<Vec>& states) {
    if (!policy.discrete) throw InvalidSpec("action probabilities need a discrete policy");
    const Mat logits = nn::forward(policy.net, encode_policy_states(policy, states));
    return detail::log_softmax_columns(logits).array().exp().matrix();
}

GaussianHeads gaussian_heads(const PolicyParams& policy, const std::vector<Vec>& states) {
    if (policy.discrete) throw InvalidSpec("Gaussian heads need a continuous policy");
    const detail::RawHeads h = detail::raw_heads(policy, nn::forward(policy.net, encode_policy_states(policy, states)));
    return {h.mean, h.log_std};
}

ActionSamples sample_actions(const PolicyParams& policy, const std::vector<Vec>& states, Rng& rng, int n) {
    if (n < 1) throw InvalidSpec("need at least one action sample");
    const auto b = static_cast<Eigen::Index>(states.size());
    ActionSamples out;
    out.log_probs.resize(b * n);
    if (policy.discrete) {
        const Mat logp = detail::log_softmax_columns(nn::forward(policy.net, encode_policy_states(policy, states)));
        out.actions.resize(1, b * n);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (int j = 0; j < n; ++j) {
                const double u = unif(rng);
                double acc = 0.0;
                Eigen::Index pick = logp.rows() - 1;
                for (Eigen::Index k = 0; k < logp.rows(); ++k) {
                    acc += std::exp(logp(k, i));
                    if (u < acc) {
                        pick = k;
                        break;
                    }
                }
                out.actions(0, i * n + j) = static_cast<double>(pick);
                out.log_probs[i * n + j] = logp(pick, i);
            }
        }
        return out;
    }
    const detail::RawHeads h =
        detail::raw_heads(policy, nn::forward(policy.net, encode_policy_states(policy, states)));
    const int d = policy.action_dim;
    out.actions.resize(d, b * n);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int j = 0; j < n; ++j) {
            double lp = 0.0;
            for (int k = 0; k < d; ++k) {
                const double eps = normal(rng);
                const double u = h.mean(k, i) + std::exp(h.log_std(k, i)) * eps;
                out.actions(k, i * n + j) = std::tanh(u);
                lp += -0.5 * eps * eps - h.log_std(k, i) - log_norm - detail::log1m_tanh2(u);
            }
            out.log_probs[i * n + j] = lp;
        }
    }
    return out;
}

double log_prob(const PolicyParams& policy, const Vec& state, const Vec& action) {
    const Mat out = nn::forward(policy.net, encode_policy_states(policy, {state}));
    if (policy.discrete) {
        if (action.size() != 1) throw ShapeError("discrete action must be a 1-vector index");
        const auto idx = static_cast<Eigen::Index>(action[0]);
        if (idx < 0 || idx >= policy.action_dim) throw InvalidAction("action index out of range");
        return detail::log_softmax_columns(out)(idx, 0);
    }
    if (action.size() != policy.action_dim) throw ShapeError("action dimension mismatch");
    const detail::RawHeads h = detail::raw_heads(policy, out);
    double lp = 0.0;
    for (int k = 0; k < policy.action_dim; ++k) {
        const double a = std::clamp(action[k], -detail::kActionClip, detail::kActionClip);
        const double u = std::atanh(a);
        const double eps = (u - h.mean(k, 0)) / std::exp(h.log_std(k, 0));
        lp += -0.5 * eps * eps - h.log_std(k, 0) - 0.5 * std::log(2.0 * std::numbers::pi) - detail::log1m_tanh2(u);
    }
    return lp;
}

Vec deterministic_action(const PolicyParams& policy, const Vec& state) {
    const Mat out = nn::forward(policy.net, encode_policy_states(policy, {state}));
    if (policy.discrete) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < out.rows(); ++k) {
            if (out(k, 0) > out(best, 0)) best = k;
        }
        return env::scalar_vec(static_cast<double>(best));
    }
    return out.col(0).head(policy.action_dim).array().tanh().matrix();
}

}  // namespace cvl::policy
