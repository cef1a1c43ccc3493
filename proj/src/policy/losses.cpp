#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cvl/errors.hpp"
#include "cvl/policy/policy.hpp"
#include "detail.hpp"

namespace cvl::policy {

namespace {

// Reparameterised samples u = mean + std * eps with everything needed for
// pathwise gradients.
struct Reparam {
    Mat eps;      // d x (B * n)
    Mat u;
    Mat actions;  // tanh(u)
    Vec log_probs;
};

Reparam reparam_samples(const detail::RawHeads& h, int n, Rng& rng) {
    const Eigen::Index d = h.mean.rows();
    const Eigen::Index b = h.mean.cols();
    Reparam r;
    r.eps.resize(d, b * n);
    r.u.resize(d, b * n);
    r.log_probs = Vec::Zero(b * n);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int j = 0; j < n; ++j) {
            const Eigen::Index c = i * n + j;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double e = normal(rng);
                const double u = h.mean(k, i) + std::exp(h.log_std(k, i)) * e;
                r.eps(k, c) = e;
                r.u(k, c) = u;
                r.log_probs[c] += -0.5 * e * e - h.log_std(k, i) - log_norm - detail::log1m_tanh2(u);
            }
        }
    }
    r.actions = r.u.array().tanh().matrix();
    return r;
}

// Adds weight * d(log pi(a_c | s_i))/d(mean, log_std) for every sample, with
// eps held fixed.
void add_log_prob_pathwise(const detail::RawHeads& h, const Reparam& r, int n, double weight, Mat& d_mean,
                           Mat& d_log_std) {
    for (Eigen::Index i = 0; i < h.mean.cols(); ++i) {
        for (int j = 0; j < n; ++j) {
            const Eigen::Index c = i * n + j;
            for (Eigen::Index k = 0; k < h.mean.rows(); ++k) {
                const double t2 = 2.0 * std::tanh(r.u(k, c));
                const double sigma = std::exp(h.log_std(k, i));
                d_mean(k, i) += weight * t2;
                d_log_std(k, i) += weight * (-1.0 + t2 * sigma * r.eps(k, c));
            }
        }
    }
}

Vec backprop_gaussian(const PolicyParams& policy, const nn::ForwardCache& cache, const detail::RawHeads& h,
                      const Mat& d_mean, const Mat& d_log_std) {
    Mat g(2 * policy.action_dim, h.mean.cols());
    g.topRows(policy.action_dim) = d_mean;
    g.bottomRows(policy.action_dim) = d_log_std.cwiseProduct(h.d_log_std_d_raw);
    return nn::backward(policy.net, cache, g);
}

std::vector<Vec> repeat_states(const std::vector<Vec>& states, int n) {
    std::vector<Vec> out;
    out.reserve(states.size() * static_cast<std::size_t>(n));
    for (const Vec& s : states) {
        for (int j = 0; j < n; ++j) out.push_back(s);
    }
    return out;
}

void check_states(const std::vector<Vec>& states) {
    if (states.empty()) throw ShapeError("policy loss needs at least one state");
}

}  // namespace

PolicyLoss kl_boltzmann_loss(const PolicyParams& policy, const QFunction& q, const std::vector<Vec>& states,
                             double tau, int n_samples, Rng& rng) {
    check_states(states);
    if (!(tau > 0.0)) throw InvalidSpec("Boltzmann temperature must be positive");
    const auto b = static_cast<Eigen::Index>(states.size());
    nn::ForwardCache cache;
    const Mat out = nn::forward(policy.net, encode_policy_states(policy, states), &cache);
    PolicyLoss res;

    if (policy.discrete) {
        const int n = policy.action_dim;
        Mat actions(1, b * n);
        for (Eigen::Index i = 0; i < b; ++i) {
            for (int k = 0; k < n; ++k) actions(0, i * n + k) = k;
        }
        const Vec qv = q.evaluate(repeat_states(states, n), actions, nullptr);
        const Mat logp = detail::log_softmax_columns(out);
        Mat g(n, b);
        for (Eigen::Index i = 0; i < b; ++i) {
            const Vec pi = logp.col(i).array().exp();
            const Vec centred = logp.col(i) - qv.segment(i * n, n) / tau;
            const double kl = pi.dot(centred);
            res.loss += kl;
            res.mean_q += pi.dot(qv.segment(i * n, n));
            g.col(i) = (pi.array() * (centred.array() - kl)).matrix();
        }
        res.loss /= static_cast<double>(b);
        res.mean_q /= static_cast<double>(b);
        res.grad = nn::backward(policy.net, cache, g / static_cast<double>(b));
        return res;
    }

    if (n_samples < 1) throw InvalidSpec("need at least one action sample");
    const detail::RawHeads h = detail::raw_heads(policy, out);
    const Reparam r = reparam_samples(h, n_samples, rng);
    Mat dq_da;
    const Vec qv = q.evaluate(repeat_states(states, n_samples), r.actions, &dq_da);
    const double w = 1.0 / static_cast<double>(b * n_samples);
    res.loss = w * (r.log_probs.sum() - qv.sum() / tau);
    res.mean_q = qv.mean();

    Mat d_mean = Mat::Zero(policy.action_dim, b);
    Mat d_log_std = Mat::Zero(policy.action_dim, b);
    add_log_prob_pathwise(h, r, n_samples, w, d_mean, d_log_std);
    const Mat dq_du = dq_da.cwiseProduct((1.0 - r.actions.array().square()).matrix());
    for (Eigen::Index i = 0; i < b; ++i) {
        for (int j = 0; j < n_samples; ++j) {
            const Eigen::Index c = i * n_samples + j;
            for (int k = 0; k < policy.action_dim; ++k) {
                const double gq = -w / tau * dq_du(k, c);
                d_mean(k, i) += gq;
                d_log_std(k, i) += gq * std::exp(h.log_std(k, i)) * r.eps(k, c);
            }
        }
    }
    res.grad = backprop_gaussian(policy, cache, h, d_mean, d_log_std);
    return res;
}

PolicyLoss bc_loss(const PolicyParams& policy, const std::vector<Vec>& states, const std::vector<Vec>& actions,
                   double entropy_coeff, int n_samples, Rng& rng) {
    check_states(states);
    if (states.size() != actions.size()) throw ShapeError("one action per state required");
    const auto b = static_cast<Eigen::Index>(states.size());
    nn::ForwardCache cache;
    const Mat out = nn::forward(policy.net, encode_policy_states(policy, states), &cache);
    PolicyLoss res;
    const double w = 1.0 / static_cast<double>(b);

    if (policy.discrete) {
        const Mat logp = detail::log_softmax_columns(out);
        Mat g(policy.action_dim, b);
        for (Eigen::Index i = 0; i < b; ++i) {
            const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)][0]);
            if (a < 0 || a >= policy.action_dim) throw InvalidAction("action index out of range");
            const Vec pi = logp.col(i).array().exp();
            const double neg_entropy = pi.dot(logp.col(i));
            res.loss += w * (-logp(a, i) + entropy_coeff * neg_entropy);
            Vec gi = pi;
            gi[a] -= 1.0;
            gi += entropy_coeff * pi.cwiseProduct((logp.col(i).array() - neg_entropy).matrix());
            g.col(i) = w * gi;
        }
        res.grad = nn::backward(policy.net, cache, g);
        return res;
    }

    const detail::RawHeads h = detail::raw_heads(policy, out);
    const int d = policy.action_dim;
    Mat d_mean = Mat::Zero(d, b);
    Mat d_log_std = Mat::Zero(d, b);
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Vec& a = actions[static_cast<std::size_t>(i)];
        if (a.size() != d) throw ShapeError("action dimension mismatch");
        for (int k = 0; k < d; ++k) {
            const double u = std::atanh(std::clamp(a[k], -detail::kActionClip, detail::kActionClip));
            const double sigma = std::exp(h.log_std(k, i));
            const double eps = (u - h.mean(k, i)) / sigma;
            res.loss += w * (0.5 * eps * eps + h.log_std(k, i) + log_norm + detail::log1m_tanh2(u));
            d_mean(k, i) += w * (-eps / sigma);
            d_log_std(k, i) += w * (1.0 - eps * eps);
        }
    }
    if (entropy_coeff != 0.0) {
        if (n_samples < 1) throw InvalidSpec("need at least one action sample");
        const Reparam r = reparam_samples(h, n_samples, rng);
        const double we = entropy_coeff / static_cast<double>(b * n_samples);
        res.loss += we * r.log_probs.sum();
        add_log_prob_pathwise(h, r, n_samples, we, d_mean, d_log_std);
    }
    res.grad = backprop_gaussian(policy, cache, h, d_mean, d_log_std);
    return res;
}

PolicyMetrics policy_update(PolicyParams& policy, const std::vector<Vec>& states, const std::vector<Vec>& actions,
                            const QFunction& q, const PolicyUpdateConfig& config, nn::AdamState& optimizer,
                            Rng& rng) {
    PolicyLoss kl = kl_boltzmann_loss(policy, q, states, config.tau, config.n_action_samples, rng);
    PolicyMetrics m;
    m.kl_loss = kl.loss;
    m.mean_q = kl.mean_q;
    Vec grad = std::move(kl.grad);
    if (config.lambda_bc != 0.0) {
        const PolicyLoss bc = bc_loss(policy, states, actions, config.entropy_coeff, config.n_action_samples, rng);
        m.bc_loss = bc.loss;
        grad += config.lambda_bc * bc.grad;
    }
    m.total = m.kl_loss + config.lambda_bc * m.bc_loss;
    if (!std::isfinite(m.total)) throw NumericalFault("non-finite policy loss");
    m.grad_norm = nn::adam_step(optimizer, policy.net.params(), grad).grad_norm;
    return m;
}

int greedy_decode(const QFunction& q, const Vec& state, const Mat& candidates) {
    if (candidates.cols() == 0) throw ShapeError("no candidate actions");
    const std::vector<Vec> states(static_cast<std::size_t>(candidates.cols()), state);
    const Vec qv = q.evaluate(states, candidates, nullptr);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < qv.size(); ++i) {
        if (qv[i] > qv[best]) best = i;
    }
    return static_cast<int>(best);
}

}  // namespace cvl::policy
