#include "cvl/rff/q_estimators.hpp"

#include <cmath>

#include "cvl/errors.hpp"

namespace cvl::rff {

namespace {

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1)");
}

}  // namespace

FutureSamples encode_futures(const critic::CriticParams& critic, const std::vector<Vec>& states,
                             const std::vector<double>& rewards, const std::vector<double>& weights) {
    if (states.size() != rewards.size()) throw ShapeError("one reward per future state required");
    if (!weights.empty() && weights.size() != states.size()) throw ShapeError("one weight per future state required");
    if (states.empty()) throw ShapeError("no future states");
    FutureSamples out;
    out.embeddings = critic::embed_futures(critic, critic::encode_states(critic, states), critic::PsiNet::Target);
    out.rewards = Eigen::Map<const Vec>(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
    out.weights = weights.empty()
                      ? Vec::Ones(static_cast<Eigen::Index>(states.size()))
                      : Vec(Eigen::Map<const Vec>(weights.data(), static_cast<Eigen::Index>(weights.size())));
    return out;
}

Vec q_nce_direct_batch(const Mat& phi, const FutureSamples& futures, double temperature, double gamma,
                       Mat* phi_grad) {
    check_gamma(gamma);
    if (phi.rows() != futures.embeddings.rows()) throw ShapeError("embedding dimension mismatch");
    const double weight_sum = futures.weights.sum();
    if (!(weight_sum > 0.0)) throw InvalidSpec("future weights must have positive sum");
    // exps(j, i) = exp(f(anchor i, future j))
    const Mat exps = ((futures.embeddings.transpose() * phi) / temperature).array().exp().matrix();
    const Vec wr = futures.weights.cwiseProduct(futures.rewards);
    const double scale = 1.0 / ((1.0 - gamma) * weight_sum);
    Vec q = scale * (exps.transpose() * wr);
    if (!q.allFinite()) throw NumericalFault("non-finite direct Q estimate");
    if (phi_grad != nullptr) {
        const Mat coeff = exps.array().colwise() * wr.array();
        *phi_grad = (scale / temperature) * futures.embeddings * coeff;
    }
    return q;
}

double q_nce_direct(const critic::CriticParams& critic, const Vec& state, const Vec& action,
                    const std::vector<Vec>& future_states, const std::vector<double>& future_rewards,
                    const std::vector<double>& weights, double gamma) {
    const FutureSamples futures = encode_futures(critic, future_states, future_rewards, weights);
    const Mat phi = critic::embed_anchors(critic, critic::encode_anchors(critic, std::vector<Vec>{state}, std::vector<Vec>{action}));
    return q_nce_direct_batch(phi, futures, critic.infonce_temperature, gamma)[0];
}

Vec q_nce_rff_batch(const Mat& phi, const RFFState& rff, double gamma, Mat* phi_grad) {
    check_gamma(gamma);
    if (!rff.xi_initialized) throw XiUninitialized("xi has not been updated yet");
    if (phi.rows() != rff.input_dim()) throw ShapeError("RFF input dimension mismatch");
    const double root_t = std::sqrt(rff.temperature);
    const double scale =
        std::sqrt(2.0 * std::exp(1.0 / rff.temperature) / static_cast<double>(rff.feature_dim())) / (1.0 - gamma);
    // One pass over the phases: q needs cos, the gradient needs sin of the same argument.
    const Mat p = (rff.projection * phi) / root_t;
    const Eigen::Index k = p.rows();
    Vec q(phi.cols());
    Mat sin_xi(phi_grad != nullptr ? k : 0, phi.cols());
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
        double acc = 0.0;
        if (phi_grad != nullptr) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const double arg = p(j, i) + rff.offsets[j];
                acc += rff.xi[j] * std::cos(arg);
                sin_xi(j, i) = rff.xi[j] * std::sin(arg);
            }
        } else {
            for (Eigen::Index j = 0; j < k; ++j) acc += rff.xi[j] * std::cos(p(j, i) + rff.offsets[j]);
        }
        q[i] = scale * acc;
    }
    if (!q.allFinite()) throw NumericalFault("non-finite RFF Q estimate");
    if (phi_grad != nullptr) *phi_grad = (-scale / root_t) * (rff.projection.transpose() * sin_xi);
    return q;
}

double q_nce_rff(const critic::CriticParams& critic, const RFFState& rff, const Vec& state, const Vec& action,
                 double gamma) {
    const Mat phi = critic::embed_anchors(critic, critic::encode_anchors(critic, std::vector<Vec>{state}, std::vector<Vec>{action}));
    return q_nce_rff_batch(phi, rff, gamma)[0];
}

}  // namespace cvl::rff
