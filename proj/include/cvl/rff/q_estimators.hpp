#pragma once

#include <vector>

#include "cvl/critic/critic.hpp"
#include "cvl/rff/rff.hpp"

namespace cvl::rff {

/// psi_target embeddings of a fixed set of future states with their rewards
/// and optional importance weights (uniform when empty).
struct FutureSamples {
    Mat embeddings;  // d x N
    Vec rewards;
    Vec weights;
};

FutureSamples encode_futures(const critic::CriticParams& critic, const std::vector<Vec>& states,
                             const std::vector<double>& rewards, const std::vector<double>& weights = {});

/// Q(s, a) = 1/(1 - gamma) * sum_i w_i r_i exp(f(s, a, s'_i)) / sum_i w_i.
double q_nce_direct(const critic::CriticParams& critic, const Vec& state, const Vec& action,
                    const std::vector<Vec>& future_states, const std::vector<double>& future_rewards,
                    const std::vector<double>& weights, double gamma);

/// Same estimate for every column of `phi` (normalised anchor embeddings).
Vec q_nce_direct_batch(const Mat& phi, const FutureSamples& futures, double temperature, double gamma,
                       Mat* phi_grad = nullptr);

/// Q(s, a) = 1/(1 - gamma) * F(phi(s, a))^T xi. Throws XiUninitialized
/// before the first update_xi call.
double q_nce_rff(const critic::CriticParams& critic, const RFFState& rff, const Vec& state, const Vec& action,
                 double gamma);

Vec q_nce_rff_batch(const Mat& phi, const RFFState& rff, double gamma, Mat* phi_grad = nullptr);

}  // namespace cvl::rff
