#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cvl/critic/critic.hpp"
#include "cvl/rng.hpp"

namespace cvl::rff {

using nn::Mat;
using nn::Vec;

/// Random Fourier features for the exponential kernel on vectors of fixed norm
/// r = 1 / sqrt(temperature):
///   F(x) = sqrt(2 exp(r^2) / k) cos(W x / sqrt(T) + b),  W ~ N(0, I), b ~ U(0, 2 pi),
/// so that E[F(x)^T F(y)] = exp(x^T y / T) for unit x, y. The running average
/// xi of F(psi_target(s')) r(s') turns reward-weighted value estimates into a
/// single dot product per anchor.
struct RFFState {
    Mat projection;  // k x d, fixed after construction
    Vec offsets;     // k
    double temperature = 1.0;
    Vec xi;          // k
    double xi_ema = 0.01;
    bool xi_initialized = false;

    int feature_dim() const { return static_cast<int>(offsets.size()); }
    int input_dim() const { return static_cast<int>(projection.cols()); }
};

RFFState make_rff(int input_dim, int feature_dim, double xi_ema, Rng& rng, double temperature = 1.0);

/// Columns of z are inputs; returns k x B features.
Mat rff_map(const RFFState& rff, const Mat& z);
Vec rff_map(const RFFState& rff, const Vec& z);

/// Gradient with respect to z of sum_j coeffs_j^T F(z_j), where coeffs is k x B.
Mat rff_map_backward(const RFFState& rff, const Mat& z, const Mat& coeffs);

/// xi <- beta * mean_b F_b r_b + (1 - beta) * xi; the first call sets xi to
/// the batch mean. `features` is k x B. Throws RewardRequired without rewards.
void update_xi(RFFState& rff, const Mat& features, const std::optional<std::vector<double>>& rewards);

}  // namespace cvl::rff
