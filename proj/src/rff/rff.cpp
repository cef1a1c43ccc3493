#include "cvl/rff/rff.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cvl/errors.hpp"

namespace cvl::rff {

namespace {

double feature_scale(const RFFState& rff) {
    return std::sqrt(2.0 * std::exp(1.0 / rff.temperature) / static_cast<double>(rff.feature_dim()));
}

Mat phases(const RFFState& rff, const Mat& z) {
    if (z.rows() != rff.input_dim()) throw ShapeError("RFF input dimension mismatch");
    Mat p = (rff.projection * z) / std::sqrt(rff.temperature);
    p.colwise() += rff.offsets;
    return p;
}

}  // namespace

RFFState make_rff(int input_dim, int feature_dim, double xi_ema, Rng& rng, double temperature) {
    if (input_dim <= 0 || feature_dim <= 0) throw InvalidSpec("RFF dimensions must be positive");
    if (!(xi_ema > 0.0 && xi_ema <= 1.0)) throw InvalidSpec("xi EMA coefficient must lie in (0, 1]");
    if (!(temperature > 0.0)) throw InvalidSpec("temperature must be positive");
    RFFState rff;
    rff.projection.resize(feature_dim, input_dim);
    rff.offsets.resize(feature_dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < rff.projection.size(); ++i) rff.projection.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < rff.offsets.size(); ++i) rff.offsets[i] = phase(rng);
    rff.temperature = temperature;
    rff.xi = Vec::Zero(feature_dim);
    rff.xi_ema = xi_ema;
    return rff;
}

Mat rff_map(const RFFState& rff, const Mat& z) {
    return feature_scale(rff) * phases(rff, z).array().cos().matrix();
}

Vec rff_map(const RFFState& rff, const Vec& z) {
    Mat m = rff_map(rff, Mat(z));
    return m.col(0);
}

Mat rff_map_backward(const RFFState& rff, const Mat& z, const Mat& coeffs) {
    const Mat s = phases(rff, z).array().sin().matrix();
    if (coeffs.rows() != s.rows() || coeffs.cols() != s.cols()) throw ShapeError("RFF coefficient shape mismatch");
    const Mat inner = (-feature_scale(rff) * s.array() * coeffs.array()).matrix();
    return rff.projection.transpose() * inner / std::sqrt(rff.temperature);
}

void update_xi(RFFState& rff, const Mat& features, const std::optional<std::vector<double>>& rewards) {
    if (!rewards) throw RewardRequired("xi update needs future rewards");
    if (features.rows() != rff.feature_dim()) throw ShapeError("feature dimension mismatch");
    if (static_cast<Eigen::Index>(rewards->size()) != features.cols() || features.cols() == 0) {
        throw ShapeError("one reward per feature column required");
    }
    const Eigen::Map<const Vec> r(rewards->data(), static_cast<Eigen::Index>(rewards->size()));
    const Vec mean = features * r / static_cast<double>(r.size());
    if (!mean.allFinite()) throw NumericalFault("non-finite xi update");
    if (!rff.xi_initialized) {
        rff.xi = mean;
        rff.xi_initialized = true;
    } else {
        rff.xi = rff.xi_ema * mean + (1.0 - rff.xi_ema) * rff.xi;
    }
}

}  // namespace cvl::rff
