#include <gtest/gtest.h>

#include <cmath>

#include "cvl/data/dataset.hpp"
#include "cvl/env/env_config.hpp"
#include "cvl/errors.hpp"
#include "cvl/rff/q_estimators.hpp"
#include "cvl/rff/rff.hpp"

using namespace cvl;
using rff::Mat;
using rff::Vec;

namespace {

Vec random_unit(int d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = normal(rng);
    return v.normalized();
}

critic::CriticParams small_critic(const env::Environment& e, std::uint64_t seed, double temperature = 1.0) {
    critic::CriticConfig cfg;
    cfg.hidden = {8};
    cfg.latent_dim = 6;
    cfg.temperature = temperature;
    Rng rng = make_stream(seed, stream::kInit);
    auto c = critic::make_critic(cfg, e.state_featurizer(), e.action_featurizer(), rng);
    // Decouple the target from the online network so the tests notice which one is used.
    c.psi_target.params() *= 0.5;
    return c;
}

}  // namespace

TEST(RFF, KernelApproximationAtUnitTemperature) {
    Rng rng = make_stream(1, stream::kRff);
    const auto r = rff::make_rff(8, 1 << 14, 0.01, rng);
    Rng data = make_stream(2, 0);
    double mean_err = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vec x = random_unit(8, data), y = random_unit(8, data);
        mean_err += std::abs(rff::rff_map(r, x).dot(rff::rff_map(r, y)) - std::exp(x.dot(y))) / 50;
    }
    EXPECT_LT(mean_err, 0.05);
}

TEST(RFF, KernelApproximationAtOtherTemperature) {
    const double t = 2.0;
    Rng rng = make_stream(3, stream::kRff);
    const auto r = rff::make_rff(8, 1 << 14, 0.01, rng, t);
    Rng data = make_stream(4, 0);
    double mean_err = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vec x = random_unit(8, data), y = random_unit(8, data);
        mean_err += std::abs(rff::rff_map(r, x).dot(rff::rff_map(r, y)) - std::exp(x.dot(y) / t)) / 50;
    }
    EXPECT_LT(mean_err, 0.03);
}

TEST(RFF, BatchAndSingleMapsAgree) {
    Rng rng = make_stream(0, stream::kRff);
    const auto r = rff::make_rff(4, 32, 0.01, rng);
    Mat z = Mat::Random(4, 3);
    const Mat f = rff::rff_map(r, z);
    for (int j = 0; j < 3; ++j) EXPECT_TRUE(f.col(j).isApprox(rff::rff_map(r, Vec(z.col(j))), 1e-14));
    EXPECT_THROW(rff::rff_map(r, Mat(Mat::Zero(5, 1))), ShapeError);
}

TEST(RFF, BackwardMatchesFiniteDifferences) {
    Rng rng = make_stream(0, stream::kRff);
    const auto r = rff::make_rff(5, 64, 0.01, rng, 0.7);
    const Mat z = Mat::Random(5, 3);
    const Mat coeffs = Mat::Random(64, 3);
    const Mat grad = rff::rff_map_backward(r, z, coeffs);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Mat zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        const double fd =
            ((rff::rff_map(r, zp) - rff::rff_map(r, zm)).array() * coeffs.array()).sum() / (2 * h);
        EXPECT_NEAR(grad(i), fd, 1e-6);
    }
}

TEST(RFF, XiInitialisesThenTracksEma) {
    Rng rng = make_stream(0, stream::kRff);
    auto r = rff::make_rff(3, 4, 0.25, rng);
    Mat f1 = Mat::Ones(4, 2);
    f1.col(1) *= 3.0;
    rff::update_xi(r, f1, std::vector<double>{1.0, 1.0});
    EXPECT_TRUE(r.xi_initialized);
    EXPECT_TRUE(r.xi.isApproxToConstant(2.0));
    rff::update_xi(r, Mat::Ones(4, 1), std::vector<double>{-2.0});
    EXPECT_TRUE(r.xi.isApproxToConstant(0.25 * -2.0 + 0.75 * 2.0));
}

TEST(RFF, XiNeedsRewards) {
    Rng rng = make_stream(0, stream::kRff);
    auto r = rff::make_rff(3, 4, 0.25, rng);
    EXPECT_THROW(rff::update_xi(r, Mat::Ones(4, 2), std::nullopt), RewardRequired);
    EXPECT_FALSE(r.xi_initialized);
    EXPECT_THROW(rff::q_nce_rff_batch(Mat::Ones(3, 1), r, 0.9), XiUninitialized);
}

TEST(RFF, InvalidConstructionRejected) {
    Rng rng = make_stream(0, stream::kRff);
    EXPECT_THROW(rff::make_rff(0, 8, 0.1, rng), InvalidSpec);
    EXPECT_THROW(rff::make_rff(3, 0, 0.1, rng), InvalidSpec);
    EXPECT_THROW(rff::make_rff(3, 8, 1.5, rng), InvalidSpec);
}

TEST(QEstimators, DirectMatchesHandSum) {
    const auto e = env::make_env("gridworld3x3");
    const auto c = small_critic(*e, 1, 0.8);
    const Vec s = env::scalar_vec(2), a = env::scalar_vec(1);
    const std::vector<Vec> futures{env::scalar_vec(0), env::scalar_vec(5), env::scalar_vec(8)};
    const std::vector<double> rewards{0.0, 0.5, 1.0};
    const std::vector<double> weights{1.0, 2.0, 3.0};
    const double gamma = 0.9;

    const Mat phi = critic::embed_anchors(c, critic::encode_anchors(c, std::vector<Vec>{s}, std::vector<Vec>{a}));
    const Mat psi = critic::embed_futures(c, critic::encode_states(c, futures), critic::PsiNet::Target);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
        num += weights[i] * rewards[i] * std::exp(phi.col(0).dot(psi.col(i)) / 0.8);
        den += weights[i];
    }
    const double expected = num / den / (1.0 - gamma);
    EXPECT_NEAR(rff::q_nce_direct(c, s, a, futures, rewards, weights, gamma), expected, 1e-12);
}

TEST(QEstimators, DirectBatchGradientMatchesFiniteDifferences) {
    const auto e = env::make_env("gridworld3x3");
    const auto c = small_critic(*e, 2);
    const auto futures = rff::encode_futures(c, {env::scalar_vec(1), env::scalar_vec(4), env::scalar_vec(7)},
                                             {0.2, -0.4, 1.0});
    const Mat phi = Mat::Random(6, 2);
    Mat grad;
    rff::q_nce_direct_batch(phi, futures, 0.6, 0.95, &grad);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        Mat pp = phi, pm = phi;
        pp(i) += h;
        pm(i) -= h;
        const double fd = (rff::q_nce_direct_batch(pp, futures, 0.6, 0.95).sum() -
                           rff::q_nce_direct_batch(pm, futures, 0.6, 0.95).sum()) /
                          (2 * h);
        EXPECT_NEAR(grad(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(QEstimators, RffAgreesWithDirectForSameFutures) {
    const auto e = env::make_env("gridworld3x3");
    const auto c = small_critic(*e, 3);
    const std::vector<Vec> states{env::scalar_vec(0), env::scalar_vec(3), env::scalar_vec(8), env::scalar_vec(6)};
    const std::vector<double> rewards{0.0, 0.3, 1.0, 0.7};
    const auto futures = rff::encode_futures(c, states, rewards);
    Rng rng = make_stream(0, stream::kRff);
    auto r = rff::make_rff(c.latent_dim(), 1 << 16, 0.01, rng);
    rff::update_xi(r, rff::rff_map(r, futures.embeddings), rewards);

    const Mat phi = critic::embed_anchors(
        c, critic::encode_anchors(c, std::vector<Vec>{env::scalar_vec(4), env::scalar_vec(2)},
                                  std::vector<Vec>{env::scalar_vec(0), env::scalar_vec(3)}));
    const Vec direct = rff::q_nce_direct_batch(phi, futures, 1.0, 0.9);
    const Vec approx = rff::q_nce_rff_batch(phi, r, 0.9);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(approx(i), direct(i), 0.05 * std::abs(direct(i)) + 0.1);
}

TEST(QEstimators, RffBatchGradientMatchesFiniteDifferences) {
    Rng rng = make_stream(5, stream::kRff);
    auto r = rff::make_rff(4, 128, 0.01, rng);
    rff::update_xi(r, rff::rff_map(r, Mat(Mat::Random(4, 5))), std::vector<double>{1, 2, 3, 4, 5});
    const Mat phi = Mat::Random(4, 2);
    Mat grad;
    rff::q_nce_rff_batch(phi, r, 0.9, &grad);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        Mat pp = phi, pm = phi;
        pp(i) += h;
        pm(i) -= h;
        const double fd =
            (rff::q_nce_rff_batch(pp, r, 0.9).sum() - rff::q_nce_rff_batch(pm, r, 0.9).sum()) / (2 * h);
        EXPECT_NEAR(grad(i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST(QEstimators, RejectsBadInputs) {
    const auto e = env::make_env("gridworld3x3");
    const auto c = small_critic(*e, 4);
    EXPECT_THROW(rff::encode_futures(c, {env::scalar_vec(1)}, {0.1, 0.2}), ShapeError);
    EXPECT_THROW(rff::encode_futures(c, {}, {}), ShapeError);
    const auto futures = rff::encode_futures(c, {env::scalar_vec(1)}, {1.0});
    EXPECT_THROW(rff::q_nce_direct_batch(Mat::Ones(6, 1), futures, 1.0, 1.0), InvalidSpec);
    EXPECT_THROW(rff::q_nce_direct_batch(Mat::Ones(5, 1), futures, 1.0, 0.9), ShapeError);
}
