#include <gtest/gtest.h>

#include <cmath>

#include "cvl/critic/critic.hpp"
#include "cvl/data/dataset.hpp"
#include "cvl/env/env_config.hpp"
#include "cvl/errors.hpp"

using namespace cvl;
using critic::Mat;
using critic::Vec;

namespace {

struct Fixture {
    std::unique_ptr<env::Environment> env = env::make_env("gridworld3x3");
    data::OfflineDataset dataset;
    Fixture() {
        const auto behavior = env::behavior_policy(env::BehaviorKind::UniformRandom, {}, *env);
        dataset = data::generate_dataset(*env, behavior, 6, 1);
    }
    critic::CriticParams make(bool normalize, double temperature = 1.0, std::uint64_t seed = 0) const {
        critic::CriticConfig cfg;
        cfg.hidden = {8, 8};
        cfg.latent_dim = 4;
        cfg.l2_normalize = normalize;
        cfg.temperature = temperature;
        Rng rng = make_stream(seed, stream::kInit);
        return critic::make_critic(cfg, env->state_featurizer(), env->action_featurizer(), rng);
    }
    data::ContrastiveBatch batch(std::uint64_t seed = 0) const {
        Rng rng = make_stream(seed, stream::kBatch);
        return data::sample_batch(dataset, 0.9, rng, false, 2);
    }
};

// Row-wise log-sum-exp loop, independent of the library's vectorised code.
double reference_infonce(const Mat& logits) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double m = logits.row(i).maxCoeff();
        double s = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) s += std::exp(logits(i, j) - m);
        total += m + std::log(s) - logits(i, i);
    }
    return total / logits.rows();
}

double reference_partition(const Mat& logits) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) s += std::exp(logits(i, j));
        total += std::log(s) * std::log(s);
    }
    return total / logits.rows();
}

Mat random_logits(int k, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 2.0);
    Mat m(k, k);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
    return m;
}

}  // namespace

TEST(InfoNCE, UniformLogitsGiveLogK) {
    for (int k : {2, 3, 17, 256}) {
        for (double c : {0.0, -3.5, 12.0}) {
            EXPECT_NEAR(critic::infonce_loss(Mat::Constant(k, k, c)), std::log(static_cast<double>(k)), 1e-10);
        }
    }
}

TEST(InfoNCE, MatchesReferenceLoop) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Mat l = random_logits(7, seed);
        EXPECT_NEAR(critic::infonce_loss(l), reference_infonce(l), 1e-12);
        EXPECT_NEAR(critic::partition_reg(l), reference_partition(l), 1e-10);
    }
}

TEST(InfoNCE, HugeLogitsStayFinite) {
    Mat l = Mat::Constant(4, 4, 800.0);
    l.diagonal().setConstant(1000.0);
    EXPECT_NEAR(critic::infonce_loss(l), 0.0, 1e-12);
}

TEST(InfoNCE, LogitGradientsMatchFiniteDifferences) {
    const Mat l = random_logits(5, 11);
    Mat g_nce, g_part;
    critic::infonce_loss(l, &g_nce);
    critic::partition_reg(l, &g_part);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        Mat lp = l, lm = l;
        lp(i) += h;
        lm(i) -= h;
        EXPECT_NEAR(g_nce(i), (reference_infonce(lp) - reference_infonce(lm)) / (2 * h), 1e-8);
        EXPECT_NEAR(g_part(i), (reference_partition(lp) - reference_partition(lm)) / (2 * h), 1e-6);
    }
}

TEST(InfoNCE, DegenerateInputsRejected) {
    EXPECT_THROW(critic::infonce_loss(Mat::Zero(0, 0)), BatchTooSmall);
    EXPECT_THROW(critic::infonce_loss(Mat::Zero(2, 3)), ShapeError);
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = std::nan("");
    EXPECT_THROW(critic::infonce_loss(bad), NumericalFault);
}

TEST(Critic, LogitsAreScaledInnerProducts) {
    Fixture f;
    const auto c = f.make(true, 0.5);
    const auto batch = f.batch();
    const Mat logits = critic::critic_logits(c, batch);
    const Mat phi = critic::embed_anchors(c, critic::encode_anchors(c, batch.anchor_states, batch.anchor_actions));
    const Mat psi = critic::embed_futures(c, critic::encode_states(c, batch.positives), critic::PsiNet::Online);
    ASSERT_EQ(logits.rows(), static_cast<Eigen::Index>(batch.size()));
    for (Eigen::Index i = 0; i < phi.cols(); ++i) EXPECT_NEAR(phi.col(i).norm(), 1.0, 1e-12);
    EXPECT_TRUE(logits.isApprox(phi.transpose() * psi / 0.5, 1e-12));
}

TEST(Critic, SingleAnchorBatchIsTooSmall) {
    Fixture f;
    const auto c = f.make(true);
    auto batch = f.batch();
    for (auto* v : {&batch.anchor_states, &batch.anchor_actions, &batch.positives}) v->resize(1);
    EXPECT_THROW(critic::critic_logits(c, batch), BatchTooSmall);
    EXPECT_THROW(critic::critic_loss(c, batch, 0.0), BatchTooSmall);
}

class CriticGradient : public ::testing::TestWithParam<bool> {};

TEST_P(CriticGradient, PhiAndPsiGradientsMatchFiniteDifferences) {
    Fixture f;
    const auto c = f.make(GetParam(), 0.7, 3);
    const auto batch = f.batch(2);
    const double lambda = 0.05;
    const auto loss = critic::critic_loss(c, batch, lambda);
    EXPECT_NEAR(loss.total, loss.infonce + lambda * loss.partition, 1e-12);
    const double h = 1e-6;
    double worst = 0.0;
    for (int which = 0; which < 2; ++which) {
        const Vec& analytic = which == 0 ? loss.phi_grad : loss.psi_grad;
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
            auto plus = c, minus = c;
            (which == 0 ? plus.phi : plus.psi).params()(i) += h;
            (which == 0 ? minus.phi : minus.psi).params()(i) -= h;
            const double fd =
                (critic::critic_loss(plus, batch, lambda).total - critic::critic_loss(minus, batch, lambda).total) /
                (2 * h);
            worst = std::max(worst, std::abs(fd - analytic(i)) / std::max(1.0, std::abs(fd)));
        }
    }
    EXPECT_LT(worst, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Normalisation, CriticGradient, ::testing::Bool());

TEST(Critic, LossCountsPsiForwards) {
    Fixture f;
    const auto c = f.make(true);
    const auto batch = f.batch();
    const auto before = critic::psi_forward_count();
    critic::critic_loss(c, batch, 0.0);
    EXPECT_EQ(critic::psi_forward_count() - before, batch.size());
}

TEST(Critic, TrainingLowersInfoNCEWithoutReadingRewards) {
    Fixture f;
    auto c = f.make(true);
    auto opt = critic::CriticOptimizer::create(c, {1e-3, 0.9, 0.999, 1e-8, 100.0});
    Rng rng = make_stream(0, stream::kBatch);
    const auto reads = data::reward_reads();
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 300; ++step) {
        const auto batch = data::sample_batch(f.dataset, 0.9, rng, false, 2);
        const auto m = critic::critic_update(c, batch, 0.001, 0.005, opt);
        if (step < 20) first += m.infonce / 20;
        if (step >= 280) last += m.infonce / 20;
    }
    EXPECT_LT(last, first);
    EXPECT_EQ(data::reward_reads(), reads);
}

TEST(Critic, EmaBoundaryCoefficients) {
    Fixture f;
    auto c = f.make(true);
    c.psi.params().setConstant(1.0);
    c.psi_target.params().setConstant(3.0);
    auto frozen = c;
    critic::ema_update(frozen, 0.0);
    EXPECT_EQ(frozen.psi_target.params(), c.psi_target.params());
    auto half = c;
    critic::ema_update(half, 0.25);
    EXPECT_TRUE(half.psi_target.params().isApproxToConstant(0.25 * 1.0 + 0.75 * 3.0));
    auto copy = c;
    critic::ema_update(copy, 1.0);
    EXPECT_EQ(copy.psi_target.params(), c.psi.params());
    EXPECT_THROW(critic::ema_update(copy, 1.5), InvalidSpec);
    EXPECT_THROW(critic::ema_update(copy, -0.1), InvalidSpec);
}

TEST(Critic, GradientStepFaultLeavesParametersUnchanged) {
    Fixture f;
    auto c = f.make(true);
    auto opt = critic::CriticOptimizer::create(c, {});
    auto batch = f.batch();
    batch.positives[0](0) = std::nan("");
    const Vec before = c.phi.params();
    EXPECT_ANY_THROW(critic::critic_gradient_step(c, batch, 0.0, opt));
    EXPECT_EQ(c.phi.params(), before);
    EXPECT_EQ(opt.phi.step_count, 0);
}

TEST(Critic, InvalidConfigRejected) {
    Fixture f;
    critic::CriticConfig cfg;
    cfg.latent_dim = 0;
    Rng rng = make_stream(0, 0);
    EXPECT_THROW(critic::make_critic(cfg, f.env->state_featurizer(), f.env->action_featurizer(), rng), InvalidSpec);
    cfg.latent_dim = 4;
    cfg.temperature = 0.0;
    EXPECT_THROW(critic::make_critic(cfg, f.env->state_featurizer(), f.env->action_featurizer(), rng), InvalidSpec);
}
