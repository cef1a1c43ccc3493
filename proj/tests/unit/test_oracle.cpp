#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cvl/env/environment.hpp"
#include "cvl/env/tabular_mdp.hpp"
#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

using namespace cvl;
using oracle::PolicyTable;

namespace {

env::TabularMDP slippery_grid() { return env::make_gridworld(4, 3, {3, 0}, -0.1, 1.0, 0.2, 0.9, 25); }

PolicyTable random_policy(int n_states, int n_actions, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    PolicyTable p(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) p(s, a) = unif(rng);
        p.row(s) /= p.row(s).sum();
    }
    return p;
}

PolicyTable constant_policy(int n_states, int n_actions, int action) {
    PolicyTable p = PolicyTable::Zero(n_states, n_actions);
    p.col(action).setOnes();
    return p;
}

}  // namespace

TEST(Oracle, ChainClosedForms) {
    const auto chain = env::make_chain(2, 0.9, 5);
    const auto advance = constant_policy(2, 2, 0);
    const auto q = oracle::exact_q(chain, advance);
    EXPECT_NEAR(q(0, 0), 10.0, 1e-10);
    EXPECT_NEAR(q(0, 1), 9.0, 1e-10);
    EXPECT_NEAR(q(1, 0), 10.0, 1e-10);
    const auto qh = oracle::exact_q(chain, advance, 5);
    EXPECT_NEAR(qh(0, 0), (1 - std::pow(0.9, 5)) / 0.1, 1e-12);
    EXPECT_NEAR(qh(0, 1), 0.9 * (1 - std::pow(0.9, 4)) / 0.1, 1e-12);
}

TEST(Oracle, OccupancyAndBellmanRoutesAgree) {
    const auto mdp = slippery_grid();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto pi = random_policy(mdp.n_states, mdp.n_actions, seed);
        EXPECT_LT((oracle::exact_q(mdp, pi) - oracle::bellman_q(mdp, pi)).cwiseAbs().maxCoeff(), 1e-9);
        for (int h : {1, 2, 7, 25}) {
            EXPECT_LT((oracle::exact_q(mdp, pi, h) - oracle::bellman_q(mdp, pi, h)).cwiseAbs().maxCoeff(), 1e-9)
                << "horizon " << h;
        }
    }
}

TEST(Oracle, OccupancyRowsAreDistributions) {
    const auto mdp = slippery_grid();
    const auto pi = random_policy(mdp.n_states, mdp.n_actions, 4);
    for (auto horizon : {std::optional<int>{}, std::optional<int>{10}}) {
        const auto occ = oracle::exact_occupancy(mdp, pi, horizon);
        EXPECT_FALSE(occ.ill_conditioned);
        for (int s = 0; s < mdp.n_states; ++s) {
            for (int a = 0; a < mdp.n_actions; ++a) {
                double sum = 0.0;
                for (int n = 0; n < mdp.n_states; ++n) {
                    EXPECT_GE(occ.at(s, a, n), 0.0);
                    sum += occ.at(s, a, n);
                }
                EXPECT_NEAR(sum, 1.0, 1e-10);
            }
        }
    }
}

TEST(Oracle, OccupancyMatchesMonteCarlo) {
    const auto mdp = slippery_grid();
    const auto pi = random_policy(mdp.n_states, mdp.n_actions, 5);
    const int horizon = 12;
    const auto occ = oracle::exact_occupancy(mdp, pi, horizon);
    const env::TabularEnv e("grid", mdp);
    Rng rng = make_stream(6, 0);
    const int s0 = 4, a0 = 1;
    const double g = mdp.gamma;
    std::vector<double> freq(mdp.n_states, 0.0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        env::Vec s = env::scalar_vec(s0);
        env::Vec a = env::scalar_vec(a0);
        for (int k = 1; k <= horizon; ++k) {
            s = e.step(s, a, rng).next_state;
            freq[static_cast<int>(s[0])] += std::pow(g, k - 1);
            const Eigen::VectorXd row = pi.row(static_cast<int>(s[0])).transpose();
            std::discrete_distribution<int> pick(row.data(), row.data() + row.size());
            a = env::scalar_vec(pick(rng));
        }
    }
    const double norm = (1 - g) / (1 - std::pow(g, horizon)) / n;
    for (int next = 0; next < mdp.n_states; ++next) EXPECT_NEAR(freq[next] * norm, occ.at(s0, a0, next), 0.01);
}

TEST(Oracle, RatioIsNormalisedAgainstMarginal) {
    const auto mdp = slippery_grid();
    const auto pi = random_policy(mdp.n_states, mdp.n_actions, 7);
    const auto occ = oracle::exact_occupancy(mdp, pi, 25);
    Eigen::MatrixXd w = random_policy(mdp.n_states, mdp.n_actions, 8);
    w.row(0).setZero();
    const auto ratio = oracle::exact_ratio(occ, w);
    EXPECT_NEAR(ratio.marginal.sum(), 1.0, 1e-12);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            double sum = 0.0;
            for (int n = 0; n < mdp.n_states; ++n) sum += ratio.at(s, a, n) * ratio.marginal(n);
            EXPECT_NEAR(sum, 1.0, 1e-10);
        }
    }
    for (int n = 0; n < mdp.n_states; ++n) {
        if (!ratio.supported[n]) continue;
        double avg = 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            for (int a = 0; a < mdp.n_actions; ++a) avg += w(s, a) / w.sum() * ratio.at(s, a, n);
        }
        EXPECT_NEAR(avg, 1.0, 1e-10);
    }
}

TEST(Oracle, ValueIterationDominatesAndIsGreedyFixedPoint) {
    const auto mdp = slippery_grid();
    const auto vi = oracle::value_iteration(mdp);
    const auto greedy = oracle::greedy_actions(vi.q);
    PolicyTable star = PolicyTable::Zero(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) star(s, greedy[s]) = 1.0;
    EXPECT_LT((oracle::bellman_q(mdp, star) - vi.q).cwiseAbs().maxCoeff(), 1e-8);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto q = oracle::exact_q(mdp, random_policy(mdp.n_states, mdp.n_actions, seed));
        EXPECT_TRUE(((vi.q - q).array() >= -1e-9).all());
    }
}

TEST(Oracle, GreedyTiesPickLowestIndex) {
    Eigen::MatrixXd q(2, 3);
    q << 1, 2, 2, 5, 0, 5;
    EXPECT_EQ(oracle::greedy_actions(q), (std::vector<int>{1, 0}));
}

TEST(Oracle, ExpectedReturnOnChain) {
    const auto chain = env::make_chain(2, 0.9, 10);
    EXPECT_NEAR(oracle::expected_return(chain, constant_policy(2, 2, 0), 3), 3.0, 1e-12);
    EXPECT_NEAR(oracle::expected_return(chain, constant_policy(2, 2, 1), 3), 0.0, 1e-12);
}

TEST(Spearman, KnownValues) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 8, 16, 32};
    const std::vector<double> down{5, 4, 3, 2, 1};
    EXPECT_NEAR(oracle::spearman(x, up), 1.0, 1e-15);
    EXPECT_NEAR(oracle::spearman(x, down), -1.0, 1e-15);
    // Ranks of ties: y = {1, 2, 2, 3} -> {1, 2.5, 2.5, 4}; Pearson of ranks by hand.
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 2, 2, 3};
    const double rb[] = {1, 2.5, 2.5, 4};
    const double ra[] = {1, 2, 3, 4};
    double mx = 2.5, my = 2.5, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (ra[i] - mx) * (rb[i] - my);
        sxx += (ra[i] - mx) * (ra[i] - mx);
        syy += (rb[i] - my) * (rb[i] - my);
    }
    EXPECT_NEAR(oracle::spearman(a, b), sxy / std::sqrt(sxx * syy), 1e-14);
}

TEST(Spearman, DegenerateInputs) {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> flat{4, 4, 4};
    EXPECT_EQ(oracle::spearman(x, flat), 0.0);
    EXPECT_THROW(oracle::spearman(x, std::vector<double>{1, 2}), InvalidSpec);
    EXPECT_THROW(oracle::spearman(std::vector<double>{1}, std::vector<double>{1}), InvalidSpec);
}

TEST(ChiSquare, TwoDegreesOfFreedomClosedForm) {
    const std::vector<long long> counts{30, 50, 20};
    const std::vector<double> probs{0.25, 0.5, 0.25};
    const auto res = oracle::chi_square_gof(counts, probs);
    const double stat = std::pow(30 - 25.0, 2) / 25 + 0 + std::pow(20 - 25.0, 2) / 25;
    EXPECT_EQ(res.dof, 2);
    EXPECT_NEAR(res.statistic, stat, 1e-12);
    // Survival function of chi-square with 2 dof is exp(-x / 2).
    EXPECT_NEAR(res.p_value, std::exp(-stat / 2), 1e-12);
}

TEST(ChiSquare, MergesSparseTail) {
    const std::vector<long long> counts{90, 8, 1, 1};
    const std::vector<double> probs{0.9, 0.08, 0.01, 0.01};
    const auto res = oracle::chi_square_gof(counts, probs);
    EXPECT_EQ(res.dof, 1);
    EXPECT_NEAR(res.statistic, 0.0, 1e-12);
}
