#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "cvl/env/behavior.hpp"
#include "cvl/env/env_config.hpp"
#include "cvl/env/environment.hpp"
#include "cvl/env/tabular_mdp.hpp"
#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

using namespace cvl;
using env::scalar_vec;

namespace {

env::Policy constant_action(double a) {
    return [a](const env::Vec&, Rng&) { return scalar_vec(a); };
}

// Breadth-first search over deterministic moves of a slip-free gridworld.
int bfs_steps(const env::TabularMDP& mdp, int from, int to) {
    std::vector<int> dist(mdp.n_states, -1);
    std::deque<int> queue{from};
    dist[from] = 0;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int a = 0; a < mdp.n_actions; ++a) {
            for (int n = 0; n < mdp.n_states; ++n) {
                if (mdp.p(s, a, n) > 0.5 && dist[n] < 0) {
                    dist[n] = dist[s] + 1;
                    queue.push_back(n);
                }
            }
        }
    }
    return dist[to];
}

}  // namespace

TEST(TabularEnv, ChainStepMovesToAbsorbingRewardState) {
    env::TabularEnv chain("chain", env::make_chain(2, 0.9, 10));
    Rng rng = make_stream(0, 0);
    const auto r = chain.step(scalar_vec(0), scalar_vec(0), rng);
    EXPECT_EQ(r.next_state[0], 1.0);
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_FALSE(r.done);
    const auto stay = chain.step(scalar_vec(1), scalar_vec(1), rng);
    EXPECT_EQ(stay.next_state[0], 1.0);
}

TEST(TabularEnv, EmpiricalTransitionFrequencies) {
    env::TabularMDP mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.transition = {0.3, 0.7, 0.0, 1.0};
    mdp.reward = {0.0, 0.0};
    mdp.start_dist = {1.0, 0.0};
    mdp.horizon = 1;
    env::TabularEnv e("two", mdp);
    Rng rng = make_stream(3, 0);
    int zeros = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) zeros += e.step(scalar_vec(0), scalar_vec(0), rng).next_state[0] == 0.0;
    EXPECT_NEAR(zeros / double(n), 0.3, 0.01);
}

TEST(TabularEnv, BadActionIndexThrows) {
    env::TabularEnv chain("chain", env::make_chain(2, 0.9, 10));
    Rng rng = make_stream(0, 0);
    EXPECT_THROW(chain.step(scalar_vec(0), scalar_vec(2), rng), InvalidAction);
    EXPECT_THROW(chain.step(scalar_vec(0), scalar_vec(-1), rng), InvalidAction);
}

TEST(TabularMDP, InvalidRowsRejected) {
    env::TabularMDP mdp = env::make_chain(2, 0.9, 10);
    mdp.p(0, 0, 1) = 0.9;
    EXPECT_THROW(mdp.validate(), InvalidSpec);
}

TEST(Rollout, DeterministicChainExample) {
    env::TabularEnv chain("chain", env::make_chain(2, 0.9, 10));
    Rng rng = make_stream(0, 0);
    const auto traj = env::rollout(chain, constant_action(0), rng, 3);
    ASSERT_EQ(traj.states.size(), 4u);
    EXPECT_EQ(traj.states[0][0], 0.0);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(traj.states[i][0], 1.0);
    EXPECT_EQ(traj.rewards, (std::vector<double>{1.0, 1.0, 1.0}));
    EXPECT_FALSE(traj.terminal);
}

TEST(Rollout, SameSeedSameTrajectory) {
    const auto e = env::make_env("gridworld5x5");
    const auto behavior = env::behavior_policy(env::BehaviorKind::UniformRandom, {}, *e);
    Rng a = make_stream(11, 0);
    Rng b = make_stream(11, 0);
    const auto ta = env::rollout(*e, behavior.act, a, e->horizon());
    const auto tb = env::rollout(*e, behavior.act, b, e->horizon());
    ASSERT_EQ(ta.states.size(), tb.states.size());
    for (std::size_t i = 0; i < ta.states.size(); ++i) EXPECT_EQ(ta.states[i], tb.states[i]);
    EXPECT_EQ(ta.rewards, tb.rewards);
}

TEST(Rollout, RejectsTooLongAndNaNActions) {
    env::MountainCarEnv mc;
    Rng rng = make_stream(0, 0);
    EXPECT_THROW(env::rollout(mc, constant_action(0.0), rng, mc.horizon() + 1), InvalidSpec);
    EXPECT_THROW(env::rollout(mc, constant_action(std::nan("")), rng, 5), NumericalFault);
}

TEST(Gridworld, OneByTwoIsTheChain) {
    const auto grid = env::make_gridworld(2, 1, {1, 0}, 0.0, 1.0, 0.0, 0.9, 10);
    ASSERT_EQ(grid.n_states, 2);
    // Action 1 (right) from cell 0 reaches the absorbing goal.
    EXPECT_EQ(grid.p(0, 1, 1), 1.0);
    for (int a = 0; a < 4; ++a) EXPECT_EQ(grid.p(1, a, 1), 1.0);
    EXPECT_EQ(grid.reward, (std::vector<double>{0.0, 1.0}));
}

TEST(Gridworld, SlipRowsAreDistributions) {
    const auto grid = env::make_gridworld(5, 5, {4, 4}, 0.0, 1.0, 0.1, 0.9, 40);
    for (int s = 0; s < grid.n_states; ++s) {
        for (int a = 0; a < grid.n_actions; ++a) {
            double sum = 0.0;
            for (int n = 0; n < grid.n_states; ++n) sum += grid.p(s, a, n);
            EXPECT_NEAR(sum, 1.0, 1e-9);
        }
    }
}

TEST(Gridworld, ShortestPathCornerToCorner) {
    const auto grid = env::make_gridworld(3, 3, {2, 2}, 0.0, 1.0, 0.0, 0.9, 20);
    EXPECT_EQ(bfs_steps(grid, 0, 8), 4);
}

TEST(Gridworld, ZeroAreaRejected) {
    EXPECT_THROW(env::make_gridworld(0, 3, {0, 0}, 0.0, 1.0, 0.0, 0.9, 10), InvalidSpec);
    EXPECT_THROW(env::make_gridworld(3, 3, {5, 0}, 0.0, 1.0, 0.0, 0.9, 10), InvalidSpec);
    EXPECT_THROW(env::make_gridworld(3, 3, {0, 0}, 0.0, 1.0, 1.0, 0.9, 10), InvalidSpec);
}

TEST(Gridworld, AsciiLayoutWithWall) {
    const auto grid = env::make_gridworld_from_ascii({"S#G", "..."}, 0.0, 1.0, 0.0, 0.9, 10);
    EXPECT_EQ(grid.n_states, 6);
    EXPECT_EQ(grid.start_dist[0], 1.0);
    // Moving right from the start bumps into the wall.
    EXPECT_EQ(grid.p(0, 1, 0), 1.0);
    EXPECT_EQ(grid.reward[2], 1.0);
}

TEST(MountainCar, EnergyPumpingReachesGoalQuickly) {
    env::MountainCarEnv mc;
    Rng rng = make_stream(0, 0);
    env::Vec s(2);
    s << -0.5, 0.0;
    const env::Policy pump = [](const env::Vec& x, Rng&) { return scalar_vec(x[1] >= 0.0 ? 1.0 : -1.0); };
    const auto traj = env::rollout_from(mc, s, pump, rng, mc.horizon());
    EXPECT_TRUE(traj.terminal);
    EXPECT_LT(traj.length(), 200u);
    EXPECT_GE(traj.states.back()[0], mc.goal_position());
    EXPECT_NEAR(traj.rewards.back(), 100.0 - 0.1, 1e-12);
}

TEST(MountainCar, GoalBoundaryTerminates) {
    env::MountainCarEnv mc;
    Rng rng = make_stream(0, 0);
    env::Vec s(2);
    s << 0.6 - 1e-9, 0.01;
    EXPECT_TRUE(mc.step(s, scalar_vec(-1.0), rng).done);
}

TEST(MountainCar, ValleyBottomIsAFixedPoint) {
    env::MountainCarEnv mc;
    Rng rng = make_stream(0, 0);
    env::Vec s(2);
    s << -std::acos(0.0) / 3.0, 0.0;  // cos(3x) = 0
    const auto r = mc.step(s, scalar_vec(0.0), rng);
    EXPECT_NEAR(r.next_state[0], s[0], 1e-15);
    EXPECT_NEAR(r.next_state[1], 0.0, 1e-15);
}

TEST(MountainCar, ClampsAndRejectsBadInput) {
    env::MountainCarEnv mc;
    Rng rng = make_stream(0, 0);
    env::Vec s(2);
    s << -1.2, -0.07;
    const auto r = mc.step(s, scalar_vec(-1.0), rng);
    EXPECT_EQ(r.next_state[0], -1.2);
    EXPECT_EQ(r.next_state[1], 0.0);
    env::Vec bad(2);
    bad << std::nan(""), 0.0;
    EXPECT_THROW(mc.step(bad, scalar_vec(0.0), rng), NumericalFault);
}

TEST(Behavior, UniformRandomFrequencies) {
    const auto e = env::make_env("gridworld5x5");
    const auto behavior = env::behavior_policy(env::BehaviorKind::UniformRandom, {}, *e);
    Rng rng = make_stream(5, 0);
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(behavior.act(scalar_vec(0), rng)[0])];
    for (int c : counts) EXPECT_NEAR(c / double(n), 0.25, 0.01);
}

TEST(Behavior, EpsilonZeroIsGreedy) {
    const auto e = env::make_env("gridworld5x5");
    const auto& mdp = dynamic_cast<const env::TabularEnv&>(*e).mdp();
    env::BehaviorParams params;
    params.epsilon = 0.0;
    const auto behavior = env::behavior_policy(env::BehaviorKind::EpsilonSoftTabular, params, *e);
    const auto greedy = oracle::greedy_actions(oracle::value_iteration(mdp).q);
    Rng rng = make_stream(0, 0);
    for (int s = 0; s < mdp.n_states; ++s) {
        EXPECT_EQ(behavior.act(scalar_vec(s), rng)[0], greedy[s]) << "state " << s;
        EXPECT_EQ((*behavior.table)(s, greedy[s]), 1.0);
    }
}

TEST(Behavior, ScriptedMountainCarReachesGoalOften) {
    env::MountainCarEnv mc;
    env::BehaviorParams params;
    params.sigma = 0.3;
    const auto behavior = env::behavior_policy(env::BehaviorKind::ScriptedMountainCar, params, mc);
    Rng rng = make_stream(9, 0);
    int reached = 0;
    for (int i = 0; i < 100; ++i) reached += env::rollout(mc, behavior.act, rng, mc.horizon()).terminal;
    EXPECT_GE(reached, 50);
}

TEST(Behavior, InvalidParametersRejected) {
    const auto e = env::make_env("gridworld5x5");
    env::BehaviorParams params;
    params.epsilon = 1.5;
    EXPECT_THROW(env::behavior_policy(env::BehaviorKind::EpsilonSoftTabular, params, *e), InvalidSpec);
    env::MountainCarEnv mc;
    params.sigma = -0.1;
    EXPECT_THROW(env::behavior_policy(env::BehaviorKind::ScriptedMountainCar, params, mc), InvalidSpec);
    EXPECT_THROW(env::parse_behavior_kind("sac"), InvalidSpec);
}

TEST(EnvConfig, BuiltinsAndKeyValueFiles) {
    EXPECT_EQ(env::make_env("chain")->id(), "chain");
    EXPECT_EQ(env::make_env("mountain_car")->horizon(), 999);
    KeyValues kv = KeyValues::parse("type = gridworld\nid = g\nwidth = 3\nheight = 2\nslip_prob = 0\n");
    const auto e = env::make_env(kv);
    EXPECT_EQ(e->id(), "g");
    EXPECT_EQ(e->state_space().n, 6);
    EXPECT_THROW(env::make_env(KeyValues::parse("type = hovercraft\n")), InvalidSpec);
}
