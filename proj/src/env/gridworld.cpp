#include <algorithm>
#include <array>

#include "cvl/env/tabular_mdp.hpp"
#include "cvl/errors.hpp"

namespace cvl::env {

namespace {

constexpr std::array<int, kGridActions> kDx{0, 1, 0, -1};
constexpr std::array<int, kGridActions> kDy{-1, 0, 1, 0};

TabularMDP build_grid(int width, int height, const std::vector<bool>& wall, int goal,
                      const std::vector<int>& starts, double step_reward, double goal_reward,
                      double slip_prob, double gamma, int horizon) {
    const int n = width * height;
    TabularMDP mdp;
    mdp.n_states = n;
    mdp.n_actions = kGridActions;
    mdp.transition.assign(static_cast<std::size_t>(n) * kGridActions * n, 0.0);
    mdp.reward.assign(n, step_reward);
    mdp.reward[goal] = goal_reward;
    mdp.gamma = gamma;
    mdp.horizon = horizon;
    mdp.r_min = std::min(step_reward, goal_reward);
    mdp.r_max = std::max(step_reward, goal_reward);

    auto move = [&](int s, int dir) {
        const int x = s % width + kDx[dir];
        const int y = s / width + kDy[dir];
        if (x < 0 || x >= width || y < 0 || y >= height) return s;
        const int next = y * width + x;
        return wall[next] ? s : next;
    };

    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < kGridActions; ++a) {
            if (s == goal || wall[s]) {
                mdp.p(s, a, s) = 1.0;
                continue;
            }
            mdp.p(s, a, move(s, a)) += 1.0 - slip_prob;
            for (int dir = 0; dir < kGridActions; ++dir) {
                mdp.p(s, a, move(s, dir)) += slip_prob / kGridActions;
            }
        }
    }

    mdp.start_dist.assign(n, 0.0);
    if (!starts.empty()) {
        for (int s : starts) mdp.start_dist[s] += 1.0 / static_cast<double>(starts.size());
    } else {
        int free_cells = 0;
        for (int s = 0; s < n; ++s) free_cells += (s != goal && !wall[s]) ? 1 : 0;
        if (free_cells == 0) throw InvalidSpec("gridworld has no free non-goal cell to start from");
        for (int s = 0; s < n; ++s) {
            if (s != goal && !wall[s]) mdp.start_dist[s] = 1.0 / free_cells;
        }
    }
    mdp.validate();
    return mdp;
}

void check_common(double slip_prob, double gamma, int horizon) {
    if (!(slip_prob >= 0.0 && slip_prob < 1.0)) throw InvalidSpec("slip_prob must lie in [0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1)");
    if (horizon <= 0) throw InvalidSpec("horizon must be positive");
}

}  // namespace

TabularMDP make_gridworld(int width, int height, Cell goal, double step_reward, double goal_reward,
                          double slip_prob, double gamma, int horizon) {
    if (width <= 0 || height <= 0) throw InvalidSpec("gridworld must have positive area");
    if (goal.x < 0 || goal.x >= width || goal.y < 0 || goal.y >= height) {
        throw InvalidSpec("goal cell outside the grid");
    }
    check_common(slip_prob, gamma, horizon);
    std::vector<bool> wall(static_cast<std::size_t>(width) * height, false);
    return build_grid(width, height, wall, cell_index(width, goal), {}, step_reward, goal_reward,
                      slip_prob, gamma, horizon);
}

TabularMDP make_gridworld_from_ascii(const std::vector<std::string>& rows, double step_reward,
                                     double goal_reward, double slip_prob, double gamma, int horizon) {
    if (rows.empty() || rows.front().empty()) throw InvalidSpec("gridworld must have positive area");
    check_common(slip_prob, gamma, horizon);
    const int height = static_cast<int>(rows.size());
    const int width = static_cast<int>(rows.front().size());
    std::vector<bool> wall(static_cast<std::size_t>(width) * height, false);
    std::vector<int> starts;
    int goal = -1;
    for (int y = 0; y < height; ++y) {
        if (static_cast<int>(rows[y].size()) != width) throw InvalidSpec("ragged gridworld layout");
        for (int x = 0; x < width; ++x) {
            const int s = y * width + x;
            switch (rows[y][x]) {
                case '#': wall[s] = true; break;
                case 'G':
                    if (goal >= 0) throw InvalidSpec("gridworld layout has more than one goal");
                    goal = s;
                    break;
                case 'S': starts.push_back(s); break;
                default: break;
            }
        }
    }
    if (goal < 0) throw InvalidSpec("gridworld layout has no goal 'G'");
    return build_grid(width, height, wall, goal, starts, step_reward, goal_reward, slip_prob, gamma,
                      horizon);
}

TabularMDP make_chain(int n_actions, double gamma, int horizon) {
    if (n_actions <= 0) throw InvalidSpec("chain needs at least one action");
    TabularMDP mdp;
    mdp.n_states = 2;
    mdp.n_actions = n_actions;
    mdp.transition.assign(static_cast<std::size_t>(2) * n_actions * 2, 0.0);
    for (int a = 0; a < n_actions; ++a) {
        mdp.p(0, a, a == 0 ? 1 : 0) = 1.0;
        mdp.p(1, a, 1) = 1.0;
    }
    mdp.reward = {0.0, 1.0};
    mdp.start_dist = {1.0, 0.0};
    mdp.gamma = gamma;
    mdp.horizon = horizon;
    mdp.r_min = 0.0;
    mdp.r_max = 1.0;
    mdp.validate();
    return mdp;
}

}  // namespace cvl::env
