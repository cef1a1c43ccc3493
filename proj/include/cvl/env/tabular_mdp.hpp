#pragma once

#include <string>
#include <vector>

namespace cvl::env {

/// Finite MDP with state-based rewards: the reward for a transition is the
/// reward of the state it lands in.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;  // row-major [s][a][s']
    std::vector<double> reward;      // r[s]
    std::vector<double> start_dist;
    double gamma = 0.9;
    int horizon = 1;
    double r_min = 0.0;
    double r_max = 0.0;

    double p(int s, int a, int next) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
    }
    double& p(int s, int a, int next) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
    }

    /// Throws InvalidSpec when a transition row or the start distribution is
    /// not a probability vector (1e-9), or a reward leaves [r_min, r_max].
    void validate() const;
};

struct Cell {
    int x = 0;
    int y = 0;
};

// Actions: 0 = up (y-1), 1 = right (x+1), 2 = down (y+1), 3 = left (x-1).
inline constexpr int kGridActions = 4;

/// 4-action gridworld. With probability slip_prob the move direction is drawn
/// uniformly from the four directions instead of the intended one. Moves into
/// the border or a wall leave the agent in place; the goal is absorbing.
/// Start distribution is uniform over non-goal free cells unless `start` is set.
TabularMDP make_gridworld(int width, int height, Cell goal, double step_reward, double goal_reward,
                          double slip_prob, double gamma, int horizon);

/// Same as make_gridworld but with a layout: '#' wall, 'G' goal, 'S' start
/// (optional, several allowed), anything else free. Rows are y, columns x.
TabularMDP make_gridworld_from_ascii(const std::vector<std::string>& rows, double step_reward,
                                     double goal_reward, double slip_prob, double gamma, int horizon);

/// Two-state chain s0 -> s1 with s1 absorbing and r = [0, 1]. Action 0 advances,
/// any other action stays in s0. Start is s0.
TabularMDP make_chain(int n_actions, double gamma, int horizon);

inline int cell_index(int width, Cell c) { return c.y * width + c.x; }

}  // namespace cvl::env
