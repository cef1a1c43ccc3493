#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvl/env/tabular_mdp.hpp"
#include "cvl/rng.hpp"

namespace cvl::env {

using Vec = Eigen::VectorXd;

/// Discrete spaces carry the element index as a 1-vector; continuous spaces
/// carry raw coordinates bounded by [low, high].
struct Space {
    bool discrete = true;
    int n = 0;    // number of elements (discrete)
    int dim = 1;  // raw vector length
    Vec low;
    Vec high;
};

/// Maps raw states/actions to network inputs: one-hot for discrete spaces,
/// (raw - shift) * scale for continuous ones.
struct Featurizer {
    enum class Kind { OneHot, Affine };
    Kind kind = Kind::OneHot;
    int n = 0;
    Vec shift;
    Vec scale;

    int output_dim() const { return kind == Kind::OneHot ? n : static_cast<int>(shift.size()); }
    void encode_into(const Vec& raw, Eigen::Ref<Vec> out) const;
    Vec operator()(const Vec& raw) const;
};

struct StepResult {
    Vec next_state;
    double reward = 0.0;
    bool done = false;
};

/// Value-semantic environment: all state lives in the vectors passed in and out.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string id() const = 0;
    virtual Space state_space() const = 0;
    virtual Space action_space() const = 0;
    virtual int horizon() const = 0;
    virtual double gamma() const = 0;
    virtual Vec reset(Rng& rng) const = 0;
    /// `done` is true only for terminal states; rollout() enforces the horizon.
    virtual StepResult step(const Vec& state, const Vec& action, Rng& rng) const = 0;
    virtual Featurizer state_featurizer() const = 0;
    virtual Featurizer action_featurizer() const = 0;
    virtual std::unique_ptr<Environment> clone() const = 0;
};

class TabularEnv final : public Environment {
public:
    TabularEnv(std::string id, TabularMDP mdp);

    const TabularMDP& mdp() const { return mdp_; }

    std::string id() const override { return id_; }
    Space state_space() const override;
    Space action_space() const override;
    int horizon() const override { return mdp_.horizon; }
    double gamma() const override { return mdp_.gamma; }
    Vec reset(Rng& rng) const override;
    StepResult step(const Vec& state, const Vec& action, Rng& rng) const override;
    Featurizer state_featurizer() const override;
    Featurizer action_featurizer() const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<TabularEnv>(*this); }

private:
    std::string id_;
    TabularMDP mdp_;
};

/// Continuous Mountain Car: velocity += 0.0015 a - 0.0025 cos(3 x), clamped to
/// [-0.07, 0.07]; position clamped to [-1.2, 0.6] with an inelastic left wall.
/// Reward of a step is -0.1 a^2, plus 100 when the goal is reached.
class MountainCarEnv final : public Environment {
public:
    static constexpr double kMinPosition = -1.2;
    static constexpr double kMaxPosition = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kPower = 0.0015;
    static constexpr double kGoalReward = 100.0;
    static constexpr double kActionCost = 0.1;

    explicit MountainCarEnv(int horizon = 999, double goal_position = 0.45, double gamma = 0.99);

    double goal_position() const { return goal_position_; }

    std::string id() const override { return "mountain_car"; }
    Space state_space() const override;
    Space action_space() const override;
    int horizon() const override { return horizon_; }
    double gamma() const override { return gamma_; }
    /// Position ~ U(-0.6, -0.4), velocity 0.
    Vec reset(Rng& rng) const override;
    StepResult step(const Vec& state, const Vec& action, Rng& rng) const override;
    Featurizer state_featurizer() const override;
    Featurizer action_featurizer() const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<MountainCarEnv>(*this); }

private:
    int horizon_;
    double goal_position_;
    double gamma_;
};

struct Trajectory {
    std::vector<Vec> states;   // length T + 1
    std::vector<Vec> actions;  // length T
    std::vector<double> rewards;  // rewards[t] = r(states[t + 1])
    bool terminal = false;

    std::size_t length() const { return actions.size(); }
};

using Policy = std::function<Vec(const Vec& state, Rng& rng)>;

/// Runs `policy` from env.reset() for at most `max_len` transitions, stopping
/// early on a terminal state. Requires max_len <= env.horizon().
Trajectory rollout(const Environment& env, const Policy& policy, Rng& rng, int max_len);

/// Same, from a given initial state.
Trajectory rollout_from(const Environment& env, const Vec& start, const Policy& policy, Rng& rng,
                        int max_len);

inline Vec scalar_vec(double v) {
    Vec out(1);
    out(0) = v;
    return out;
}

}  // namespace cvl::env
