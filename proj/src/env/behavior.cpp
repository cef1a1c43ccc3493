#include "cvl/env/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

namespace cvl::env {

Policy table_policy(Eigen::MatrixXd table) {
    return [table = std::move(table)](const Vec& state, Rng& rng) {
        const auto s = static_cast<Eigen::Index>(state(0));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        double acc = 0.0;
        Eigen::Index last = 0;
        for (Eigen::Index a = 0; a < table.cols(); ++a) {
            if (table(s, a) > 0.0) last = a;
            acc += table(s, a);
            if (u < acc) return scalar_vec(static_cast<double>(a));
        }
        return scalar_vec(static_cast<double>(last));
    };
}

BehaviorKind parse_behavior_kind(const std::string& name) {
    if (name == "epsilon_soft_tabular") return BehaviorKind::EpsilonSoftTabular;
    if (name == "scripted_mountain_car") return BehaviorKind::ScriptedMountainCar;
    if (name == "uniform_random") return BehaviorKind::UniformRandom;
    throw InvalidSpec("unknown behavior kind: " + name);
}

BehaviorPolicy behavior_policy(BehaviorKind kind, const BehaviorParams& params, const Environment& env) {
    BehaviorPolicy out;
    std::ostringstream desc;
    desc.precision(17);
    switch (kind) {
        case BehaviorKind::EpsilonSoftTabular: {
            if (!(params.epsilon >= 0.0 && params.epsilon <= 1.0)) throw InvalidSpec("epsilon must lie in [0, 1]");
            const auto* tab = dynamic_cast<const TabularEnv*>(&env);
            if (tab == nullptr) throw InvalidSpec("epsilon_soft_tabular requires a tabular environment");
            const auto& mdp = tab->mdp();
            const auto greedy = oracle::greedy_actions(oracle::value_iteration(mdp).q);
            Eigen::MatrixXd table = Eigen::MatrixXd::Constant(mdp.n_states, mdp.n_actions,
                                                              params.epsilon / mdp.n_actions);
            for (int s = 0; s < mdp.n_states; ++s) table(s, greedy[s]) += 1.0 - params.epsilon;
            out.table = table;
            out.act = table_policy(table);
            desc << "epsilon_soft_tabular(epsilon=" << params.epsilon << ")";
            break;
        }
        case BehaviorKind::ScriptedMountainCar: {
            if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma)) throw InvalidSpec("sigma must be >= 0");
            if (env.action_space().discrete || env.state_space().dim != 2) {
                throw InvalidSpec("scripted_mountain_car requires the mountain car environment");
            }
            const double sigma = params.sigma;
            out.act = [sigma](const Vec& state, Rng& rng) {
                const double push = state(1) >= 0.0 ? 1.0 : -1.0;
                double noise = 0.0;
                if (sigma > 0.0) {
                    std::normal_distribution<double> normal(0.0, sigma);
                    noise = normal(rng);
                }
                return scalar_vec(std::clamp(push + noise, -1.0, 1.0));
            };
            desc << "scripted_mountain_car(sigma=" << sigma << ")";
            break;
        }
        case BehaviorKind::UniformRandom: {
            const Space as = env.action_space();
            if (as.discrete) {
                const int n = as.n;
                out.act = [n](const Vec&, Rng& rng) {
                    std::uniform_int_distribution<int> pick(0, n - 1);
                    return scalar_vec(pick(rng));
                };
                if (const auto* tab = dynamic_cast<const TabularEnv*>(&env)) {
                    out.table = Eigen::MatrixXd::Constant(tab->mdp().n_states, n, 1.0 / n);
                }
            } else {
                const Vec low = as.low;
                const Vec high = as.high;
                out.act = [low, high](const Vec&, Rng& rng) {
                    std::uniform_real_distribution<double> unif(0.0, 1.0);
                    Vec a(low.size());
                    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = low(i) + (high(i) - low(i)) * unif(rng);
                    return a;
                };
            }
            desc << "uniform_random";
            break;
        }
    }
    out.descriptor = desc.str();
    return out;
}

}  // namespace cvl::env
