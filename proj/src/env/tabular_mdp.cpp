#include "cvl/env/tabular_mdp.hpp"

#include <cmath>
#include <string>

#include "cvl/errors.hpp"

namespace cvl::env {

void TabularMDP::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw InvalidSpec("MDP needs at least one state and action");
    const auto ns = static_cast<std::size_t>(n_states);
    if (transition.size() != ns * n_actions * ns || reward.size() != ns || start_dist.size() != ns) {
        throw InvalidSpec("MDP array sizes do not match n_states/n_actions");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1)");
    if (horizon <= 0) throw InvalidSpec("horizon must be positive");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (int n = 0; n < n_states; ++n) {
                const double v = p(s, a, n);
                if (!(v >= 0.0)) throw InvalidSpec("negative transition probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw InvalidSpec("transition row (" + std::to_string(s) + ", " + std::to_string(a) +
                                  ") sums to " + std::to_string(sum));
            }
        }
    }
    double start_sum = 0.0;
    for (double v : start_dist) {
        if (!(v >= 0.0)) throw InvalidSpec("negative start probability");
        start_sum += v;
    }
    if (std::abs(start_sum - 1.0) > 1e-9) throw InvalidSpec("start distribution does not sum to 1");
    for (double r : reward) {
        if (!(r >= r_min && r <= r_max)) throw InvalidSpec("reward outside [r_min, r_max]");
    }
}

}  // namespace cvl::env
