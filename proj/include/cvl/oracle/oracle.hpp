#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cvl/env/tabular_mdp.hpp"

namespace cvl::oracle {

/// pi(a|s), n_states x n_actions, rows sum to one.
using PolicyTable = Eigen::MatrixXd;

/// Discounted occupancy d[s][a][s'] = (1-g) sum_{k>=1} g^{k-1} P(S_k = s' | s, a),
/// renormalised by 1/(1-g^H) when a finite horizon H is used.
struct OccupancyTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> occupancy;
    double gamma = 0.0;
    std::optional<int> horizon;  // nullopt: infinite horizon
    double condition_estimate = 1.0;  // of (I - g M^pi); 1 for finite horizon
    bool ill_conditioned = false;     // condition_estimate > 1e8

    double at(int s, int a, int next) const {
        return occupancy[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
    }
};

OccupancyTable exact_occupancy(const env::TabularMDP& mdp, const PolicyTable& policy,
                               std::optional<int> horizon = std::nullopt);

/// Q from the occupancy form, Q(s,a) = c/(1-g) sum_s' d[s][a][s'] r[s'] with
/// c = 1 (infinite) or 1 - g^H (finite). Uses the g^{k-1} weighting, so
/// Q(s,a) = E[r(S_1) + g r(S_2) + ...].
Eigen::MatrixXd exact_q(const env::TabularMDP& mdp, const PolicyTable& policy,
                        std::optional<int> horizon = std::nullopt);

/// Independent route: Bellman linear solve (infinite) or backward recursion (finite).
Eigen::MatrixXd bellman_q(const env::TabularMDP& mdp, const PolicyTable& policy,
                          std::optional<int> horizon = std::nullopt);

struct RatioTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> ratio;    // d[s][a][s'] / m[s'], 0 where unsupported
    Eigen::VectorXd marginal;     // m[s'] = sum_{s,a} w[s,a] d[s][a][s']
    std::vector<bool> supported;  // m[s'] > 0

    double at(int s, int a, int next) const {
        return ratio[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
    }
};

/// anchor_weights: n_states x n_actions non-negative weights (normalised internally).
RatioTable exact_ratio(const OccupancyTable& occupancy, const Eigen::MatrixXd& anchor_weights);

struct ValueIterationResult {
    Eigen::MatrixXd q;
    Eigen::VectorXd v;
    int iterations = 0;
};

/// Optimal Q under the same g^{k-1} convention: Q(s,a) = sum_s' P (r[s'] + g V(s')).
ValueIterationResult value_iteration(const env::TabularMDP& mdp, double tol = 1e-12, int max_iters = 100000);

/// argmax per row, ties broken by the lowest index.
std::vector<int> greedy_actions(const Eigen::MatrixXd& q);

/// Expected undiscounted return of `policy` over `steps` transitions from the start distribution.
double expected_return(const env::TabularMDP& mdp, const PolicyTable& policy, int steps);

// ---- statistics ----

/// Spearman rank correlation with average ranks for ties. Throws InvalidSpec
/// for mismatched lengths or fewer than two points. Returns 0 when either
/// input is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Pearson goodness-of-fit of observed counts against probabilities. Adjacent
/// trailing bins are merged until every expected count is at least 5.
ChiSquareResult chi_square_gof(std::span<const long long> counts, std::span<const double> probs);

}  // namespace cvl::oracle
