#include <algorithm>
#include <cmath>

#include "cvl/errors.hpp"
#include "cvl/oracle/oracle.hpp"

namespace cvl::oracle {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_policy(const env::TabularMDP& mdp, const PolicyTable& policy) {
    if (policy.rows() != mdp.n_states || policy.cols() != mdp.n_actions) {
        throw ShapeError("policy table must be n_states x n_actions");
    }
    for (int s = 0; s < mdp.n_states; ++s) {
        if ((policy.row(s).array() < 0.0).any() || std::abs(policy.row(s).sum() - 1.0) > 1e-9) {
            throw InvalidSpec("policy table row is not a distribution");
        }
    }
}

// Rows indexed by s * n_actions + a, columns by s'.
MatrixXd transition_rows(const env::TabularMDP& mdp) {
    const int n = mdp.n_states;
    MatrixXd p(n * mdp.n_actions, n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            for (int next = 0; next < n; ++next) p(s * mdp.n_actions + a, next) = mdp.p(s, a, next);
        }
    }
    return p;
}

MatrixXd policy_transition(const env::TabularMDP& mdp, const PolicyTable& policy, const MatrixXd& rows) {
    MatrixXd m = MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) m.row(s) += policy(s, a) * rows.row(s * mdp.n_actions + a);
    }
    return m;
}

VectorXd reward_vec(const env::TabularMDP& mdp) {
    return Eigen::Map<const VectorXd>(mdp.reward.data(), mdp.n_states);
}

MatrixXd unflatten_q(const VectorXd& flat, const env::TabularMDP& mdp) {
    MatrixXd q(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) q(s, a) = flat(s * mdp.n_actions + a);
    }
    return q;
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidSpec("gamma must lie in [0, 1) for the occupancy solve");
}

}  // namespace

OccupancyTable exact_occupancy(const env::TabularMDP& mdp, const PolicyTable& policy, std::optional<int> horizon) {
    check_gamma(mdp.gamma);
    check_policy(mdp, policy);
    if (horizon && *horizon <= 0) throw InvalidSpec("horizon must be positive");
    const double g = mdp.gamma;
    const MatrixXd rows = transition_rows(mdp);
    const MatrixXd m = policy_transition(mdp, policy, rows);

    OccupancyTable out;
    out.n_states = mdp.n_states;
    out.n_actions = mdp.n_actions;
    out.gamma = g;
    out.horizon = horizon;

    MatrixXd d;
    if (!horizon) {
        const MatrixXd system = (MatrixXd::Identity(mdp.n_states, mdp.n_states) - g * m).transpose();
        Eigen::PartialPivLU<MatrixXd> lu(system);
        const double rcond = lu.rcond();
        out.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
        out.ill_conditioned = out.condition_estimate > 1e8;
        d = (1.0 - g) * lu.solve(rows.transpose()).transpose();
    } else {
        MatrixXd step = rows;
        d = MatrixXd::Zero(rows.rows(), rows.cols());
        double weight = 1.0;
        for (int k = 1; k <= *horizon; ++k) {
            d += weight * step;
            weight *= g;
            if (k < *horizon) step = step * m;
        }
        d *= (1.0 - g) / (1.0 - std::pow(g, *horizon));
    }
    out.occupancy.resize(static_cast<std::size_t>(d.size()));
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            out.occupancy[static_cast<std::size_t>(r) * d.cols() + c] = std::max(0.0, d(r, c));
        }
    }
    return out;
}

MatrixXd exact_q(const env::TabularMDP& mdp, const PolicyTable& policy, std::optional<int> horizon) {
    const OccupancyTable occ = exact_occupancy(mdp, policy, horizon);
    const double g = mdp.gamma;
    const double scale = (horizon ? 1.0 - std::pow(g, *horizon) : 1.0) / (1.0 - g);
    MatrixXd q(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            double acc = 0.0;
            for (int next = 0; next < mdp.n_states; ++next) acc += occ.at(s, a, next) * mdp.reward[next];
            q(s, a) = scale * acc;
        }
    }
    return q;
}

MatrixXd bellman_q(const env::TabularMDP& mdp, const PolicyTable& policy, std::optional<int> horizon) {
    check_gamma(mdp.gamma);
    check_policy(mdp, policy);
    const double g = mdp.gamma;
    const MatrixXd rows = transition_rows(mdp);
    const MatrixXd m = policy_transition(mdp, policy, rows);
    const VectorXd r = reward_vec(mdp);
    if (!horizon) {
        const MatrixXd system = MatrixXd::Identity(mdp.n_states, mdp.n_states) - g * m;
        const VectorXd v = system.partialPivLu().solve(m * r);
        return unflatten_q(rows * (r + g * v), mdp);
    }
    VectorXd v = VectorXd::Zero(mdp.n_states);
    VectorXd q_flat;
    for (int h = 1; h <= *horizon; ++h) {
        q_flat = rows * (r + g * v);
        const MatrixXd q = unflatten_q(q_flat, mdp);
        v = (q.array() * policy.array()).rowwise().sum();
    }
    return unflatten_q(q_flat, mdp);
}

RatioTable exact_ratio(const OccupancyTable& occ, const MatrixXd& anchor_weights) {
    if (anchor_weights.rows() != occ.n_states || anchor_weights.cols() != occ.n_actions) {
        throw ShapeError("anchor weights must be n_states x n_actions");
    }
    if ((anchor_weights.array() < 0.0).any()) throw InvalidSpec("anchor weights must be non-negative");
    const double total = anchor_weights.sum();
    if (!(total > 0.0)) throw InvalidSpec("anchor weights are all zero");

    RatioTable out;
    out.n_states = occ.n_states;
    out.n_actions = occ.n_actions;
    out.marginal = VectorXd::Zero(occ.n_states);
    for (int s = 0; s < occ.n_states; ++s) {
        for (int a = 0; a < occ.n_actions; ++a) {
            const double w = anchor_weights(s, a) / total;
            if (w == 0.0) continue;
            for (int next = 0; next < occ.n_states; ++next) out.marginal(next) += w * occ.at(s, a, next);
        }
    }
    out.supported.resize(occ.n_states);
    for (int next = 0; next < occ.n_states; ++next) out.supported[next] = out.marginal(next) > 0.0;
    out.ratio.assign(occ.occupancy.size(), 0.0);
    for (int s = 0; s < occ.n_states; ++s) {
        for (int a = 0; a < occ.n_actions; ++a) {
            for (int next = 0; next < occ.n_states; ++next) {
                if (!out.supported[next]) continue;
                out.ratio[(static_cast<std::size_t>(s) * occ.n_actions + a) * occ.n_states + next] =
                    occ.at(s, a, next) / out.marginal(next);
            }
        }
    }
    return out;
}

ValueIterationResult value_iteration(const env::TabularMDP& mdp, double tol, int max_iters) {
    check_gamma(mdp.gamma);
    const MatrixXd rows = transition_rows(mdp);
    const VectorXd r = reward_vec(mdp);
    ValueIterationResult out;
    out.v = VectorXd::Zero(mdp.n_states);
    for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
        out.q = unflatten_q(rows * (r + mdp.gamma * out.v), mdp);
        const VectorXd next_v = out.q.rowwise().maxCoeff();
        const double delta = (next_v - out.v).cwiseAbs().maxCoeff();
        out.v = next_v;
        if (delta < tol) break;
    }
    return out;
}

std::vector<int> greedy_actions(const MatrixXd& q) {
    std::vector<int> out(q.rows(), 0);
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, out[s])) out[s] = static_cast<int>(a);
        }
    }
    return out;
}

double expected_return(const env::TabularMDP& mdp, const PolicyTable& policy, int steps) {
    check_policy(mdp, policy);
    const MatrixXd m = policy_transition(mdp, policy, transition_rows(mdp));
    const VectorXd r = reward_vec(mdp);
    Eigen::RowVectorXd dist = Eigen::Map<const VectorXd>(mdp.start_dist.data(), mdp.n_states).transpose();
    double total = 0.0;
    for (int t = 0; t < steps; ++t) {
        dist = dist * m;
        total += dist.dot(r);
    }
    return total;
}

}  // namespace cvl::oracle
