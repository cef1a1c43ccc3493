#include "cvl/train/diagnostics.hpp"

#include <cmath>
#include <vector>

#include "cvl/errors.hpp"
#include "cvl/rff/q_estimators.hpp"

namespace cvl::train {

using nn::Vec;

namespace {

struct Pair {
    int s;
    int a;
};

std::vector<Pair> dataset_pairs(const Eigen::MatrixXd& counts) {
    std::vector<Pair> out;
    for (int s = 0; s < counts.rows(); ++s) {
        for (int a = 0; a < counts.cols(); ++a) {
            if (counts(s, a) > 0.0) out.push_back({s, a});
        }
    }
    return out;
}

Vec index_vec(int i) { return env::scalar_vec(static_cast<double>(i)); }

}  // namespace

oracle::PolicyTable policy_table(const policy::PolicyParams& policy, int n_states) {
    std::vector<Vec> states;
    for (int s = 0; s < n_states; ++s) states.push_back(index_vec(s));
    return policy::action_probabilities(policy, states).transpose();
}

RatioRecovery ratio_recovery(const critic::CriticParams& critic, const data::OfflineDataset& dataset,
                             const env::TabularMDP& mdp, const oracle::PolicyTable& behavior) {
    const Eigen::MatrixXd counts = data::anchor_counts(dataset, mdp.n_states, mdp.n_actions);
    const auto occ = oracle::exact_occupancy(mdp, behavior);
    const auto ratio = oracle::exact_ratio(occ, counts);
    const auto pairs = dataset_pairs(counts);

    std::vector<Vec> anchor_s, anchor_a, states;
    for (const auto& p : pairs) {
        anchor_s.push_back(index_vec(p.s));
        anchor_a.push_back(index_vec(p.a));
    }
    for (int s = 0; s < mdp.n_states; ++s) states.push_back(index_vec(s));
    const nn::Mat phi = critic::embed_anchors(critic, critic::encode_anchors(critic, anchor_s, anchor_a));
    const nn::Mat psi = critic::embed_futures(critic, critic::encode_states(critic, states), critic::PsiNet::Online);
    const nn::Mat logits = phi.transpose() * psi / critic.infonce_temperature;

    std::vector<double> learned, exact;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (int next = 0; next < mdp.n_states; ++next) {
            const double r = ratio.at(pairs[i].s, pairs[i].a, next);
            if (r <= 0.0) continue;
            learned.push_back(std::exp(logits(static_cast<Eigen::Index>(i), next)));
            exact.push_back(r);
        }
    }
    return {oracle::spearman(learned, exact), learned.size()};
}

QTopology q_topology(const critic::CriticParams& critic, const data::OfflineDataset& dataset,
                     const env::TabularMDP& mdp, const oracle::PolicyTable& behavior, double gamma, int n_batches,
                     int episodes_per_batch, std::uint64_t seed) {
    if (n_batches < 1) throw InvalidSpec("need at least one batch of future samples");
    const Eigen::MatrixXd counts = data::anchor_counts(dataset, mdp.n_states, mdp.n_actions);
    const auto pairs = dataset_pairs(counts);
    const Eigen::MatrixXd q_exact = oracle::exact_q(mdp, behavior);
    const auto ratio = oracle::exact_ratio(oracle::exact_occupancy(mdp, behavior), counts);

    Rng rng = make_stream(seed, stream::kBatch);
    std::vector<Vec> futures;
    std::vector<double> rewards;
    for (int b = 0; b < n_batches; ++b) {
        const auto batch = data::sample_batch(dataset, gamma, rng, true, episodes_per_batch);
        futures.insert(futures.end(), batch.positives.begin(), batch.positives.end());
        rewards.insert(rewards.end(), batch.future_rewards->begin(), batch.future_rewards->end());
    }

    std::vector<Vec> anchor_s, anchor_a;
    for (const auto& p : pairs) {
        anchor_s.push_back(index_vec(p.s));
        anchor_a.push_back(index_vec(p.a));
    }
    const rff::FutureSamples fs = rff::encode_futures(critic, futures, rewards);
    const nn::Mat phi = critic::embed_anchors(critic, critic::encode_anchors(critic, anchor_s, anchor_a));
    const Vec q_critic = rff::q_nce_direct_batch(phi, fs, critic.infonce_temperature, gamma);

    std::vector<double> qc, qr, qe;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < futures.size(); ++j) {
            acc += rewards[j] * ratio.at(pairs[i].s, pairs[i].a, static_cast<int>(futures[j][0]));
        }
        qr.push_back(acc / (static_cast<double>(futures.size()) * (1.0 - gamma)));
        qc.push_back(q_critic[static_cast<Eigen::Index>(i)]);
        qe.push_back(q_exact(pairs[i].s, pairs[i].a));
    }
    return {oracle::spearman(qc, qe), oracle::spearman(qr, qe), pairs.size()};
}

double improvement_fraction(const policy::PolicyParams& policy, const data::OfflineDataset& dataset,
                            const env::TabularMDP& mdp, const oracle::PolicyTable& behavior, double tolerance) {
    const Eigen::MatrixXd counts = data::anchor_counts(dataset, mdp.n_states, mdp.n_actions);
    const auto pairs = dataset_pairs(counts);
    if (pairs.empty()) throw InvalidSpec("dataset has no state-action pairs");
    const Eigen::MatrixXd q_pi = oracle::exact_q(mdp, policy_table(policy, mdp.n_states));
    const Eigen::MatrixXd q_mu = oracle::exact_q(mdp, behavior);
    const double slack = tolerance * (mdp.r_max - mdp.r_min);
    std::size_t ok = 0;
    for (const auto& p : pairs) {
        if (q_pi(p.s, p.a) >= q_mu(p.s, p.a) - slack) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

}  // namespace cvl::train
