#include "cvl/train/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "cvl/errors.hpp"
#include "cvl/train/evaluate.hpp"

namespace cvl::train {

namespace {

void check_compatible(const data::OfflineDataset& dataset, const env::Environment& env, bool same_env) {
    if (same_env && dataset.env_id != env.id()) {
        throw InvalidSpec("dataset was collected on '" + dataset.env_id + "', not '" + env.id() + "'");
    }
    if (dataset.episodes.empty()) throw InvalidSpec("dataset has no episodes");
    const env::Space ss = env.state_space();
    const env::Space as = env.action_space();
    const auto& ep = dataset.episodes.front();
    const Eigen::Index state_dim = ss.discrete ? 1 : ss.dim;
    const Eigen::Index action_dim = as.discrete ? 1 : as.dim;
    if (ep.states.front().size() != state_dim || (!ep.actions.empty() && ep.actions.front().size() != action_dim)) {
        throw InvalidSpec("dataset state/action shapes do not match the environment");
    }
}

nn::AdamConfig adam_config(const TrainConfig& c) {
    nn::AdamConfig a;
    a.learning_rate = c.learning_rate;
    a.max_grad_norm = c.max_grad_norm;
    return a;
}

class Runner {
public:
    Runner(const TrainConfig& config, const env::Environment& env, const TrainOutputs& outputs)
        : config_(config),
          env_(env),
          outputs_(outputs),
          model_(initialize_model(config, env)),
          batch_rng_(make_stream(config.seed, stream::kBatch)),
          policy_rng_(make_stream(config.seed, stream::kPolicy)),
          pretrain_rng_(make_stream(config.seed, stream::kPretrainBatch)),
          start_(std::chrono::steady_clock::now()) {
        config_.validate();
        if (!outputs_.checkpoint_dir.empty()) std::filesystem::create_directories(outputs_.checkpoint_dir);
        if (!outputs_.metrics_path.empty()) writer_.emplace(outputs_.metrics_path);
        policy_opt_ = nn::AdamState::zeros(model_.policy.net.num_params(), adam_config(config_));
    }

    void pretrain(const data::OfflineDataset& unlabeled) {
        check_compatible(unlabeled, env_, false);
        if (config_.pretrain_steps == 0) return;
        auto opt = critic::CriticOptimizer::create(model_.critic, adam_config(config_));
        for (int i = 0; i < config_.pretrain_steps; ++i) {
            MetricsRecord rec = begin_record("pretrain");
            try {
                const auto batch = data::sample_batch(unlabeled, config_.gamma, pretrain_rng_, false,
                                                      config_.episodes_per_batch);
                fill_critic(rec, critic::critic_update(model_.critic, batch, config_.lambda_partition,
                                                       config_.ema_beta, opt));
            } catch (const NumericalFault& e) {
                fault(rec, e);
            }
            finish_record(std::move(rec));
        }
        write_checkpoint("pretrain.ckpt");
    }

    void finetune(const data::OfflineDataset& labeled) {
        check_compatible(labeled, env_, true);
        if (!labeled.rewards_available) throw RewardRequired("training needs a dataset with rewards");
        if (config_.horizon > 0 && config_.horizon != labeled.horizon) {
            throw InvalidSpec("config horizon does not match the dataset horizon");
        }
        auto opt = critic::CriticOptimizer::create(model_.critic, adam_config(config_));
        write_checkpoint("epoch_0000.ckpt");
        for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
            for (int i = 0; i < config_.steps_per_epoch; ++i) step(labeled, opt);
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch);
            write_checkpoint(name);
        }
    }

    TrainResult finish() {
        TrainResult r;
        r.model = std::move(model_);
        r.metrics = std::move(metrics_);
        r.checkpoints = std::move(checkpoints_);
        r.steps = step_;
        r.faults = faults_;
        return r;
    }

private:
    void step(const data::OfflineDataset& dataset, critic::CriticOptimizer& opt) {
        MetricsRecord rec = begin_record("train");
        try {
            const auto batch =
                data::sample_batch(dataset, config_.gamma, batch_rng_, true, config_.episodes_per_batch);
            fill_critic(rec, critic::critic_gradient_step(model_.critic, batch, config_.lambda_partition, opt));

            policy::PolicyUpdateConfig pcfg{config_.boltzmann_tau, config_.lambda_bc, config_.entropy_coeff,
                                            config_.n_action_samples};
            std::optional<policy::PolicyMetrics> pm;
            if (config_.use_rff) {
                // xi is first filled at the end of the first step.
                if (model_.rff->xi_initialized) {
                    const policy::RffQ q(model_.critic, *model_.rff, config_.gamma);
                    pm = policy::policy_update(model_.policy, batch.anchor_states, batch.anchor_actions, q, pcfg,
                                               policy_opt_, policy_rng_);
                }
            } else {
                const policy::DirectQ q(model_.critic,
                                        rff::encode_futures(model_.critic, batch.positives, *batch.future_rewards),
                                        config_.gamma);
                pm = policy::policy_update(model_.policy, batch.anchor_states, batch.anchor_actions, q, pcfg,
                                           policy_opt_, policy_rng_);
            }
            if (pm) {
                rec.policy_kl_loss = pm->kl_loss;
                rec.bc_loss = pm->bc_loss;
                rec.mean_q = pm->mean_q;
                rec.policy_grad_norm = pm->grad_norm;
            }

            critic::ema_update(model_.critic, config_.ema_beta);
            if (config_.use_rff) {
                const nn::Mat psi = critic::embed_futures(model_.critic, critic::encode_states(model_.critic, batch.positives),
                                                          critic::PsiNet::Target);
                rff::update_xi(*model_.rff, rff::rff_map(*model_.rff, psi), batch.future_rewards);
            }
        } catch (const NumericalFault& e) {
            fault(rec, e);
        }
        if (config_.eval_every > 0 && train_steps_ % config_.eval_every == 0) {
            const auto seed = config_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(step_);
            const ReturnStats stats = evaluate(env_, model_.policy, config_.eval_episodes, seed);
            rec.eval_return_mean = stats.mean;
            rec.eval_return_std = stats.std;
        }
        finish_record(std::move(rec));
    }

    MetricsRecord begin_record(const char* phase) {
        ++step_;
        if (std::string(phase) == "train") ++train_steps_;
        MetricsRecord rec;
        rec.step = step_;
        rec.phase = phase;
        return rec;
    }

    static void fill_critic(MetricsRecord& rec, const critic::CriticMetrics& m) {
        rec.critic_loss = m.loss;
        rec.infonce = m.infonce;
        rec.partition_reg = m.partition_reg;
        rec.positive_logit_mean = m.positive_logit_mean;
        rec.phi_grad_norm = m.phi_grad_norm;
        rec.psi_grad_norm = m.psi_grad_norm;
    }

    void fault(MetricsRecord& rec, const NumericalFault& e) {
        ++faults_;
        rec.faulted = true;
        rec.fault_message = e.what();
        const double limit = std::max(1.0, config_.max_fault_fraction * static_cast<double>(step_));
        if (static_cast<double>(faults_) > limit) {
            finish_record(std::move(rec));
            throw NumericalFault("aborting: " + std::to_string(faults_) + " of " + std::to_string(step_) +
                                 " steps faulted; last fault: " + e.what());
        }
    }

    void finish_record(MetricsRecord rec) {
        if (config_.log_wall_time) {
            rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        }
        if (writer_) writer_->write(rec);
        metrics_.push_back(std::move(rec));
    }

    void write_checkpoint(const std::string& name) {
        if (outputs_.checkpoint_dir.empty()) return;
        const std::string path = (std::filesystem::path(outputs_.checkpoint_dir) / name).string();
        save_checkpoint({model_, config_.hash(), step_}, path);
        checkpoints_.push_back(path);
    }

    TrainConfig config_;
    const env::Environment& env_;
    TrainOutputs outputs_;
    Model model_;
    nn::AdamState policy_opt_;
    Rng batch_rng_;
    Rng policy_rng_;
    Rng pretrain_rng_;
    std::chrono::steady_clock::time_point start_;
    std::optional<MetricsWriter> writer_;
    std::vector<MetricsRecord> metrics_;
    std::vector<std::string> checkpoints_;
    long long step_ = 0;
    long long train_steps_ = 0;
    long long faults_ = 0;
};

}  // namespace

Model initialize_model(const TrainConfig& config, const env::Environment& env) {
    config.validate();
    Rng init = make_stream(config.seed, stream::kInit);
    Model m;
    m.env_id = env.id();
    critic::CriticConfig cc;
    cc.hidden = config.critic_hidden;
    cc.latent_dim = config.latent_dim;
    cc.densenet = config.densenet;
    cc.layernorm = config.layernorm;
    cc.l2_normalize = config.l2_normalize;
    cc.temperature = config.tau;
    m.critic = critic::make_critic(cc, env.state_featurizer(), env.action_featurizer(), init);
    policy::PolicyConfig pc;
    pc.hidden = config.policy_hidden;
    pc.densenet = config.densenet;
    pc.layernorm = config.layernorm;
    pc.log_std_min = config.log_std_min;
    pc.log_std_max = config.log_std_max;
    m.policy = policy::make_policy(pc, env.state_featurizer(), env.action_space(), init);
    if (config.use_rff) {
        Rng rff_rng = make_stream(config.seed, stream::kRff);
        m.rff = rff::make_rff(config.latent_dim, config.rff_dim, config.xi_ema, rff_rng, config.tau);
    }
    return m;
}

TrainResult train(const TrainConfig& config, const data::OfflineDataset& dataset, const env::Environment& env,
                  const TrainOutputs& outputs) {
    Runner runner(config, env, outputs);
    runner.finetune(dataset);
    return runner.finish();
}

TrainResult pretrain_then_finetune(const TrainConfig& config, const data::OfflineDataset& unlabeled,
                                   const data::OfflineDataset& labeled, const env::Environment& env,
                                   const TrainOutputs& outputs) {
    Runner runner(config, env, outputs);
    runner.pretrain(unlabeled);
    runner.finetune(labeled);
    return runner.finish();
}

}  // namespace cvl::train
