// Command-line front end: dataset generation, training, evaluation and
// metrics export.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvl/data/dataset.hpp"
#include "cvl/env/behavior.hpp"
#include "cvl/env/env_config.hpp"
#include "cvl/errors.hpp"
#include "cvl/kv.hpp"
#include "cvl/train/config.hpp"
#include "cvl/train/evaluate.hpp"
#include "cvl/train/metrics.hpp"
#include "cvl/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace cvl;

namespace {

struct GenDataArgs {
    std::string env = "gridworld5x5";
    int episodes = 100;
    std::uint64_t seed = 0;
    std::string behavior;
    double epsilon = 0.1;
    double sigma = 0.3;
    bool strip = false;
    std::string out = "dataset.txt";
};

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::string dataset;
    std::string unlabeled;
    std::string env;
    std::string out = "run";
};

struct EvalArgs {
    std::string checkpoint;
    std::string env;
    int episodes = 10;
    std::uint64_t seed = 0;
};

struct ExportArgs {
    std::string metrics;
    std::string fields = "critic_loss,partition_reg,policy_kl_loss,bc_loss,mean_q,eval_return_mean";
    std::string delimiter = ",";
    std::string out;
};

std::string default_behavior(const env::Environment& e) {
    return e.state_space().discrete ? "epsilon_soft_tabular" : "scripted_mountain_car";
}

int run_gen_data(const GenDataArgs& a) {
    const auto e = env::make_env(a.env);
    const std::string kind = a.behavior.empty() ? default_behavior(*e) : a.behavior;
    env::BehaviorParams params;
    params.epsilon = a.epsilon;
    params.sigma = a.sigma;
    const auto behavior = env::behavior_policy(env::parse_behavior_kind(kind), params, *e);
    data::OfflineDataset ds = data::generate_dataset(*e, behavior, a.episodes, a.seed);
    if (a.strip) ds = data::strip_rewards(std::move(ds));
    data::save(ds, a.out);
    std::cout << "wrote " << ds.episodes.size() << " episodes (" << ds.n_transitions() << " transitions) to " << a.out
              << "\n";
    return 0;
}

train::TrainConfig load_config(const TrainArgs& a) {
    KeyValues kv = a.config.empty() ? KeyValues() : KeyValues::load(a.config);
    for (const auto& item : a.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidSpec("override must look like key=value: " + item);
        kv.set(item.substr(0, eq), item.substr(eq + 1));
    }
    if (a.seed) kv.set("seed", std::to_string(*a.seed));
    if (!a.dataset.empty()) kv.set("dataset", a.dataset);
    if (!a.unlabeled.empty()) kv.set("unlabeled_dataset", a.unlabeled);
    if (!a.env.empty()) kv.set("env", a.env);
    return train::TrainConfig::from_kv(kv);
}

void report(const train::TrainResult& r, const std::string& out) {
    std::cout << "steps " << r.steps << ", faults " << r.faults << ", checkpoints " << r.checkpoints.size()
              << ", metrics " << (fs::path(out) / "metrics.jsonl").string() << "\n";
    for (auto it = r.metrics.rbegin(); it != r.metrics.rend(); ++it) {
        if (it->eval_return_mean) {
            std::cout << "last evaluation at step " << it->step << ": return " << *it->eval_return_mean << " +- "
                      << *it->eval_return_std << "\n";
            break;
        }
    }
}

int run_train(const TrainArgs& a, bool pretrain) {
    const train::TrainConfig cfg = load_config(a);
    if (cfg.dataset.empty()) throw InvalidSpec("no dataset given (config key 'dataset' or --dataset)");
    const data::OfflineDataset labeled = data::load(cfg.dataset);
    const auto e = env::make_env(cfg.env.empty() ? labeled.env_id : cfg.env);
    fs::create_directories(a.out);
    {
        std::ofstream resolved(fs::path(a.out) / "config.resolved");
        const KeyValues kv = cfg.to_kv();
        for (const auto& [k, v] : kv.entries()) resolved << k << " = " << v << "\n";
    }
    train::TrainOutputs outputs{(fs::path(a.out) / "checkpoints").string(), (fs::path(a.out) / "metrics.jsonl").string()};
    train::TrainResult result;
    if (pretrain) {
        if (cfg.unlabeled_dataset.empty()) {
            throw InvalidSpec("no unlabeled dataset given (config key 'unlabeled_dataset' or --unlabeled)");
        }
        const data::OfflineDataset unlabeled = data::load(cfg.unlabeled_dataset);
        result = train::pretrain_then_finetune(cfg, unlabeled, labeled, *e, outputs);
    } else {
        result = train::train(cfg, labeled, *e, outputs);
    }
    report(result, a.out);
    return 0;
}

int run_eval(const EvalArgs& a) {
    std::string env_name = a.env;
    if (env_name.empty()) env_name = train::load_checkpoint(a.checkpoint).model.env_id;
    const auto e = env::make_env(env_name);
    const auto stats = train::evaluate_checkpoint(a.checkpoint, *e, a.episodes, a.seed);
    std::cout << std::setprecision(10) << "episodes " << a.episodes << "\nmean_return " << stats.mean
              << "\nstd_return " << stats.std << "\ngoal_rate " << stats.goal_rate << "\n";
    return 0;
}

int run_inspect(const std::string& path) {
    const data::OfflineDataset ds = data::load(path);
    std::size_t min_len = 0, max_len = 0, terminal = 0;
    double total_return = 0.0;
    for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
        const auto& ep = ds.episodes[i];
        min_len = i == 0 ? ep.length() : std::min(min_len, ep.length());
        max_len = std::max(max_len, ep.length());
        if (ep.terminal) ++terminal;
        if (ds.rewards_available) {
            for (double r : ep.rewards) total_return += r;
        }
    }
    std::cout << "env_id " << ds.env_id << "\nepisodes " << ds.episodes.size() << "\ntransitions "
              << ds.n_transitions() << "\nepisode_length_min " << min_len << "\nepisode_length_max " << max_len
              << "\nterminal_episodes " << terminal << "\ngamma " << ds.gamma << "\nhorizon " << ds.horizon
              << "\nrewards_available " << (ds.rewards_available ? "true" : "false") << "\nbehavior "
              << ds.behavior_descriptor << "\n";
    if (ds.rewards_available && !ds.episodes.empty()) {
        std::cout << "mean_return " << total_return / static_cast<double>(ds.episodes.size()) << "\n";
    }
    return 0;
}

int run_export(const ExportArgs& a) {
    std::vector<std::string> fields;
    {
        std::stringstream ss(a.fields);
        std::string f;
        while (std::getline(ss, f, ',')) {
            if (!f.empty()) fields.push_back(f);
        }
    }
    if (!fs::exists(a.metrics)) throw Error("metrics file not found: " + a.metrics);
    const auto records = train::read_metrics(a.metrics);
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw Error("cannot open for writing: " + a.out);
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "step";
    for (const auto& f : fields) out << a.delimiter << f;
    out << "\n" << std::setprecision(17);
    for (const auto& r : records) {
        const auto j = train::to_json(r);
        out << r.step;
        for (const auto& f : fields) {
            out << a.delimiter;
            if (j.contains(f) && j[f].is_number()) out << j[f].get<double>();
        }
        out << "\n";
    }
    return 0;
}

void add_train_options(CLI::App* cmd, TrainArgs& a, bool pretrain) {
    cmd->add_option("--config", a.config, "Key-value config file");
    cmd->add_option("--seed", a.seed, "Override the config seed");
    cmd->add_option("--set", a.overrides, "Override a config key (key=value), repeatable")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd->add_option("--dataset", a.dataset, "Labeled dataset file");
    if (pretrain) cmd->add_option("--unlabeled", a.unlabeled, "Reward-free dataset for critic pretraining");
    cmd->add_option("--env", a.env, "Environment name or config file (defaults to the dataset's)");
    cmd->add_option("--out", a.out, "Output directory for checkpoints and metrics")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contrastive value learning: offline datasets, training and evaluation"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Roll out a behavior policy and write a dataset");
    gen_cmd->add_option("--env", gen.env, "Environment name or config file")->capture_default_str();
    gen_cmd->add_option("--episodes", gen.episodes, "Number of episodes")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    gen_cmd->add_option("--behavior", gen.behavior,
                        "epsilon_soft_tabular | scripted_mountain_car | uniform_random");
    gen_cmd->add_option("--epsilon", gen.epsilon, "Exploration rate for epsilon_soft_tabular")->capture_default_str();
    gen_cmd->add_option("--sigma", gen.sigma, "Action noise for scripted_mountain_car")->capture_default_str();
    gen_cmd->add_flag("--strip-rewards", gen.strip, "Write a reward-free dataset");
    gen_cmd->add_option("--out", gen.out, "Output file")->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train critic and policy on a labeled dataset");
    add_train_options(train_cmd, tr, false);

    TrainArgs pre;
    auto* pre_cmd = app.add_subcommand("pretrain", "Reward-free critic pretraining, then finetuning");
    add_train_options(pre_cmd, pre, true);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Deterministic-policy returns of a checkpoint");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--env", ev.env, "Environment (defaults to the checkpoint's)");
    eval_cmd->add_option("--episodes", ev.episodes, "Number of episodes")->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Random seed")->capture_default_str();

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a dataset file");
    inspect_cmd->add_option("dataset", inspect_path, "Dataset file")->required();

    ExportArgs ex;
    auto* export_cmd = app.add_subcommand("export-plot", "Write (step, metric...) columns from a metrics file");
    export_cmd->add_option("--metrics", ex.metrics, "Metrics file")->required();
    export_cmd->add_option("--fields", ex.fields, "Comma-separated metric names")->capture_default_str();
    export_cmd->add_option("--delimiter", ex.delimiter, "Column delimiter")->capture_default_str();
    export_cmd->add_option("--out", ex.out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*gen_cmd) return run_gen_data(gen);
        if (*train_cmd) return run_train(tr, false);
        if (*pre_cmd) return run_train(pre, true);
        if (*eval_cmd) return run_eval(ev);
        if (*inspect_cmd) return run_inspect(inspect_path);
        if (*export_cmd) return run_export(ex);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
