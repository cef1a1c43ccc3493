#include "cvl/train/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include "cvl/errors.hpp"

namespace cvl::train {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// One accessor pair per field keeps parsing, printing and hashing in sync.
struct Field {
    std::function<void(TrainConfig&, const KeyValues&, const std::string&)> read;
    std::function<std::string(const TrainConfig&)> write;
};

template <class T>
Field dbl(T TrainConfig::*m) {
    return {[m](TrainConfig& c, const KeyValues& kv, const std::string& k) { c.*m = kv.get_double(k, c.*m); },
            [m](const TrainConfig& c) { return fmt_double(c.*m); }};
}

template <class T>
Field integer(T TrainConfig::*m) {
    return {[m](TrainConfig& c, const KeyValues& kv, const std::string& k) {
                const long long v = kv.get_int(k, static_cast<long long>(c.*m));
                if constexpr (std::is_unsigned_v<T>) {
                    if (v < 0) throw InvalidSpec(k + " must be non-negative");
                }
                c.*m = static_cast<T>(v);
            },
            [m](const TrainConfig& c) { return std::to_string(c.*m); }};
}

Field boolean(bool TrainConfig::*m) {
    return {[m](TrainConfig& c, const KeyValues& kv, const std::string& k) { c.*m = kv.get_bool(k, c.*m); },
            [m](const TrainConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

Field str(std::string TrainConfig::*m) {
    return {[m](TrainConfig& c, const KeyValues& kv, const std::string& k) { c.*m = kv.get_string(k, c.*m); },
            [m](const TrainConfig& c) { return c.*m; }};
}

Field widths(std::vector<int> TrainConfig::*m) {
    return {[m](TrainConfig& c, const KeyValues& kv, const std::string& k) {
                if (auto v = kv.get(k)) c.*m = parse_widths(*v);
            },
            [m](const TrainConfig& c) { return format_widths(c.*m); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = {
        {"env", str(&TrainConfig::env)},
        {"dataset", str(&TrainConfig::dataset)},
        {"unlabeled_dataset", str(&TrainConfig::unlabeled_dataset)},
        {"gamma", dbl(&TrainConfig::gamma)},
        {"horizon", integer(&TrainConfig::horizon)},
        {"seed", integer(&TrainConfig::seed)},
        {"epochs", integer(&TrainConfig::epochs)},
        {"steps_per_epoch", integer(&TrainConfig::steps_per_epoch)},
        {"episodes_per_batch", integer(&TrainConfig::episodes_per_batch)},
        {"learning_rate", dbl(&TrainConfig::learning_rate)},
        {"max_grad_norm", dbl(&TrainConfig::max_grad_norm)},
        {"critic_hidden", widths(&TrainConfig::critic_hidden)},
        {"latent_dim", integer(&TrainConfig::latent_dim)},
        {"densenet", boolean(&TrainConfig::densenet)},
        {"layernorm", boolean(&TrainConfig::layernorm)},
        {"l2_normalize", boolean(&TrainConfig::l2_normalize)},
        {"tau", dbl(&TrainConfig::tau)},
        {"lambda_partition", dbl(&TrainConfig::lambda_partition)},
        {"ema_beta", dbl(&TrainConfig::ema_beta)},
        {"use_rff", boolean(&TrainConfig::use_rff)},
        {"rff_dim", integer(&TrainConfig::rff_dim)},
        {"xi_ema", dbl(&TrainConfig::xi_ema)},
        {"policy_hidden", widths(&TrainConfig::policy_hidden)},
        {"boltzmann_tau", dbl(&TrainConfig::boltzmann_tau)},
        {"lambda_bc", dbl(&TrainConfig::lambda_bc)},
        {"entropy_coeff", dbl(&TrainConfig::entropy_coeff)},
        {"n_action_samples", integer(&TrainConfig::n_action_samples)},
        {"log_std_min", dbl(&TrainConfig::log_std_min)},
        {"log_std_max", dbl(&TrainConfig::log_std_max)},
        {"pretrain_steps", integer(&TrainConfig::pretrain_steps)},
        {"eval_every", integer(&TrainConfig::eval_every)},
        {"eval_episodes", integer(&TrainConfig::eval_episodes)},
        {"log_wall_time", boolean(&TrainConfig::log_wall_time)},
        {"max_fault_fraction", dbl(&TrainConfig::max_fault_fraction)},
    };
    return f;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidSpec(msg);
}

}  // namespace

std::vector<int> parse_widths(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            const int w = std::stoi(item, &used);
            if (w <= 0 || item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
            out.push_back(w);
        } catch (const std::logic_error&) {
            throw InvalidSpec("bad layer width list: " + text);
        }
    }
    return out;
}

std::string format_widths(const std::vector<int>& widths) {
    std::string out;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(widths[i]);
    }
    return out;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
    TrainConfig c;
    for (const auto& [key, value] : kv.entries()) {
        auto it = fields().find(key);
        if (it == fields().end()) throw InvalidSpec("unknown config key: " + key);
        it->second.read(c, kv, key);
    }
    c.validate();
    return c;
}

KeyValues TrainConfig::to_kv() const {
    KeyValues kv;
    for (const auto& [key, field] : fields()) kv.set(key, field.write(*this));
    return kv;
}

void TrainConfig::validate() const {
    require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
    require(epochs >= 0 && pretrain_steps >= 0, "step counts must be non-negative");
    require(steps_per_epoch >= 1, "steps_per_epoch must be positive");
    require(episodes_per_batch >= 1, "episodes_per_batch must be at least 1");
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(max_grad_norm >= 0.0, "max_grad_norm must be non-negative");
    require(latent_dim >= 1, "latent_dim must be positive");
    require(tau > 0.0 && boltzmann_tau > 0.0, "temperatures must be positive");
    require(lambda_partition >= 0.0 && lambda_bc >= 0.0 && entropy_coeff >= 0.0, "coefficients must be non-negative");
    require(ema_beta >= 0.0 && ema_beta <= 1.0, "ema_beta must lie in [0, 1]");
    require(xi_ema > 0.0 && xi_ema <= 1.0, "xi_ema must lie in (0, 1]");
    require(rff_dim >= 1, "rff_dim must be at least 1");
    require(n_action_samples >= 1, "n_action_samples must be at least 1");
    require(log_std_min < log_std_max, "log_std_min must be below log_std_max");
    require(eval_every >= 0 && eval_episodes >= 1, "bad evaluation schedule");
    require(max_fault_fraction >= 0.0, "max_fault_fraction must be non-negative");
}

std::string TrainConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const KeyValues kv = to_kv();
    for (const auto& [key, value] : kv.entries()) {
        for (const char ch : key + "=" + value + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cvl::train
