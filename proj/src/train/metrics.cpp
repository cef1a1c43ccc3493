#include "cvl/train/metrics.hpp"

#include <filesystem>
#include <sstream>

#include "cvl/errors.hpp"

namespace cvl::train {

namespace {

void put(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
}

std::optional<double> take(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open metrics file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

nlohmann::json to_json(const MetricsRecord& r) {
    nlohmann::json j;
    j["step"] = r.step;
    j["phase"] = r.phase;
    j["critic_loss"] = r.critic_loss;
    j["infonce"] = r.infonce;
    j["partition_reg"] = r.partition_reg;
    j["positive_logit_mean"] = r.positive_logit_mean;
    j["phi_grad_norm"] = r.phi_grad_norm;
    j["psi_grad_norm"] = r.psi_grad_norm;
    put(j, "policy_kl_loss", r.policy_kl_loss);
    put(j, "bc_loss", r.bc_loss);
    put(j, "mean_q", r.mean_q);
    put(j, "policy_grad_norm", r.policy_grad_norm);
    put(j, "eval_return_mean", r.eval_return_mean);
    put(j, "eval_return_std", r.eval_return_std);
    put(j, "wall_time", r.wall_time);
    if (r.faulted) {
        j["faulted"] = true;
        j["fault_message"] = r.fault_message;
    }
    return j;
}

MetricsRecord from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.step = j.at("step").get<long long>();
    r.phase = j.value("phase", std::string("train"));
    r.critic_loss = j.value("critic_loss", 0.0);
    r.infonce = j.value("infonce", 0.0);
    r.partition_reg = j.value("partition_reg", 0.0);
    r.positive_logit_mean = j.value("positive_logit_mean", 0.0);
    r.phi_grad_norm = j.value("phi_grad_norm", 0.0);
    r.psi_grad_norm = j.value("psi_grad_norm", 0.0);
    r.policy_kl_loss = take(j, "policy_kl_loss");
    r.bc_loss = take(j, "bc_loss");
    r.mean_q = take(j, "mean_q");
    r.policy_grad_norm = take(j, "policy_grad_norm");
    r.eval_return_mean = take(j, "eval_return_mean");
    r.eval_return_std = take(j, "eval_return_std");
    r.wall_time = take(j, "wall_time");
    r.faulted = j.value("faulted", false);
    r.fault_message = j.value("fault_message", std::string());
    return r;
}

MetricsWriter::MetricsWriter(const std::string& path, bool append) {
    if (append && std::filesystem::exists(path)) {
        const std::string text = read_all(path);
        const auto last_newline = text.find_last_of('\n');
        const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
        if (keep != text.size()) std::filesystem::resize_file(path, keep);
        out_.open(path, std::ios::binary | std::ios::app);
    } else {
        out_.open(path, std::ios::binary | std::ios::trunc);
    }
    if (!out_) throw Error("cannot open metrics file for writing: " + path);
}

void MetricsWriter::write(const MetricsRecord& record) {
    out_ << to_json(record).dump() << '\n';
    out_.flush();
    if (!out_) throw Error("failed to write metrics record");
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
    const std::string text = read_all(path);
    std::vector<MetricsRecord> out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        const bool complete = nl != std::string::npos;
        const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
        pos = complete ? nl + 1 : text.size();
        const bool last = pos >= text.size();
        if (line.empty()) continue;
        if (!complete) break;  // crash mid-write
        try {
            out.push_back(from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            if (last) break;
            throw FormatError(std::string("bad metrics record: ") + e.what(), line_no, 0);
        }
    }
    return out;
}

}  // namespace cvl::train
