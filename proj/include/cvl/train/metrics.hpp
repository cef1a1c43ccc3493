#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cvl::train {

struct MetricsRecord {
    long long step = 0;
    std::string phase = "train";  // "pretrain" or "train"
    double critic_loss = 0.0;
    double infonce = 0.0;
    double partition_reg = 0.0;
    double positive_logit_mean = 0.0;
    double phi_grad_norm = 0.0;
    double psi_grad_norm = 0.0;
    std::optional<double> policy_kl_loss;
    std::optional<double> bc_loss;
    std::optional<double> mean_q;
    std::optional<double> policy_grad_norm;
    std::optional<double> eval_return_mean;
    std::optional<double> eval_return_std;
    std::optional<double> wall_time;
    bool faulted = false;
    std::string fault_message;
};

nlohmann::json to_json(const MetricsRecord& record);
MetricsRecord from_json(const nlohmann::json& j);

/// One JSON object per line, flushed after each record.
class MetricsWriter {
public:
    MetricsWriter() = default;
    /// Truncates unless `append`; appending first drops a partial last line.
    explicit MetricsWriter(const std::string& path, bool append = false);
    void write(const MetricsRecord& record);
    bool is_open() const { return out_.is_open(); }

private:
    std::ofstream out_;
};

/// Reads every complete record; an unterminated or unparsable last line is
/// dropped, anything malformed earlier throws FormatError.
std::vector<MetricsRecord> read_metrics(const std::string& path);

}  // namespace cvl::train
