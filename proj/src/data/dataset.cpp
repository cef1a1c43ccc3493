#include "cvl/data/dataset.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvl/errors.hpp"

namespace cvl::data {

namespace {

constexpr const char* kMagic = "cvl-dataset";

std::string to_hex(double v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    return buf;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_vec(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!same_bits(a(i), b(i))) return false;
    }
    return true;
}

void write_vectors(std::ostream& out, char tag, const std::vector<Vec>& vs) {
    const long dim = vs.empty() ? 0 : static_cast<long>(vs.front().size());
    out << ' ' << tag << ' ' << vs.size() << ' ' << dim;
    for (const auto& v : vs) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << to_hex(v(i));
    }
}

// Tokenizer over a single line that reports the absolute byte offset of failures.
class LineReader {
public:
    LineReader(const std::string& line, std::size_t lineno, std::size_t offset)
        : line_(line), lineno_(lineno), offset_(offset) {}

    std::string token(const char* what) {
        while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
        if (pos_ >= line_.size()) fail(std::string("truncated record: missing ") + what);
        const std::size_t start = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
        return line_.substr(start, pos_ - start);
    }

    long long integer(const char* what) {
        const std::string tok = token(what);
        try {
            std::size_t used = 0;
            long long v = std::stoll(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(std::string("expected integer for ") + what);
        }
    }

    double hex_double(const char* what) {
        const std::string tok = token(what);
        if (tok.size() != 16) fail(std::string("expected 16 hex digits for ") + what);
        std::uint64_t bits = 0;
        for (char c : tok) {
            bits <<= 4;
            if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
            else fail(std::string("bad hex digit in ") + what);
        }
        return std::bit_cast<double>(bits);
    }

    void expect(const char* literal) {
        if (token(literal) != literal) fail(std::string("expected '") + literal + "'");
    }

    void expect_end() {
        while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
        if (pos_ != line_.size()) fail("unexpected trailing data");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw FormatError(msg, lineno_, offset_ + pos_); }

private:
    const std::string& line_;
    std::size_t lineno_;
    std::size_t offset_;
    std::size_t pos_ = 0;
};

std::vector<Vec> read_vectors(LineReader& r, const char* tag) {
    r.expect(tag);
    const long long count = r.integer("vector count");
    const long long dim = r.integer("vector dimension");
    if (count < 0 || dim < 0 || (count > 0 && dim == 0)) r.fail("invalid vector shape");
    std::vector<Vec> out(static_cast<std::size_t>(count), Vec(dim));
    for (auto& v : out) {
        for (long long i = 0; i < dim; ++i) v(i) = r.hex_double("vector entry");
    }
    return out;
}

std::atomic<std::uint64_t> g_reward_reads{0};

}  // namespace

std::size_t OfflineDataset::n_transitions() const {
    std::size_t n = 0;
    for (const auto& ep : episodes) n += ep.length();
    return n;
}

OfflineDataset generate_dataset(const env::Environment& env, const env::BehaviorPolicy& behavior, int n_episodes,
                                std::uint64_t seed) {
    if (n_episodes < 1) throw InvalidSpec("n_episodes must be >= 1");
    OfflineDataset ds;
    ds.env_id = env.id();
    ds.gamma = env.gamma();
    ds.horizon = env.horizon();
    ds.rewards_available = true;
    ds.behavior_descriptor = behavior.descriptor;
    Rng rng = make_stream(seed, stream::kData);
    ds.episodes.reserve(n_episodes);
    for (int i = 0; i < n_episodes; ++i) ds.episodes.push_back(env::rollout(env, behavior.act, rng, env.horizon()));
    return ds;
}

std::string serialize(const OfflineDataset& ds) {
    std::ostringstream out;
    out << kMagic << ' ' << kDatasetVersion << '\n';
    out << "env_id " << ds.env_id << '\n';
    out << "gamma " << to_hex(ds.gamma) << '\n';
    out << "horizon " << ds.horizon << '\n';
    out << "rewards_available " << (ds.rewards_available ? 1 : 0) << '\n';
    out << "behavior " << ds.behavior_descriptor << '\n';
    out << "episodes " << ds.episodes.size() << '\n';
    for (const auto& ep : ds.episodes) {
        out << "episode " << (ep.terminal ? 1 : 0);
        write_vectors(out, 'S', ep.states);
        write_vectors(out, 'A', ep.actions);
        if (ds.rewards_available) {
            out << " R " << ep.rewards.size();
            for (double r : ep.rewards) out << ' ' << to_hex(r);
        } else {
            out << " R -";
        }
        out << '\n';
    }
    return out.str();
}

OfflineDataset deserialize(const std::string& text) {
    std::vector<std::pair<std::string, std::size_t>> lines;
    {
        std::size_t start = 0;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) {
                // A final line without newline is a truncated write.
                throw FormatError("truncated file: last record has no terminating newline", lines.size() + 1, start);
            }
            lines.emplace_back(text.substr(start, end - start), start);
            start = end + 1;
        }
    }
    auto header_value = [&](std::size_t idx, const std::string& key) -> std::string {
        if (idx >= lines.size()) throw FormatError("truncated header: missing '" + key + "'", idx + 1, text.size());
        const auto& [line, offset] = lines[idx];
        if (line.rfind(key + " ", 0) != 0 && line != key) {
            throw FormatError("expected header field '" + key + "'", idx + 1, offset);
        }
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    };

    if (lines.empty()) throw FormatError("empty dataset file", 1, 0);
    {
        LineReader r(lines[0].first, 1, lines[0].second);
        if (r.token("magic") != kMagic) r.fail("not a dataset file");
        const long long version = r.integer("version");
        if (version != kDatasetVersion) {
            throw VersionError("dataset version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kDatasetVersion) + ")");
        }
    }
    OfflineDataset ds;
    ds.env_id = header_value(1, "env_id");
    {
        LineReader r(lines[2].first, 3, lines[2].second);
        header_value(2, "gamma");
        r.expect("gamma");
        ds.gamma = r.hex_double("gamma");
    }
    std::size_t n_episodes = 0;
    {
        header_value(3, "horizon");
        LineReader h(lines[3].first, 4, lines[3].second);
        h.expect("horizon");
        ds.horizon = static_cast<int>(h.integer("horizon"));
        header_value(4, "rewards_available");
        LineReader ra(lines[4].first, 5, lines[4].second);
        ra.expect("rewards_available");
        const long long flag = ra.integer("rewards_available");
        if (flag != 0 && flag != 1) ra.fail("rewards_available must be 0 or 1");
        ds.rewards_available = flag == 1;
        ds.behavior_descriptor = header_value(5, "behavior");
        header_value(6, "episodes");
        LineReader e(lines[6].first, 7, lines[6].second);
        e.expect("episodes");
        const long long n = e.integer("episodes");
        if (n < 0) e.fail("negative episode count");
        n_episodes = static_cast<std::size_t>(n);
    }
    if (lines.size() != 7 + n_episodes) {
        throw FormatError("expected " + std::to_string(n_episodes) + " episode records, found " +
                              std::to_string(lines.size() - 7),
                          lines.size() + 1, text.size());
    }
    ds.episodes.resize(n_episodes);
    for (std::size_t i = 0; i < n_episodes; ++i) {
        const auto& [line, offset] = lines[7 + i];
        LineReader r(line, 8 + i, offset);
        r.expect("episode");
        const long long terminal = r.integer("terminal flag");
        if (terminal != 0 && terminal != 1) r.fail("terminal flag must be 0 or 1");
        Trajectory& ep = ds.episodes[i];
        ep.terminal = terminal == 1;
        ep.states = read_vectors(r, "S");
        ep.actions = read_vectors(r, "A");
        r.expect("R");
        if (ds.rewards_available) {
            const long long n = r.integer("reward count");
            if (n < 0) r.fail("negative reward count");
            ep.rewards.resize(static_cast<std::size_t>(n));
            for (auto& v : ep.rewards) v = r.hex_double("reward");
        } else {
            if (r.token("reward marker") != "-") r.fail("reward-free dataset must mark rewards with '-'");
            ep.rewards.assign(ep.actions.size(), std::numeric_limits<double>::quiet_NaN());
        }
        r.expect_end();
        if (ep.states.size() != ep.actions.size() + 1 || ep.rewards.size() != ep.actions.size()) {
            throw FormatError("episode arrays have inconsistent lengths", 8 + i, offset);
        }
    }
    return ds;
}

void save(const OfflineDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << serialize(dataset);
    if (!out) throw std::runtime_error("write failed: " + path);
}

OfflineDataset load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

bool identical(const OfflineDataset& a, const OfflineDataset& b) {
    if (a.env_id != b.env_id || !same_bits(a.gamma, b.gamma) || a.horizon != b.horizon ||
        a.rewards_available != b.rewards_available || a.behavior_descriptor != b.behavior_descriptor ||
        a.episodes.size() != b.episodes.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
        const auto& x = a.episodes[i];
        const auto& y = b.episodes[i];
        if (x.terminal != y.terminal || x.states.size() != y.states.size() || x.actions.size() != y.actions.size() ||
            x.rewards.size() != y.rewards.size()) {
            return false;
        }
        for (std::size_t t = 0; t < x.states.size(); ++t) {
            if (!same_vec(x.states[t], y.states[t])) return false;
        }
        for (std::size_t t = 0; t < x.actions.size(); ++t) {
            if (!same_vec(x.actions[t], y.actions[t])) return false;
        }
        for (std::size_t t = 0; t < x.rewards.size(); ++t) {
            if (!same_bits(x.rewards[t], y.rewards[t])) return false;
        }
    }
    return true;
}

OfflineDataset strip_rewards(OfflineDataset dataset) {
    for (auto& ep : dataset.episodes) {
        std::fill(ep.rewards.begin(), ep.rewards.end(), std::numeric_limits<double>::quiet_NaN());
    }
    dataset.rewards_available = false;
    return dataset;
}

std::uint64_t reward_reads() { return g_reward_reads.load(); }

namespace detail {
void count_reward_reads(std::uint64_t n) { g_reward_reads.fetch_add(n); }
}  // namespace detail

Eigen::MatrixXd anchor_counts(const OfflineDataset& dataset, int n_states, int n_actions) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_states, n_actions);
    for (const auto& ep : dataset.episodes) {
        for (std::size_t t = 0; t < ep.length(); ++t) {
            counts(static_cast<Eigen::Index>(ep.states[t](0)), static_cast<Eigen::Index>(ep.actions[t](0))) += 1.0;
        }
    }
    return counts;
}

}  // namespace cvl::data
