#include "cvl/train/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "cvl/errors.hpp"
#include "cvl/hexfloat.hpp"
#include "cvl/train/config.hpp"

namespace cvl::train {

namespace {

constexpr const char* kMagic = "cvl-checkpoint";

void write_values(std::ostream& out, const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out << ' ' << to_hex(data[i]);
}

void write_scalar(std::ostream& out, const std::string& name, double v) {
    out << "scalar " << name << ' ' << to_hex(v) << '\n';
}

void write_featurizer(std::ostream& out, const std::string& name, const env::Featurizer& f) {
    out << "featurizer " << name;
    if (f.kind == env::Featurizer::Kind::OneHot) {
        out << " onehot " << f.n << '\n';
        return;
    }
    out << " affine " << f.shift.size();
    write_values(out, f.shift.data(), f.shift.size());
    write_values(out, f.scale.data(), f.scale.size());
    out << '\n';
}

void write_mlp(std::ostream& out, const std::string& name, const nn::MLP& net) {
    const auto& c = net.config();
    out << "mlp " << name << ' ' << c.input_dim << ' ' << (c.hidden.empty() ? "-" : format_widths(c.hidden)) << ' '
        << c.output_dim << ' ' << int(c.densenet) << ' ' << int(c.layernorm) << ' ' << net.num_params();
    write_values(out, net.params().data(), net.num_params());
    out << '\n';
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols();
    write_values(out, m.data(), m.size());
    out << '\n';
}

// Parsed records keyed by name.
struct Records {
    std::map<std::string, double> scalars;
    std::map<std::string, env::Featurizer> featurizers;
    std::map<std::string, nn::MLP> mlps;
    std::map<std::string, Eigen::MatrixXd> matrices;
};

class Tokens {
public:
    Tokens(const std::string& line, std::size_t lineno) : ss_(line), lineno_(lineno) {}

    std::string next(const char* what) {
        std::string tok;
        if (!(ss_ >> tok)) fail(std::string("missing ") + what);
        return tok;
    }
    long long integer(const char* what) {
        const std::string tok = next(what);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used == tok.size()) return v;
        } catch (const std::exception&) {
        }
        fail(std::string("expected integer for ") + what);
    }
    double hex(const char* what) {
        auto v = from_hex(next(what));
        if (!v) fail(std::string("expected 16 hex digits for ") + what);
        return *v;
    }
    void end() {
        std::string extra;
        if (ss_ >> extra) fail("unexpected trailing data");
    }
    [[noreturn]] void fail(const std::string& msg) {
        const auto pos = ss_.tellg();
        throw FormatError(msg, lineno_, pos < 0 ? 0 : static_cast<std::size_t>(pos));
    }

private:
    std::istringstream ss_;
    std::size_t lineno_;
};

template <class Map>
const typename Map::mapped_type& need(const Map& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw FormatError("checkpoint is missing '" + name + "'", 0, 0);
    return it->second;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
    const Model& m = ck.model;
    std::ostringstream out;
    out << kMagic << ' ' << kCheckpointVersion << '\n';
    out << "config_hash " << ck.config_hash << '\n';
    out << "env_id " << m.env_id << '\n';
    out << "step " << ck.step << '\n';
    write_featurizer(out, "critic.state", m.critic.state_features);
    write_featurizer(out, "critic.action", m.critic.action_features);
    write_scalar(out, "critic.l2_normalize", m.critic.l2_normalize_outputs ? 1.0 : 0.0);
    write_scalar(out, "critic.temperature", m.critic.infonce_temperature);
    write_mlp(out, "critic.phi", m.critic.phi);
    write_mlp(out, "critic.psi", m.critic.psi);
    write_mlp(out, "critic.psi_target", m.critic.psi_target);
    if (m.rff) {
        write_matrix(out, "rff.projection", m.rff->projection);
        write_matrix(out, "rff.offsets", m.rff->offsets);
        write_matrix(out, "rff.xi", m.rff->xi);
        write_scalar(out, "rff.temperature", m.rff->temperature);
        write_scalar(out, "rff.xi_ema", m.rff->xi_ema);
        write_scalar(out, "rff.xi_initialized", m.rff->xi_initialized ? 1.0 : 0.0);
    }
    write_featurizer(out, "policy.state", m.policy.state_features);
    write_scalar(out, "policy.discrete", m.policy.discrete ? 1.0 : 0.0);
    write_scalar(out, "policy.action_dim", m.policy.action_dim);
    write_scalar(out, "policy.log_std_min", m.policy.log_std_min);
    write_scalar(out, "policy.log_std_max", m.policy.log_std_max);
    write_mlp(out, "policy.net", m.policy.net);
    out << "end\n";
    return out.str();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw FormatError(std::string("truncated checkpoint: missing ") + what, lineno + 1, 0);
        ++lineno;
        return Tokens(line, lineno);
    };

    Checkpoint ck;
    {
        Tokens t = next_line("header");
        if (t.next("magic") != kMagic) t.fail("not a checkpoint file");
        const long long version = t.integer("version");
        if (version != kCheckpointVersion) {
            throw VersionError("checkpoint version " + std::to_string(version) + " is not supported");
        }
    }
    {
        Tokens t = next_line("config_hash");
        if (t.next("key") != "config_hash") t.fail("expected config_hash");
        ck.config_hash = t.next("config hash");
    }
    {
        next_line("env_id");
        if (line.rfind("env_id ", 0) != 0) throw FormatError("expected env_id", lineno, 0);
        ck.model.env_id = line.substr(7);
    }
    {
        Tokens t = next_line("step");
        if (t.next("key") != "step") t.fail("expected step");
        ck.step = t.integer("step");
    }

    Records rec;
    bool ended = false;
    while (!ended) {
        Tokens t = next_line("record");
        const std::string kind = t.next("record kind");
        if (kind == "end") {
            ended = true;
            break;
        }
        const std::string name = t.next("record name");
        if (kind == "scalar") {
            rec.scalars[name] = t.hex("scalar");
        } else if (kind == "featurizer") {
            env::Featurizer f;
            const std::string fk = t.next("featurizer kind");
            if (fk == "onehot") {
                f.kind = env::Featurizer::Kind::OneHot;
                f.n = static_cast<int>(t.integer("one-hot size"));
            } else if (fk == "affine") {
                f.kind = env::Featurizer::Kind::Affine;
                const long long d = t.integer("affine dimension");
                if (d < 1) t.fail("bad affine dimension");
                f.shift.resize(d);
                f.scale.resize(d);
                for (long long i = 0; i < d; ++i) f.shift[i] = t.hex("shift");
                for (long long i = 0; i < d; ++i) f.scale[i] = t.hex("scale");
            } else {
                t.fail("unknown featurizer kind");
            }
            rec.featurizers[name] = f;
        } else if (kind == "mlp") {
            nn::MLPConfig c;
            c.input_dim = static_cast<int>(t.integer("input dim"));
            const std::string hidden = t.next("hidden widths");
            try {
                if (hidden != "-") c.hidden = parse_widths(hidden);
            } catch (const InvalidSpec&) {
                t.fail("bad hidden widths");
            }
            c.output_dim = static_cast<int>(t.integer("output dim"));
            c.densenet = t.integer("densenet flag") != 0;
            c.layernorm = t.integer("layernorm flag") != 0;
            const long long n = t.integer("parameter count");
            nn::MLP net;
            try {
                net = nn::MLP(c);
            } catch (const Error&) {
                t.fail("bad network shape");
            }
            if (n != net.num_params()) t.fail("parameter count does not match architecture");
            for (long long i = 0; i < n; ++i) net.params()[i] = t.hex("parameter");
            rec.mlps[name] = std::move(net);
        } else if (kind == "matrix") {
            const long long r = t.integer("rows");
            const long long c = t.integer("cols");
            if (r < 0 || c < 0) t.fail("bad matrix shape");
            Eigen::MatrixXd m(r, c);
            for (long long i = 0; i < r * c; ++i) m.data()[i] = t.hex("matrix entry");
            rec.matrices[name] = std::move(m);
        } else {
            t.fail("unknown record kind '" + kind + "'");
        }
        t.end();
    }

    Model& m = ck.model;
    m.critic.state_features = need(rec.featurizers, "critic.state");
    m.critic.action_features = need(rec.featurizers, "critic.action");
    m.critic.l2_normalize_outputs = need(rec.scalars, "critic.l2_normalize") != 0.0;
    m.critic.infonce_temperature = need(rec.scalars, "critic.temperature");
    m.critic.phi = need(rec.mlps, "critic.phi");
    m.critic.psi = need(rec.mlps, "critic.psi");
    m.critic.psi_target = need(rec.mlps, "critic.psi_target");
    if (rec.matrices.count("rff.projection")) {
        rff::RFFState r;
        r.projection = need(rec.matrices, "rff.projection");
        r.offsets = need(rec.matrices, "rff.offsets");
        r.xi = need(rec.matrices, "rff.xi");
        r.temperature = need(rec.scalars, "rff.temperature");
        r.xi_ema = need(rec.scalars, "rff.xi_ema");
        r.xi_initialized = need(rec.scalars, "rff.xi_initialized") != 0.0;
        m.rff = std::move(r);
    }
    m.policy.state_features = need(rec.featurizers, "policy.state");
    m.policy.discrete = need(rec.scalars, "policy.discrete") != 0.0;
    m.policy.action_dim = static_cast<int>(need(rec.scalars, "policy.action_dim"));
    m.policy.log_std_min = need(rec.scalars, "policy.log_std_min");
    m.policy.log_std_max = need(rec.scalars, "policy.log_std_max");
    m.policy.net = need(rec.mlps, "policy.net");
    return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    out << serialize_checkpoint(checkpoint);
    if (!out) throw Error("failed to write checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace cvl::train
