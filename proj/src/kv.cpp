#include "cvl/kv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cvl/errors.hpp"

namespace cvl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;  // tolerate TOML table headers
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("expected key = value", lineno, line_offset);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw FormatError("empty key", lineno, line_offset);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        kv.values_[key] = value;
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        double out = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return out;
    } catch (const std::exception&) {
        throw InvalidSpec("config key '" + key + "' is not a number: " + *v);
    }
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        long long out = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return out;
    } catch (const std::exception&) {
        throw InvalidSpec("config key '" + key + "' is not an integer: " + *v);
    }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw InvalidSpec("config key '" + key + "' is not a boolean: " + *v);
}

}  // namespace cvl
