#pragma once

#include <map>
#include <optional>
#include <string>

namespace cvl {

/// Flat key/value configuration text. One `key = value` per line; `#` starts
/// a comment; surrounding quotes on values are stripped. Later keys win.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace cvl
