#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace cort {

/// Flat `key=value` configuration file. Blank lines and lines starting with
/// '#' are ignored; whitespace around keys and values is trimmed. Unknown
/// keys are kept so callers can validate their own namespace.
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const;
    double get(const std::string& key, double fallback) const;
    std::int64_t get(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get(const std::string& key, std::uint64_t fallback) const;
    bool get(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace cort
