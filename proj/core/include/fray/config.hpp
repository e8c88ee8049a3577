#pragma once

#include <map>
#include <string>
#include <vector>

#include "fray/geometry.hpp"

namespace fray {

/// Flat key=value text configuration. One `key = value` pair per line,
/// '#' starts a comment, values keep internal whitespace (vectors are
/// whitespace-separated numbers). CLI overrides are applied with set().
class Config {
public:
    Config() = default;

    static Config load(const std::string& path);
    void save(const std::string& path) const;

    /// Parses "key=value" (as passed to --set). Throws on malformed input.
    void set_entry(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::map<std::string, std::string> entries_;
};

}  // namespace fray
