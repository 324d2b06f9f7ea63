#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfnet/errors.hpp"

namespace bfnet {

/// Ordered key-value configuration with [section] headers, one `key = value`
/// per line, `#` comments, comma-separated lists. Parsing then serializing is
/// idempotent: serialize(parse(text)) == serialize(parse(serialize(parse(text)))).
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& section, const std::string& key) const;
    /// Throws validation_error naming section.key when absent.
    const std::string& get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    std::size_t get_size(const std::string& section, const std::string& key) const;
    std::size_t get_size_or(const std::string& section, const std::string& key,
                            std::size_t fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    /// FNV-1a hash of the canonical serialization, hex-encoded.
    std::string hash() const;

private:
    struct Entry {
        std::string key;
        std::string value;
    };
    struct Section {
        std::string name;
        std::vector<Entry> entries;
    };
    std::vector<Section> sections_;

    const Entry* find(const std::string& section, const std::string& key) const;
};

/// Splits a comma-separated list, trimming whitespace.
std::vector<std::string> split_list(const std::string& value);

} // namespace bfnet
