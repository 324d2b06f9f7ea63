#include "bfnet/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bfnet {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream stream(value);
    while (std::getline(stream, item, ',')) out.push_back(trim(item));
    if (!value.empty() && value.back() == ',') out.push_back("");
    return out;
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    Section* current = nullptr;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                std::ostringstream msg;
                msg << "config line " << line_no << ": unterminated section header";
                throw validation_error(msg.str());
            }
            cfg.sections_.push_back({trim(line.substr(1, line.size() - 2)), {}});
            current = &cfg.sections_.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "config line " << line_no << ": expected key = value, got '" << line << "'";
            throw validation_error(msg.str());
        }
        if (current == nullptr) {
            std::ostringstream msg;
            msg << "config line " << line_no << ": key outside any [section]";
            throw validation_error(msg.str());
        }
        current->entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string Config::serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& section : sections_) {
        if (!first) out << "\n";
        first = false;
        out << "[" << section.name << "]\n";
        for (const auto& entry : section.entries)
            out << entry.key << " = " << entry.value << "\n";
    }
    return out.str();
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    for (const auto& s : sections_) {
        if (s.name != section) continue;
        for (const auto& e : s.entries)
            if (e.key == key) return &e;
    }
    return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (e == nullptr)
        throw validation_error("config: missing required field " + section + "." + key);
    return e->value;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e == nullptr ? fallback : e->value;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const std::string& raw = get(section, key);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw validation_error("config: field " + section + "." + key +
                               " is not a number: '" + raw + "'");
    }
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::size_t Config::get_size(const std::string& section, const std::string& key) const {
    const double v = get_double(section, key);
    if (v < 0.0 || v != std::floor(v))
        throw validation_error("config: field " + section + "." + key +
                               " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::size_t Config::get_size_or(const std::string& section, const std::string& key,
                                std::size_t fallback) const {
    return has(section, key) ? get_size(section, key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get(section, key))) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw validation_error("config: field " + section + "." + key +
                                   " has a non-numeric item: '" + item + "'");
        }
    }
    return out;
}

std::vector<std::string> Config::get_list(const std::string& section,
                                          const std::string& key) const {
    return split_list(get(section, key));
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    for (auto& s : sections_) {
        if (s.name != section) continue;
        for (auto& e : s.entries) {
            if (e.key == key) {
                e.value = value;
                return;
            }
        }
        s.entries.push_back({key, value});
        return;
    }
    sections_.push_back({section, {{key, value}}});
}

std::string Config::hash() const {
    const std::string text = serialize();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace bfnet
