#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nldecay {

/// Malformed or invalid configuration; carries the 1-based line (0 if the
/// problem is not tied to one line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}
    int line() const noexcept { return line_; }
    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
    int line_;
};

/// Flat key = value store. "[section]" prefixes following keys with
/// "section."; '#' starts a comment. Lookups record which keys were used so
/// unknown keys can be reported.
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static Config parse(std::istream& is, const std::string& file = "<config>") {
        Config c;
        c.file_ = file;
        std::string raw, section;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            const auto hash = raw.find('#');
            std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) throw ConfigError(file, line, "malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (!valid_key(section)) throw ConfigError(file, line, "invalid section name '" + section + "'");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError(file, line, "expected 'key = value'");
            std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (!valid_key(key)) throw ConfigError(file, line, "invalid key '" + key + "'");
            if (value.empty()) throw ConfigError(file, line, "missing value for '" + key + "'");
            if (!section.empty()) key = section + "." + key;
            if (c.entries_.count(key)) throw ConfigError(file, line, "duplicate key '" + key + "'");
            c.entries_[key] = Entry{value, line};
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError(path, 0, "cannot open config file");
        return parse(is, path);
    }

    const std::string& file() const noexcept { return file_; }
    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { entries_[key] = Entry{value, 0}; }

    std::string get_string(const std::string& key) const { return entry(key).value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    double get_double(const std::string& key) const {
        const Entry& e = entry(key);
        return to_double(e.value, key, e.line);
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_long(const std::string& key) const {
        const Entry& e = entry(key);
        char* end = nullptr;
        const long v = std::strtol(e.value.c_str(), &end, 10);
        if (end == e.value.c_str() || *end != '\0')
            throw ConfigError(file_, e.line, "'" + key + "' must be an integer");
        return v;
    }

    long get_long(const std::string& key, long fallback) const { return has(key) ? get_long(key) : fallback; }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Entry& e = entry(key);
        if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
        if (e.value == "false" || e.value == "no" || e.value == "0") return false;
        throw ConfigError(file_, e.line, "'" + key + "' must be true or false");
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const Entry& e = entry(key);
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), key, e.line));
        if (out.empty()) throw ConfigError(file_, e.line, "'" + key + "' needs at least one value");
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const {
        if (!has(key)) return fallback;
        std::vector<std::string> out;
        std::stringstream ss(entry(key).value);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty()) out.push_back(trim(item));
        return out;
    }

    int line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

    /// Throws for the first key that was never looked up.
    void reject_unused() const {
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) throw ConfigError(file_, e.line, "unknown key '" + k + "'");
    }

    [[noreturn]] void invalid(const std::string& key, const std::string& msg) const {
        throw ConfigError(file_, line_of(key), "'" + key + "' " + msg);
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static bool valid_key(const std::string& k) {
        if (k.empty()) return false;
        for (char ch : k)
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '-')) return false;
        return true;
    }

    double to_double(const std::string& v, const std::string& key, int line) const {
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') throw ConfigError(file_, line, "'" + key + "' must be a number");
        return d;
    }

    const Entry& entry(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(file_, 0, "missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::string file_;
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

} // namespace nldecay
