#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynshape/errors.hpp"

namespace dynshape {

/// INI-style experiment configuration. Top-level keys live in the "" section.
/// The schema is closed: unknown sections or keys are rejected before any
/// computation happens.
class ExperimentConfig {
public:
    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw io_error("cannot open config: " + path);
        std::ostringstream buf;
        buf << f.rdbuf();
        return from_string(buf.str());
    }

    static ExperimentConfig from_string(const std::string& text) {
        ExperimentConfig cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("config line " + std::to_string(lineno) +
                                       ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": expected key = value");
            cfg.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    /// Applies a `section.key=value` override from the command line.
    void set_override(const std::string& spec) {
        auto eq = spec.find('=');
        require(eq != std::string::npos, "--set expects section.key=value");
        std::string path = trim(spec.substr(0, eq));
        std::string value = trim(spec.substr(eq + 1));
        auto dot = path.find('.');
        if (dot == std::string::npos) set("", path, value);
        else set(path.substr(0, dot), path.substr(dot + 1), value);
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        values_[section + "/" + key] = value;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "/" + key) > 0;
    }

    std::string str(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const {
        auto it = values_.find(section + "/" + key);
        return it == values_.end() ? fallback : it->second;
    }

    double num(const std::string& section, const std::string& key, double fallback) const {
        auto it = values_.find(section + "/" + key);
        if (it == values_.end()) return fallback;
        if (it->second == "inf") return std::numeric_limits<double>::infinity();
        try {
            size_t used = 0;
            double v = std::stod(it->second, &used);
            require(used == it->second.size(),
                    "config: bad number for " + section + "." + key);
            return v;
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("config: bad number for " + section + "." + key + ": " +
                               it->second);
        }
    }

    int integer(const std::string& section, const std::string& key, int fallback) const {
        double v = num(section, key, fallback);
        require(v == std::floor(v), "config: expected integer for " + section + "." + key);
        return static_cast<int>(v);
    }

    /// Rejects anything outside the allowed schema (entries as "section/key").
    void validate_schema(const std::set<std::string>& allowed) const {
        for (const auto& [k, _] : values_)
            if (!allowed.count(k))
                throw config_error("config: unknown key '" + pretty(k) + "'");
    }

private:
    static std::string trim(std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    }
    static std::string pretty(const std::string& slashed) {
        auto slash = slashed.find('/');
        if (slash == 0) return slashed.substr(1);
        std::string s = slashed;
        s[slash] = '.';
        return s;
    }

    std::map<std::string, std::string> values_;
};

} // namespace dynshape
