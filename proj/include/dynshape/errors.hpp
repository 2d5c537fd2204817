#pragma once

#include <stdexcept>
#include <string>

namespace dynshape {

/// Invalid configuration or argument values (CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File system / serialization failures (CLI exit code 3).
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures: degenerate inputs, stagnation, NaN (CLI exit code 4).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw config_error(msg);
}

} // namespace dynshape
