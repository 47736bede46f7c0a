#pragma once

#include <stdexcept>
#include <string>

namespace vitag {

// Bad or inconsistent input data: malformed files, unknown ids,
// dimension mismatches. Maps to exit code 1 in the CLI.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or parameters. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A violated internal invariant. Maps to exit code 3.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace vitag
