#pragma once

#include <stdexcept>
#include <string>

namespace opauth {

// Error taxonomy mapped onto CLI exit codes: usage/config -> 2,
// data/training -> 3, io -> 1.

struct UsageError : std::invalid_argument {
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid model parameters (non-positive variance, broken stochasticity).
struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace opauth
