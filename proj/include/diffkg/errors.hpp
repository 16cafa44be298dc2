#pragma once

#include <stdexcept>
#include <string>

namespace diffkg {

/// Bad command line, unknown config key, out-of-range hyperparameter.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or missing input data.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite loss or gradient.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace diffkg
