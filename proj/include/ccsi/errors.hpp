#pragma once

#include <stdexcept>
#include <string>

namespace ccsi {

/// Invalid or inconsistent configuration (grid, geometry, measurement setup).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical step could not be completed (singular factorization, degenerate state).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    success = 0,
    config_error = 2,
    numerical_failure = 3,
    io_error = 4,
};

} // namespace ccsi
