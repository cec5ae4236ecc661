#pragma once

#include <stdexcept>
#include <string>

namespace spinmem {

/// Invalid configuration or argument values; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during computation (NaN, step policy violation,
/// non-convergence where convergence is required); maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spinmem
