#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dislab {

// Error taxonomy. The CLI maps these onto process exit codes:
// config 2, divergence/integration 3, everything else 1.

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OrderingError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TargetError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrationError : std::runtime_error {
    double sigma_at_failure;
    explicit IntegrationError(const std::string& msg, double sigma)
        : std::runtime_error(msg), sigma_at_failure(sigma) {}
};

struct SolverDivergence : std::runtime_error {
    std::size_t step_index;
    explicit SolverDivergence(const std::string& msg, std::size_t step)
        : std::runtime_error(msg), step_index(step) {}
};

}  // namespace dislab
