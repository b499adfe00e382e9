#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mkv {

using Real = double;
using Mat  = Eigen::MatrixXd;
using Vec  = Eigen::VectorXd;
using Row  = Eigen::RowVectorXd;

/// Bad user input: malformed config file, inconsistent dimensions, invalid
/// hyperparameters. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse inside the library (e.g. backward() on a non-scalar node).
class UsageError : public std::logic_error {
public:
    explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

/// A simulation or training run produced a non-finite state, a non-finite
/// loss, or left the domain of a model coefficient (X^i <= 0 under a log).
/// Runs ending this way are recorded as "DV", not crashes. Maps to CLI
/// exit code 2.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what, long iteration = -1, int step = -1)
        : std::runtime_error(what), iteration(iteration), step(step) {}

    long iteration;  // gradient iteration, -1 if unknown at throw site
    int step;        // time-step index, -1 if unknown
};

/// Numerical failure in a deterministic computation (singular shooting
/// system and the like).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mkv
