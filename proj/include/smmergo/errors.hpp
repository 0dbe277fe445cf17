#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace smmergo {

/// A parameter, configuration value or bound lies outside its valid domain.
class ParameterDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulated state became non-finite or left the admissible region.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(std::size_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A statistic cannot be evaluated on the given sample.
class StatisticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientTailError : public StatisticError {
public:
    using StatisticError::StatisticError;
};

class DegenerateTailError : public StatisticError {
public:
    using StatisticError::StatisticError;
};

class ZeroVarianceError : public StatisticError {
public:
    using StatisticError::StatisticError;
};

/// Matrix is not symmetric, not PSD, singular, or of the wrong dimension.
class MatrixDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every candidate of a search diverged or failed to produce moments.
class NoFeasibleCandidateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration; names the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace smmergo
