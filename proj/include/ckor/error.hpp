#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ckor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a precondition (shapes, ranges).
class InputError : public Error {
public:
    using Error::Error;
};

/// A factorization or decomposition could not be completed.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> attempted_jitter = {})
        : Error(what), jitter_(std::move(attempted_jitter)) {}

    const std::vector<double>& attempted_jitter() const noexcept { return jitter_; }

private:
    std::vector<double> jitter_;
};

/// Malformed CSV/model/config file content.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Integration produced a non-finite or divergent state.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Rollout of a fitted model left the finite range.
class PredictionError : public Error {
public:
    PredictionError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Operation is not defined for the given model configuration.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration is invalid; `path` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace ckor
