#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bectwist {

/// Base for every error raised by the library. `code()` is a stable
/// machine-readable identifier used in the CLI's error JSON.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string &what)
        : std::runtime_error(what), code_(std::move(code)) {}
    [[nodiscard]] const std::string &code() const noexcept { return code_; }

  private:
    std::string code_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string &what) : Error("config", what) {}
    ConfigError(std::string code, const std::string &what)
        : Error(std::move(code), what) {}
};

/// Non-finite values appeared while integrating.
class IntegrationError : public Error {
  public:
    IntegrationError(std::size_t step, const std::string &what)
        : Error("integration", what + " (step " + std::to_string(step) + ")"),
          step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

class ConvergenceError : public Error {
  public:
    explicit ConvergenceError(const std::string &what)
        : Error("convergence", what) {}
};

/// A quantity is mathematically undefined for the given inputs
/// (zero population, zero visibility, ...).
class UndefinedQuantity : public Error {
  public:
    explicit UndefinedQuantity(const std::string &what)
        : Error("undefined", what) {}
};

} // namespace bectwist
