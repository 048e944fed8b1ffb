#pragma once

#include <stdexcept>
#include <string>

namespace coexist {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
  success = 0,
  config_error = 1,
  verification_failure = 2,
  solver_failure = 3,
};

/// Malformed configuration, unreadable input or unwritable output.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A bifurcation-point condition or a consistency check failed.
class VerificationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what + " (residual " + std::to_string(residual) +
                           " after " + std::to_string(iterations) +
                           " iterations)"),
        residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

} // namespace coexist
