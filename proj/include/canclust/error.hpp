#pragma once

#include <stdexcept>
#include <string>

namespace canclust {

/// Base of every error the library raises.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or run configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Input data that cannot be analyzed (CLI exit code 3).
class DataError : public Error {
public:
  using Error::Error;
};

class ParseError : public DataError {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// An iterative solver failed to converge.
class NumericError : public DataError {
public:
  NumericError(const std::string& what, double residual)
      : DataError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

} // namespace canclust
