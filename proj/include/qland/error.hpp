#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qland {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation (bad probability, index, shape).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Requested state does not fit the configured qubit budget.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A numerical routine failed or produced an unphysical result.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file or configuration.
class ParseError : public Error {
  public:
    ParseError(const std::string &source, std::size_t line,
               const std::string &what)
        : Error(source + ":" + std::to_string(line) + ": " + what),
          line_(line) {}
    explicit ParseError(const std::string &what) : Error(what) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_ = 0;
};

/// A cost-function evaluation failed while sampling a landscape.
class EvaluationError : public Error {
  public:
    EvaluationError(std::size_t point_index, const std::string &what)
        : Error("cost evaluation failed at point " +
                std::to_string(point_index) + ": " + what),
          point_index_(point_index) {}

    [[nodiscard]] std::size_t point_index() const noexcept {
        return point_index_;
    }

  private:
    std::size_t point_index_;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace qland
