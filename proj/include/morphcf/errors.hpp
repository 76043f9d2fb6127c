#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morphcf {

/// Malformed input text (e.g. a `.ts` data line).
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Well-formed input that violates a structural constraint (ragged dataset, ...).
class StructuralError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a result (singular system, failed decomposition).
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The black-box regressor failed while scoring a candidate.
class EvaluationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A lookup with no admissible answer (e.g. no nearest-unlike neighbour).
class NotFoundError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace morphcf
