#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fcre {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relation (class) identifier. Dense and globally unique across a task stream.
using RelationId = std::int64_t;

/// Invalid argument or violated mathematical precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Violation of the continual-learning protocol (duplicate relations, missing descriptions).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace fcre
