#pragma once

#include <stdexcept>
#include <string>

namespace rankmbo {

// Argument or shape violation detected at an API boundary.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite value encountered while training or searching.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite gradient during design search.
class SearchAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Surrogate whose in-distribution predictions have zero spread.
class DegenerateModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rank correlation requested for a vector without rank variance.
class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace rankmbo
