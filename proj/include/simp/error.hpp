#pragma once

#include <stdexcept>
#include <string>

namespace simp {

enum class ErrorCategory { usage, data, input, structural, numeric };

/// Base of every error the library throws. The category drives CLI exit
/// codes: usage -> 1, data/input/structural -> 2, numeric -> 3.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what)
      : Error(ErrorCategory::structural, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

inline int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage:
      return 1;
    case ErrorCategory::numeric:
      return 3;
    default:
      return 2;
  }
}

}  // namespace simp
