#pragma once

#include <stdexcept>
#include <string>

namespace linconv {

enum class ErrorKind { Input, Numerical, Precondition, Capability };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Capability: return "capability";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& m) : Error(ErrorKind::Input, m) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& m) : Error(ErrorKind::Numerical, m) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& m) : Error(ErrorKind::Precondition, m) {}
};

struct CapabilityError : Error {
  explicit CapabilityError(const std::string& m) : Error(ErrorKind::Capability, m) {}
};

}  // namespace linconv
