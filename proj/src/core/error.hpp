#pragma once

#include <stdexcept>
#include <string>

namespace ncf {

enum class ErrorCode {
  kInvalidArgument = 1,
  kNumerical = 2,
  kIo = 3,
  kFormat = 4,
  kDiverged = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::kInvalidArgument, what) {}
};

// Raised when a forward/backward pass produces a non-finite value.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int layer)
      : Error(ErrorCode::kNumerical, what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorCode::kDiverged, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCode::kFormat, what) {}
};

}  // namespace ncf
