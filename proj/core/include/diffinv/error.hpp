#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffinv {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected,
              const std::string& found);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownFunction : public Error {
 public:
  UnknownFunction(std::string name, std::size_t offset);
  const std::string& name() const { return name_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string name_;
  std::size_t offset_;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(std::string name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class DomainError : public Error {
 public:
  explicit DomainError(std::string kind);
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class InvalidBinding : public Error {
 public:
  using Error::Error;
};

class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

class OrderExceeded : public Error {
 public:
  using Error::Error;
};

class DegenerateFrame : public Error {
 public:
  using Error::Error;
};

class WrongArity : public Error {
 public:
  using Error::Error;
};

class SingularTransform : public Error {
 public:
  using Error::Error;
};

class SingularFrame : public Error {
 public:
  using Error::Error;
};

class AntiderivativeMismatch : public Error {
 public:
  AntiderivativeMismatch(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NotOnLevelSet : public Error {
 public:
  using Error::Error;
};

class FlowEscaped : public Error {
 public:
  using Error::Error;
};

class ZeroCoefficient : public Error {
 public:
  using Error::Error;
};

class SingularForSampledCtilde : public Error {
 public:
  using Error::Error;
};

class SingularJacobiMatrix : public Error {
 public:
  SingularJacobiMatrix(std::string block)
      : Error("singular Jacobi matrix block: " + block), block_(std::move(block)) {}
  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

/// Malformed problem description (bad counts, unparsable strings, bad JSON).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffinv
