#include "diffinv/error.hpp"

namespace diffinv {

namespace {

std::string syntax_message(std::size_t offset, const std::vector<std::string>& expected,
                           const std::string& found) {
  std::string msg = "syntax error at offset " + std::to_string(offset) + ": found " + found;
  if (!expected.empty()) {
    msg += ", expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += ", ";
      msg += expected[i];
    }
    msg += "}";
  }
  return msg;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& found)
    : Error(syntax_message(offset, expected, found)),
      offset_(offset),
      expected_(std::move(expected)) {}

UnknownFunction::UnknownFunction(std::string name, std::size_t offset)
    : Error("unknown function '" + name + "' at offset " + std::to_string(offset)),
      name_(std::move(name)),
      offset_(offset) {}

UnboundSymbol::UnboundSymbol(std::string name)
    : Error("unbound symbol '" + name + "'"), name_(std::move(name)) {}

DomainError::DomainError(std::string kind)
    : Error("domain error: " + kind), kind_(std::move(kind)) {}

}  // namespace diffinv
