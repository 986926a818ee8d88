#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace docalc {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A variable name that the graph does not know about.
class NameError : public Error {
public:
  using Error::Error;
};

/// A precondition on arguments was violated (overlapping sets, latent
/// variables where only observed ones are allowed, etc.).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A malformed expression: duplicate variables in a term, dangling or
/// unused summation binders, and similar structural defects.
class StructureError : public Error {
public:
  using Error::Error;
};

/// A hard resource cap was exceeded (joint-table size, subset caps).
class ResourceError : public Error {
public:
  using Error::Error;
};

/// Conditioning on an event of probability zero. This is an explicit
/// signal, never a silent NaN.
class UndefinedConditional : public Error {
public:
  using Error::Error;
};

/// Syntax error while parsing text input; carries the byte offset.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

}  // namespace docalc
