#pragma once

#include <stdexcept>
#include <string>

namespace affreq {

// Input violates a documented precondition or invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Lookup of a name that does not exist (catalog label, channel, ...).
class NotFoundError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// A time function outside the closed algebra was asked for something that
// needs symbolic treatment (derivatives, serialization).
class UnsupportedSpecError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Malformed text input: CSV files, config files, expressions.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace affreq
