#pragma once

#include <stdexcept>
#include <string>

namespace qrfx {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad column names, duplicate columns, header mismatch.
struct SchemaError : Error {
  using Error::Error;
};

// Malformed cell/file contents.
struct ParseError : Error {
  using Error::Error;
};

// Violated preconditions (empty input, k > n, lambda < 0, ...).
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace qrfx
