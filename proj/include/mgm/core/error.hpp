//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_CORE_ERROR_HPP_
#define MGM_CORE_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgm {

/// Base class for all mgmlab errors.
class Error: public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (SMILES, patterns, config, ...). Carries the byte
/// offset of the offending character when known.
class ParseError: public Error {
 public:
  ParseError(const std::string &what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) { }

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Structurally invalid data: bad files, out-of-range indices, contract
/// violations on graphs and fragments.
class DataError: public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor shapes or dimension mismatches.
class ShapeError: public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed gradient checks, aborted optimizer steps.
class NumericalError: public Error {
 public:
  using Error::Error;
};

}  // namespace mgm

#endif  // MGM_CORE_ERROR_HPP_
