// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gazedec {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A metric is undefined for the given inputs (e.g. both boxes degenerate).
struct MetricError : Error {
  using Error::Error;
};

/// Malformed input file. Message carries source name and line number.
struct FormatError : Error {
  using Error::Error;
  static FormatError at(const std::string& source, std::size_t line,
                        const std::string& what) {
    return FormatError(source + ":" + std::to_string(line) + ": " + what);
  }
};

/// Invalid or inconsistent configuration value.
struct ConfigError : Error {
  using Error::Error;
};

/// Cross-file or cross-record inconsistency (dangling ids, count mismatches).
struct ConsistencyError : Error {
  using Error::Error;
};

/// Operation called outside its domain (no visible object, empty window, ...).
struct DomainError : Error {
  using Error::Error;
};

}  // namespace gazedec
