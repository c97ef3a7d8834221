#pragma once

#include <stdexcept>
#include <string>

namespace screloc {

/// Malformed text input (world files, scan files, pose files). Messages name
/// the offending line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a configuration requirement
/// (missing bounds, bad sensor parameters, out-of-range knobs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container problems: bad magic, unsupported version, truncation,
/// checksum mismatch. Messages name the byte offset where reading failed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A well-formed file whose contents break a library invariant (dangling
/// member ids, inconsistent derived vectors, ...).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input too small or too ill-conditioned for the requested operation.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace screloc
