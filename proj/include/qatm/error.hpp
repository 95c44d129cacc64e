#pragma once

#include <stdexcept>
#include <string>

namespace qatm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (alpha <= 0, bad axes, empty input).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two operands disagree in shape or feature dimension.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kBadMagic,
  kBadVersion,
  kTruncated,
  kDimensionOverflow,
  kMalformed,
};

const char* to_string(FormatErrorKind kind) noexcept;

/// A file was readable but its contents do not follow the expected layout.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

inline const char* to_string(FormatErrorKind kind) noexcept {
  switch (kind) {
    case FormatErrorKind::kBadMagic: return "bad magic";
    case FormatErrorKind::kBadVersion: return "unsupported version";
    case FormatErrorKind::kTruncated: return "truncated payload";
    case FormatErrorKind::kDimensionOverflow: return "dimension overflow";
    case FormatErrorKind::kMalformed: return "malformed";
  }
  return "unknown";
}

}  // namespace qatm
