#pragma once

#include <stdexcept>
#include <string>

namespace s3dc {

// Error categories. Each maps onto one status code of the C API.
enum class ErrorKind {
  kDomain = 1,      // argument outside an operation's domain
  kParse,           // malformed text input (OBJ/MTL/config)
  kIo,              // filesystem failure
  kFormat,          // malformed binary input (S3DC, edge payloads)
  kBadMagic,
  kTruncated,
  kUnknownVersion,
  kBackend,         // generative backend or transport failure
  kValidation,      // malformed user-supplied ranking/session data
  kConflict,        // duplicate submission
  kNotFound,
  kNoObject,        // background masking consumed the whole image
  kEmptyDescriptor,
  kUsage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace s3dc
