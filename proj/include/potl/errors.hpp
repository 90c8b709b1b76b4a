#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace potl {

enum class ErrorCode {
  MalformedDocument,
  SchemaViolation,
  DuplicateLabel,
  SyntaxError,
  TypeError,
  MissingItem,
  TooLarge,
  UnknownHandler,
  UnknownPolicy,
  FetchFailed,
  Infeasible,
  PoolTooSmall,
  SearchSpaceTooLarge,
  MissingFragment,
  DuplicateInstance,
  StorageError,
  DomainError,
  ConfigError,
  IoError,
  Internal,
};

std::string_view error_code_name(ErrorCode code);

/// Carries a machine-readable code plus the document/model path the
/// problem was detected at (empty when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string path = {})
      : std::runtime_error(format(code, message, path)),
        code_(code),
        message_(std::move(message)),
        path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& path() const noexcept { return path_; }

  /// Same error with a location attached (used to tag engine errors with
  /// the region path they surfaced at).
  Error at(const std::string& path) const {
    return path_.empty() ? Error(code_, message_, path) : *this;
  }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            const std::string& path);

  ErrorCode code_;
  std::string message_;
  std::string path_;
};

[[noreturn]] inline void raise(ErrorCode code, std::string message,
                               std::string path = {}) {
  throw Error(code, std::move(message), std::move(path));
}

}  // namespace potl
