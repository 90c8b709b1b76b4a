#include "potl/errors.hpp"

namespace potl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::MissingItem: return "MissingItem";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnknownHandler: return "UnknownHandler";
    case ErrorCode::UnknownPolicy: return "UnknownPolicy";
    case ErrorCode::FetchFailed: return "FetchFailed";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorCode::MissingFragment: return "MissingFragment";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

std::string Error::format(ErrorCode code, const std::string& message,
                          const std::string& path) {
  std::string out(error_code_name(code));
  out += ": ";
  out += message;
  if (!path.empty()) {
    out += " (at ";
    out += path;
    out += ")";
  }
  return out;
}

}  // namespace potl
