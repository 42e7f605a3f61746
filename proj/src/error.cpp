#include "chokemap/error.hpp"

namespace chokemap {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::ConflictingRelationship: return "ConflictingRelationship";
    case ErrorKind::MissingEdge: return "MissingEdge";
    case ErrorKind::UnknownTarget: return "UnknownTarget";
    case ErrorKind::GraphTooLarge: return "GraphTooLarge";
    case ErrorKind::MissingCountryData: return "MissingCountryData";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::AliasConflict: return "AliasConflict";
    case ErrorKind::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorKind::UnknownAttacker: return "UnknownAttacker";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::LocalNetwork: return "LocalNetworkError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::Parse,
            line == 0 ? message : "line " + std::to_string(line) + ": " + message),
      line_(line) {}

ParseError::ParseError(Raw, std::size_t line, const std::string& message)
    : Error(ErrorKind::Parse, message), line_(line) {}

ParseError ParseError::in_file(const std::string& file) const {
  return ParseError(Raw{}, line_, file + ": " + what());
}

}  // namespace chokemap
