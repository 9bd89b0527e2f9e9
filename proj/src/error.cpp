#include "lfpp/error.hpp"

namespace lfpp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::state: return "state";
    case ErrorKind::data: return "data";
    case ErrorKind::range: return "range";
    case ErrorKind::domain: return "domain";
    case ErrorKind::magic_mismatch: return "magic-mismatch";
    case ErrorKind::version_mismatch: return "version-mismatch";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
      kind_(kind),
      detail_(message) {}

}  // namespace lfpp
