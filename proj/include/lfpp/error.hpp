#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfpp {

enum class ErrorKind {
  geometry,
  resolution,
  state,
  data,
  range,
  domain,
  magic_mismatch,
  version_mismatch,
  length_mismatch,
  io,
  config,
  schema,
};

std::string_view to_string(ErrorKind kind);

// Every library failure surfaces as this type; what() starts with the stable
// "<kind> error: " prefix used by the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace lfpp
