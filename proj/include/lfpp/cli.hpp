#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfpp::cli {

enum class Verb { sample, distance, around, across, crossing, estimate, experiment, report };

std::string to_string(Verb verb);

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitWarn = 3;

// Parsed command line: the verb plus every flag that was given, by long name
// without dashes. The report verb keeps its file under "file".
struct Command {
  Verb verb = Verb::sample;
  std::map<std::string, std::string> options;

  bool has(const std::string& flag) const { return options.count(flag) != 0; }
  std::optional<std::string> get(const std::string& flag) const;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Validates the verb and flags without touching any data. Throws UsageError.
Command parse(const std::vector<std::string>& args);

int run(const Command& cmd, std::ostream& out, std::ostream& err);

// parse + run, mapping usage errors to exit code 2 and module errors to 1.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace lfpp::cli
