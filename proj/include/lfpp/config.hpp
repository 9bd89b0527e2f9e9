#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lfpp/grid.hpp"
#include "lfpp/report.hpp"

namespace lfpp {

// Run configuration, read from an INI-style file with [grid], [run] and
// [experiment] sections. Every key has a default; unknown keys are rejected.
struct RunConfig {
  GridSpec grid;                                  // [grid] n, half_width, pad_factor
  std::uint64_t root_seed = 1;                    // [run] root_seed
  std::size_t replicas = 64;                      // [run] replicas
  double eps = 0.0625;                            // [run] eps
  std::vector<double> eps_ladder;                 // [run] eps_ladder, default 2^-3..2^-7
  std::vector<double> xis;                        // [run] xis
  std::vector<double> gammas;                     // [run] gammas
  double quantile = 0.9;                          // [run] quantile, the level of alpha(xi)
  std::filesystem::path output_dir = ".";         // [run] output_dir
  std::filesystem::path cache_dir;                // [run] cache_dir, empty: no cache
  unsigned workers = 0;                           // [run] workers, 0: all processors
  std::map<std::string, ParamValue> experiment;   // [experiment] runner parameters

  RunConfig();
};

RunConfig read_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

// "2^-3..2^-7" expands to {1/8, ..., 1/128}; otherwise a comma-separated list.
std::vector<double> parse_ladder(const std::string& text);
std::vector<double> parse_list(const std::string& text);

// Keys accepted in the [experiment] section.
const std::vector<std::string>& experiment_parameter_keys();

}  // namespace lfpp
