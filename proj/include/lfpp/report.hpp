#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lfpp/grid.hpp"

namespace lfpp {

enum class ExperimentKind {
  continuity,
  euclidean_limit,
  exponent_scan,
  xi_infty,
  annulus_scaling,
  weyl_check,
  invariance_check,
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_kind_from(const std::string& name);

using ParamValue = std::variant<double, std::vector<double>, std::string>;

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::weyl_check;
  std::map<std::string, ParamValue> parameters;
  std::uint64_t root_seed = 1;
  GridSpec grid;
  std::size_t replicas = 64;

  double number(const std::string& name) const;
  double number_or(const std::string& name, double fallback) const;
  std::vector<double> list(const std::string& name) const;
  std::optional<std::vector<double>> list_if(const std::string& name) const;
  std::string text_or(const std::string& name, const std::string& fallback) const;
  bool has(const std::string& name) const { return parameters.count(name) != 0; }

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

enum class Outcome { pass, fail, statistical_warn };

std::string to_string(Outcome outcome);
std::optional<Outcome> outcome_from(const std::string& name);

struct Verdict {
  Outcome outcome = Outcome::pass;
  std::string metric;  // key into Report::summary
  std::string detail;
  bool statistical = false;
  std::uint64_t samples = 0;  // statistical checks only
  double significance = 0.0;  // statistical checks only

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ReplicaRecord {
  std::string label;
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> values;  // column name with unit, e.g. "d[lfpp]"

  friend bool operator==(const ReplicaRecord&, const ReplicaRecord&) = default;
};

struct Report {
  ExperimentSpec spec;
  bool synthetic = false;
  std::vector<ReplicaRecord> per_replica;
  std::map<std::string, double> summary;
  std::map<std::string, Verdict> verdicts;
  std::vector<std::string> caveats;
  double wall_time = 0.0;

  // Worst outcome: fail over statistical-warn over pass.
  Outcome overall() const;
  // Throws lfpp::Error(schema) when a verdict names a missing summary metric.
  void validate() const;

  friend bool operator==(const Report&, const Report&) = default;
};

struct ReportWriteOptions {
  bool include_wall_time = true;
};

// Pretty-printed JSON with sorted keys and shortest round-trip floats.
std::string serialize_report(const Report& report, const ReportWriteOptions& options = {});
Report parse_report(const std::string& text);
void write_report(const Report& report, const std::filesystem::path& path,
                  const ReportWriteOptions& options = {});
Report read_report(const std::filesystem::path& path);

// One row per replica record: label, replica, seed, then the union of value
// columns in sorted order.
std::string report_csv(const Report& report);

}  // namespace lfpp
