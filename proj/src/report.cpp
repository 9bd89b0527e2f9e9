#include "lfpp/report.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lfpp/error.hpp"

namespace lfpp {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "lfpp-report/1";

const std::map<ExperimentKind, std::string>& kind_names() {
  static const std::map<ExperimentKind, std::string> names = {
      {ExperimentKind::continuity, "continuity"},
      {ExperimentKind::euclidean_limit, "euclidean_limit"},
      {ExperimentKind::exponent_scan, "exponent_scan"},
      {ExperimentKind::xi_infty, "xi_infty"},
      {ExperimentKind::annulus_scaling, "annulus_scaling"},
      {ExperimentKind::weyl_check, "weyl_check"},
      {ExperimentKind::invariance_check, "invariance_check"},
  };
  return names;
}

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::schema, path + ": " + what);
}

void require_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) schema(path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) schema(path + "." + k, "unknown key");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) schema(path + "." + k, "missing key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema(path, "expected a number");
  return j.get<double>();
}

std::uint64_t get_unsigned(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) schema(path, "expected an unsigned integer");
  return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema(path, "expected a boolean");
  return j.get<bool>();
}

json param_to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

ParamValue param_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(get_number(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }
  schema(path, "expected a number, list of numbers or string");
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Shortest round-trip decimal, matching the JSON writer.
std::string format_double(double v) { return json(v).dump(); }

}  // namespace

std::string to_string(ExperimentKind kind) { return kind_names().at(kind); }

std::optional<ExperimentKind> experiment_kind_from(const std::string& name) {
  for (const auto& [k, v] : kind_names()) {
    if (v == name) return k;
  }
  return std::nullopt;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::statistical_warn: return "statistical-warn";
  }
  return "fail";
}

std::optional<Outcome> outcome_from(const std::string& name) {
  if (name == "pass") return Outcome::pass;
  if (name == "fail") return Outcome::fail;
  if (name == "statistical-warn") return Outcome::statistical_warn;
  return std::nullopt;
}

double ExperimentSpec::number(const std::string& name) const {
  const auto it = parameters.find(name);
  if (it == parameters.end()) throw Error(ErrorKind::config, "experiment parameter '" + name + "' is required");
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  throw Error(ErrorKind::config, "experiment parameter '" + name + "' must be a number");
}

double ExperimentSpec::number_or(const std::string& name, double fallback) const {
  return has(name) ? number(name) : fallback;
}

std::vector<double> ExperimentSpec::list(const std::string& name) const {
  const auto it = parameters.find(name);
  if (it == parameters.end()) throw Error(ErrorKind::config, "experiment parameter '" + name + "' is required");
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  if (const auto* d = std::get_if<double>(&it->second)) return {*d};
  throw Error(ErrorKind::config, "experiment parameter '" + name + "' must be a list of numbers");
}

std::optional<std::vector<double>> ExperimentSpec::list_if(const std::string& name) const {
  if (!has(name)) return std::nullopt;
  return list(name);
}

std::string ExperimentSpec::text_or(const std::string& name, const std::string& fallback) const {
  const auto it = parameters.find(name);
  if (it == parameters.end()) return fallback;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw Error(ErrorKind::config, "experiment parameter '" + name + "' must be text");
}

Outcome Report::overall() const {
  Outcome worst = Outcome::pass;
  for (const auto& [name, v] : verdicts) {
    if (v.outcome == Outcome::fail) return Outcome::fail;
    if (v.outcome == Outcome::statistical_warn) worst = Outcome::statistical_warn;
  }
  return worst;
}

void Report::validate() const {
  for (const auto& [name, v] : verdicts) {
    if (!summary.count(v.metric)) {
      schema("report.verdicts." + name + ".metric", "names missing summary metric '" + v.metric + "'");
    }
  }
}

// ---------------------------------------------------------------------------

std::string serialize_report(const Report& report, const ReportWriteOptions& options) {
  report.validate();
  json spec;
  spec["kind"] = to_string(report.spec.kind);
  spec["root_seed"] = report.spec.root_seed;
  spec["replicas"] = static_cast<std::uint64_t>(report.spec.replicas);
  spec["grid"] = {{"n", report.spec.grid.n},
                  {"half_width", report.spec.grid.half_width},
                  {"pad_factor", report.spec.grid.pad_factor}};
  json params = json::object();
  for (const auto& [k, v] : report.spec.parameters) params[k] = param_to_json(v);
  spec["parameters"] = params;

  json records = json::array();
  for (const auto& r : report.per_replica) {
    json values = json::object();
    for (const auto& [k, v] : r.values) values[k] = v;
    records.push_back({{"label", r.label}, {"replica", r.replica}, {"seed", r.seed}, {"values", values}});
  }
  json summary = json::object();
  for (const auto& [k, v] : report.summary) summary[k] = v;
  json verdicts = json::object();
  for (const auto& [k, v] : report.verdicts) {
    verdicts[k] = {{"outcome", to_string(v.outcome)},
                   {"metric", v.metric},
                   {"detail", v.detail},
                   {"statistical", v.statistical},
                   {"samples", v.samples},
                   {"significance", v.significance}};
  }

  json doc;
  doc["format"] = kFormat;
  doc["spec"] = spec;
  doc["synthetic"] = report.synthetic;
  doc["per_replica"] = records;
  doc["summary"] = summary;
  doc["verdicts"] = verdicts;
  doc["caveats"] = report.caveats;
  if (options.include_wall_time) doc["wall_time"] = report.wall_time;
  return doc.dump(1) + "\n";
}

Report parse_report(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema("report", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) schema("report", "expected an object");
  const bool timed = doc.contains("wall_time");
  if (timed) {
    require_keys(doc, "report", {"format", "spec", "synthetic", "per_replica", "summary", "verdicts", "caveats", "wall_time"});
  } else {
    require_keys(doc, "report", {"format", "spec", "synthetic", "per_replica", "summary", "verdicts", "caveats"});
  }
  if (get_string(doc["format"], "report.format") != kFormat) schema("report.format", "unsupported format");

  Report r;
  const json& spec = doc["spec"];
  require_keys(spec, "report.spec", {"kind", "root_seed", "replicas", "grid", "parameters"});
  const auto kind = experiment_kind_from(get_string(spec["kind"], "report.spec.kind"));
  if (!kind) schema("report.spec.kind", "unknown experiment kind");
  r.spec.kind = *kind;
  r.spec.root_seed = get_unsigned(spec["root_seed"], "report.spec.root_seed");
  r.spec.replicas = get_unsigned(spec["replicas"], "report.spec.replicas");
  const json& grid = spec["grid"];
  require_keys(grid, "report.spec.grid", {"n", "half_width", "pad_factor"});
  r.spec.grid.n = static_cast<std::uint32_t>(get_unsigned(grid["n"], "report.spec.grid.n"));
  r.spec.grid.half_width = get_number(grid["half_width"], "report.spec.grid.half_width");
  r.spec.grid.pad_factor = static_cast<std::uint32_t>(get_unsigned(grid["pad_factor"], "report.spec.grid.pad_factor"));
  if (!spec["parameters"].is_object()) schema("report.spec.parameters", "expected an object");
  for (const auto& [k, v] : spec["parameters"].items()) {
    r.spec.parameters[k] = param_from_json(v, "report.spec.parameters." + k);
  }

  r.synthetic = get_bool(doc["synthetic"], "report.synthetic");
  if (!doc["per_replica"].is_array()) schema("report.per_replica", "expected an array");
  for (std::size_t i = 0; i < doc["per_replica"].size(); ++i) {
    const std::string path = "report.per_replica[" + std::to_string(i) + "]";
    const json& rec = doc["per_replica"][i];
    require_keys(rec, path, {"label", "replica", "seed", "values"});
    ReplicaRecord out;
    out.label = get_string(rec["label"], path + ".label");
    out.replica = get_unsigned(rec["replica"], path + ".replica");
    out.seed = get_unsigned(rec["seed"], path + ".seed");
    if (!rec["values"].is_object()) schema(path + ".values", "expected an object");
    for (const auto& [k, v] : rec["values"].items()) out.values[k] = get_number(v, path + ".values." + k);
    r.per_replica.push_back(std::move(out));
  }
  if (!doc["summary"].is_object()) schema("report.summary", "expected an object");
  for (const auto& [k, v] : doc["summary"].items()) r.summary[k] = get_number(v, "report.summary." + k);
  if (!doc["verdicts"].is_object()) schema("report.verdicts", "expected an object");
  for (const auto& [k, v] : doc["verdicts"].items()) {
    const std::string path = "report.verdicts." + k;
    require_keys(v, path, {"outcome", "metric", "detail", "statistical", "samples", "significance"});
    Verdict out;
    const auto outcome = outcome_from(get_string(v["outcome"], path + ".outcome"));
    if (!outcome) schema(path + ".outcome", "unknown outcome");
    out.outcome = *outcome;
    out.metric = get_string(v["metric"], path + ".metric");
    out.detail = get_string(v["detail"], path + ".detail");
    out.statistical = get_bool(v["statistical"], path + ".statistical");
    out.samples = get_unsigned(v["samples"], path + ".samples");
    out.significance = get_number(v["significance"], path + ".significance");
    r.verdicts[k] = std::move(out);
  }
  if (!doc["caveats"].is_array()) schema("report.caveats", "expected an array");
  for (std::size_t i = 0; i < doc["caveats"].size(); ++i) {
    r.caveats.push_back(get_string(doc["caveats"][i], "report.caveats[" + std::to_string(i) + "]"));
  }
  if (timed) r.wall_time = get_number(doc["wall_time"], "report.wall_time");
  r.validate();
  return r;
}

void write_report(const Report& report, const std::filesystem::path& path,
                  const ReportWriteOptions& options) {
  const std::string text = serialize_report(report, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

std::string report_csv(const Report& report) {
  std::set<std::string> columns;
  for (const auto& r : report.per_replica) {
    for (const auto& [k, v] : r.values) columns.insert(k);
  }
  std::ostringstream os;
  os << "label,replica,seed";
  for (const auto& c : columns) os << ',' << csv_escape(c);
  os << '\n';
  for (const auto& r : report.per_replica) {
    os << csv_escape(r.label) << ',' << r.replica << ',' << r.seed;
    for (const auto& c : columns) {
      os << ',';
      if (const auto it = r.values.find(c); it != r.values.end()) os << format_double(it->second);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace lfpp
