#include "lfpp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "lfpp/config.hpp"
#include "lfpp/error.hpp"
#include "lfpp/estimate.hpp"
#include "lfpp/experiments.hpp"
#include "lfpp/field_store.hpp"
#include "lfpp/parallel.hpp"
#include "lfpp/seed.hpp"

namespace lfpp::cli {

namespace {

namespace fs = std::filesystem;

enum class Type { real, u64, path, text, point, square, target, experiment };

struct FlagSpec {
  const char* name;
  Type type;
  const char* help;
};

const FlagSpec kFlags[] = {
    {"config", Type::path, "INI configuration file ([grid], [run], [experiment])"},
    {"seed", Type::u64, "root seed; replica i uses derive_seed(seed, i)"},
    {"n", Type::u64, "lattice nodes per side (power of two)"},
    {"out", Type::path, "output directory (default: [run] output_dir)"},
    {"workers", Type::u64, "worker threads (default: all processors)"},
    {"xi", Type::real, "LFPP parameter xi"},
    {"gamma", Type::real, "LQG parameter gamma; xi is the midpoint of its enclosure"},
    {"eps", Type::real, "mollification scale"},
    {"replicas", Type::u64, "number of replicas"},
    {"quantile", Type::real, "quantile level p of alpha(xi)"},
    {"experiment", Type::experiment, "experiment name"},
    {"a", Type::point, "first point x,y"},
    {"b", Type::point, "second point x,y"},
    {"center", Type::point, "annulus centre x,y (default 0,0)"},
    {"r1", Type::real, "inner radius (default 0.5)"},
    {"r2", Type::real, "outer radius (default 1)"},
    {"square", Type::square, "square x,y,side (lower-left corner; default 0,0,1)"},
    {"target", Type::target, "a_eps | alpha | beta"},
};

const FlagSpec& flag(const std::string& name) {
  for (const auto& f : kFlags) {
    if (name == f.name) return f;
  }
  throw std::logic_error("no flag " + name);
}

struct VerbSpec {
  Verb verb;
  const char* help;
  std::vector<std::string> flags;
  bool needs_xi;
};

const std::vector<std::string> kCommon = {"config", "seed", "n", "out", "workers"};

std::vector<std::string> with_common(std::vector<std::string> extra) {
  extra.insert(extra.begin(), kCommon.begin(), kCommon.end());
  return extra;
}

const std::vector<VerbSpec>& verbs() {
  static const std::vector<VerbSpec> table = {
      {Verb::sample,
       "Sample the field of replica 0 and save it.\n"
       "Writes sample.lfpp and sample.csv (label,replica,seed,h[1],x[1],y[1]; replica = node index).",
       with_common({"eps"}), false},
      {Verb::distance,
       "D(a, b) per replica.\nWrites distance.csv (label,replica,seed,d[lfpp],hops[1]).",
       with_common({"xi", "gamma", "eps", "replicas", "a", "b"}), true},
      {Verb::around,
       "Shortest cycle around the annulus A(r1,r2)(center) per replica.\n"
       "Writes around.csv (label,replica,seed,d[lfpp],hops[1]).",
       with_common({"xi", "gamma", "eps", "replicas", "center", "r1", "r2"}), true},
      {Verb::across,
       "Distance between the boundary circles of A(r1,r2)(center) per replica.\n"
       "Writes across.csv (label,replica,seed,d[lfpp],hops[1]).",
       with_common({"xi", "gamma", "eps", "replicas", "center", "r1", "r2"}), true},
      {Verb::crossing,
       "Left-right crossing length of a square per replica.\n"
       "Writes crossing.csv (label,replica,seed,d[lfpp],hops[1]).",
       with_common({"xi", "gamma", "eps", "replicas", "square"}), true},
      {Verb::estimate,
       "Quantile estimate of a_eps (median crossing of [0,1]^2), alpha (p-quantile around A(1,2)(0)) "
       "or beta (median D(0,(1,0))).\nWrites estimate.csv (label,replica,seed,value[lfpp]).",
       with_common({"xi", "gamma", "eps", "replicas", "quantile", "target"}), true},
      {Verb::experiment,
       "Run an experiment; parameters come from the [experiment] section and the flags.\n"
       "Writes <name>.csv (label,replica,seed,<value columns with units>) and <name>.report.json.\n"
       "Exit 0 pass, 1 fail, 3 statistical-warn only.",
       with_common({"xi", "gamma", "eps", "replicas", "quantile", "experiment"}), false},
      {Verb::report,
       "Print the verdicts of a report file; with --out also write <name>.csv.\n"
       "Exit code follows the report's overall outcome.",
       {"out"}, false},
  };
  return table;
}

const VerbSpec& verb_spec(Verb v) {
  for (const auto& s : verbs()) {
    if (s.verb == v) return s;
  }
  throw std::logic_error("unknown verb");
}

bool parse_real(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return !text.empty() && ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<double> parse_tuple(const std::string& name, const std::string& text, std::size_t arity) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_real(item, v)) throw UsageError("--" + name + ": '" + text + "' is not a list of numbers");
    values.push_back(v);
  }
  if (values.size() != arity) {
    throw UsageError("--" + name + ": expected " + std::to_string(arity) + " comma-separated numbers, got '" + text + "'");
  }
  return values;
}

void check_value(const FlagSpec& f, const std::string& value) {
  const std::string name = f.name;
  switch (f.type) {
    case Type::real: {
      double v = 0.0;
      if (!parse_real(value, v)) throw UsageError("--" + name + ": '" + value + "' is not a number");
      break;
    }
    case Type::u64: {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
        throw UsageError("--" + name + ": '" + value + "' is not an unsigned integer");
      }
      break;
    }
    case Type::point: parse_tuple(name, value, 2); break;
    case Type::square: parse_tuple(name, value, 3); break;
    case Type::target:
      if (value != "a_eps" && value != "alpha" && value != "beta") {
        throw UsageError("--target must be a_eps, alpha or beta, not '" + value + "'");
      }
      break;
    case Type::experiment:
      if (!experiment_kind_from(value)) throw UsageError("--experiment: unknown experiment '" + value + "'");
      break;
    case Type::path:
    case Type::text:
      if (value.empty()) throw UsageError("--" + name + " needs a value");
      break;
  }
}

struct Parsed {
  std::optional<Command> command;
  std::string help;  // set when help was requested
};

Parsed parse_or_help(const std::vector<std::string>& args) {
  if (args.empty()) throw UsageError("no verb given");
  CLI::App app{"LFPP simulator: Gaussian free field sampling, LFPP distances, estimators and experiments",
               "lfpp"};
  app.require_subcommand(1, 1);
  app.footer("Exit codes: 0 pass, 1 failure or error, 2 usage, 3 statistical warning only.");

  struct Slot {
    Verb verb;
    CLI::App* sub;
    std::map<std::string, std::pair<CLI::Option*, std::string>> values;
  };
  std::vector<std::unique_ptr<Slot>> slots;
  std::string report_file;
  for (const auto& v : verbs()) {
    auto slot = std::make_unique<Slot>();
    slot->verb = v.verb;
    slot->sub = app.add_subcommand(to_string(v.verb), v.help);
    for (const auto& name : v.flags) {
      auto& entry = slot->values[name];
      entry.first = slot->sub->add_option("--" + name, entry.second, flag(name).help);
    }
    if (v.verb == Verb::report) {
      slot->sub->add_option("file", report_file, "report file")->required();
    }
    if (slot->values.count("xi") && slot->values.count("gamma")) {
      slot->values["gamma"].first->excludes(slot->values["xi"].first);
    }
    slots.push_back(std::move(slot));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    Parsed p;
    p.help = app.help();
    for (const auto& s : slots) {
      if (s->sub->parsed()) p.help = s->sub->help();
    }
    return p;
  } catch (const CLI::CallForAllHelp&) {
    return Parsed{std::nullopt, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ExcludesError& e) {
    throw UsageError("--gamma and --xi are mutually exclusive");
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  for (const auto& s : slots) {
    if (!s->sub->parsed()) continue;
    Command cmd;
    cmd.verb = s->verb;
    for (const auto& [name, entry] : s->values) {
      if (entry.first->count() == 0) continue;
      check_value(flag(name), entry.second);
      cmd.options[name] = entry.second;
    }
    if (cmd.verb == Verb::report) cmd.options["file"] = report_file;
    const VerbSpec& vs = verb_spec(cmd.verb);
    if (vs.needs_xi && !cmd.has("xi") && !cmd.has("gamma")) {
      throw UsageError(to_string(cmd.verb) + " needs --xi or --gamma");
    }
    if (cmd.verb == Verb::experiment && !cmd.has("experiment")) {
      throw UsageError("experiment needs --experiment NAME");
    }
    return Parsed{cmd, {}};
  }
  throw UsageError("no verb given");
}

// --- running ---------------------------------------------------------------

double real_of(const Command& cmd, const std::string& name, double fallback) {
  const auto v = cmd.get(name);
  if (!v) return fallback;
  double out = 0.0;
  parse_real(*v, out);
  return out;
}

std::uint64_t u64_of(const Command& cmd, const std::string& name, std::uint64_t fallback) {
  const auto v = cmd.get(name);
  if (!v) return fallback;
  std::uint64_t out = 0;
  std::from_chars(v->data(), v->data() + v->size(), out);
  return out;
}

Point point_of(const Command& cmd, const std::string& name, Point fallback) {
  const auto v = cmd.get(name);
  if (!v) return fallback;
  const auto t = parse_tuple(name, *v, 2);
  return {t[0], t[1]};
}

struct Setup {
  RunConfig cfg;
  GridSpec grid;
  std::uint64_t root = 1;
  unsigned workers = 0;
  fs::path out_dir;
  std::optional<FieldCache> cache;
};

Setup setup_of(const Command& cmd) {
  Setup s;
  if (const auto path = cmd.get("config")) s.cfg = read_config(*path);
  s.grid = s.cfg.grid;
  s.grid.n = static_cast<std::uint32_t>(u64_of(cmd, "n", s.grid.n));
  s.grid.validate();
  s.root = u64_of(cmd, "seed", s.cfg.root_seed);
  s.workers = static_cast<unsigned>(u64_of(cmd, "workers", s.cfg.workers));
  s.out_dir = cmd.get("out").value_or(s.cfg.output_dir.string());
  s.cache = FieldCache::from_environment(s.cfg.cache_dir);
  return s;
}

std::optional<double> xi_of(const Command& cmd, std::ostream& out) {
  if (const auto g = cmd.get("gamma")) {
    double gamma = 0.0;
    parse_real(*g, gamma);
    const auto [lo, hi] = xi_bounds_of_gamma(gamma);
    const double xi = xi_of_gamma(gamma);
    out << std::setprecision(9) << "gamma=" << gamma << ": xi in [" << lo << ", " << hi
        << "], using midpoint xi=" << xi << "\n";
    return xi;
  }
  if (cmd.has("xi")) return real_of(cmd, "xi", 0.0);
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
}

fs::path prepare_out(const Setup& s) {
  std::error_code ec;
  fs::create_directories(s.out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + s.out_dir.string() + ": " + ec.message());
  return s.out_dir;
}

std::string csv_of(std::vector<ReplicaRecord> rows) {
  Report r;
  r.per_replica = std::move(rows);
  return report_csv(r);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

int run_sample(const Command& cmd, std::ostream& out) {
  const Setup s = setup_of(cmd);
  const std::uint64_t seed = derive_seed(s.root, 0);
  Field field = sample_field(s.grid, seed);
  if (cmd.has("eps")) field = mollify(field, real_of(cmd, "eps", 0.0));
  const fs::path dir = prepare_out(s);
  save_field(field, dir / "sample.lfpp");
  std::vector<ReplicaRecord> rows;
  rows.reserve(s.grid.node_count());
  for (std::size_t k = 0; k < s.grid.node_count(); ++k) {
    const Point p = s.grid.point_of(k);
    rows.push_back({field.kind() == FieldKind::raw ? "raw" : "mollified", k, seed,
                    {{"h[1]", field.at(k)}, {"x[1]", p.x}, {"y[1]", p.y}}});
  }
  write_text(dir / "sample.csv", csv_of(std::move(rows)));
  out << "sampled seed " << seed << " on " << s.grid.n << "x" << s.grid.n << " -> "
      << (dir / "sample.lfpp").string() << "\n";
  return kExitPass;
}

int run_query(const Command& cmd, std::ostream& out) {
  const Setup s = setup_of(cmd);
  const double xi = *xi_of(cmd, out);
  const double eps = real_of(cmd, "eps", s.cfg.eps);
  const std::size_t replicas = u64_of(cmd, "replicas", 1);
  if (replicas == 0) throw Error(ErrorKind::config, "replicas must be positive");

  std::function<DistanceResult(const WeightedGrid&)> query;
  switch (cmd.verb) {
    case Verb::distance: {
      const Point a = point_of(cmd, "a", {0.0, 0.0});
      const Point b = point_of(cmd, "b", {1.0, 0.0});
      query = [a, b](const WeightedGrid& g) { return distance(g, a, b); };
      break;
    }
    case Verb::around:
    case Verb::across: {
      const AnnulusSpec ann{point_of(cmd, "center", {0.0, 0.0}), real_of(cmd, "r1", 0.5), real_of(cmd, "r2", 1.0)};
      validate_annulus(s.grid, ann);
      if (cmd.verb == Verb::around) {
        query = [ann](const WeightedGrid& g) { return around_annulus(g, ann); };
      } else {
        query = [ann](const WeightedGrid& g) { return across_annulus(g, ann); };
      }
      break;
    }
    default: {
      Square sq{{0.0, 0.0}, 1.0};
      if (const auto v = cmd.get("square")) {
        const auto t = parse_tuple("square", *v, 3);
        sq = Square{{t[0], t[1]}, t[2]};
      }
      query = [sq](const WeightedGrid& g) { return crossing_length(g, sq); };
      break;
    }
  }

  const FieldCache* cache = s.cache ? &*s.cache : nullptr;
  std::vector<ReplicaRecord> rows(replicas);
  parallel_for(replicas, s.workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(s.root, i);
    try {
      const Field f = replica_fields(s.grid, seed, {eps}, FieldSource::sampled(), cache).front();
      const DistanceResult r = query(build_weighted_grid(f, xi));
      if (!r.reachable()) throw Error(ErrorKind::geometry, "target unreachable");
      rows[i] = {to_string(cmd.verb), i, seed,
                 {{"d[lfpp]", *r.value}, {"hops[1]", static_cast<double>(r.path.empty() ? 0 : r.path.size() - 1)}}};
    } catch (const Error& e) {
      throw Error(e.kind(), "replica " + std::to_string(i) + ": " + e.detail());
    }
  });
  const fs::path dir = prepare_out(s);
  const std::string name = to_string(cmd.verb);
  write_text(dir / (name + ".csv"), csv_of(rows));
  for (const auto& r : rows) out << name << " replica " << r.replica << ": " << fmt(r.values.at("d[lfpp]")) << "\n";
  return kExitPass;
}

int run_estimate(const Command& cmd, std::ostream& out) {
  const Setup s = setup_of(cmd);
  const double xi = *xi_of(cmd, out);
  const double eps = real_of(cmd, "eps", s.cfg.eps);
  const std::string target = cmd.get("target").value_or("a_eps");
  MonteCarlo mc;
  mc.grid = s.grid;
  mc.replicas = u64_of(cmd, "replicas", s.cfg.replicas);
  mc.root_seed = s.root;
  mc.workers = s.workers;
  mc.cache = s.cache ? &*s.cache : nullptr;
  SampleSet samples;
  double p = 0.5;
  if (target == "a_eps") {
    samples = sample_a_eps(xi, eps, mc);
  } else if (target == "alpha") {
    p = real_of(cmd, "quantile", s.cfg.quantile);
    samples = sample_alpha(xi, eps, mc);
  } else {
    samples = sample_beta(xi, eps, mc);
  }
  const QuantileEstimate q = quantile_estimate(samples, p);
  std::vector<ReplicaRecord> rows;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rows.push_back({target, i, samples.seeds[i], {{"value[lfpp]", samples.values[i]}}});
  }
  const fs::path dir = prepare_out(s);
  write_text(dir / "estimate.csv", csv_of(std::move(rows)));
  out << target << " (p=" << p << ", n=" << q.n << "): " << fmt(q.point) << "  " << q.confidence * 100
      << "% CI [" << fmt(q.ci_lo) << ", " << fmt(q.ci_hi) << "]\n";
  return kExitPass;
}

int exit_of(Outcome o) {
  switch (o) {
    case Outcome::pass: return kExitPass;
    case Outcome::fail: return kExitFail;
    case Outcome::statistical_warn: return kExitWarn;
  }
  return kExitFail;
}

void print_verdicts(const Report& r, std::ostream& out) {
  for (const auto& [name, v] : r.verdicts) {
    out << "verdict " << name << ": " << to_string(v.outcome) << " [" << v.metric << "="
        << fmt(r.summary.at(v.metric)) << "] " << v.detail << "\n";
  }
  out << "overall: " << to_string(r.overall()) << "\n";
}

int run_experiment_verb(const Command& cmd, std::ostream& out) {
  const Setup s = setup_of(cmd);
  ExperimentSpec spec;
  spec.kind = *experiment_kind_from(*cmd.get("experiment"));
  spec.parameters = s.cfg.experiment;
  spec.root_seed = s.root;
  spec.grid = s.grid;
  spec.replicas = u64_of(cmd, "replicas", s.cfg.replicas);
  if (const auto xi = xi_of(cmd, out)) spec.parameters["xi"] = *xi;
  if (cmd.has("eps")) spec.parameters["eps"] = real_of(cmd, "eps", 0.0);
  if (cmd.has("quantile")) spec.parameters["quantile"] = real_of(cmd, "quantile", 0.0);
  // Run-level lists fill whatever the experiment section leaves out.
  spec.parameters.try_emplace("eps", s.cfg.eps);
  if (spec.kind == ExperimentKind::xi_infty) spec.parameters.try_emplace("quantile", s.cfg.quantile);
  if (spec.kind == ExperimentKind::continuity || spec.kind == ExperimentKind::euclidean_limit) {
    spec.parameters.try_emplace("gammas", s.cfg.gammas);
  }
  if (spec.kind == ExperimentKind::exponent_scan || spec.kind == ExperimentKind::xi_infty) {
    spec.parameters.try_emplace("xis", s.cfg.xis);
  }
  if (spec.kind == ExperimentKind::exponent_scan) spec.parameters.try_emplace("eps_ladder", s.cfg.eps_ladder);
  validate_experiment(spec);

  const RunContext ctx{s.workers, s.cache ? &*s.cache : nullptr};
  const Report report = run_experiment(spec, ctx);
  const fs::path dir = prepare_out(s);
  const std::string name = to_string(spec.kind);
  write_text(dir / (name + ".csv"), report_csv(report));
  write_report(report, dir / (name + ".report.json"), ReportWriteOptions{false});
  print_verdicts(report, out);
  return exit_of(report.overall());
}

int run_report(const Command& cmd, std::ostream& out) {
  const Report report = read_report(*cmd.get("file"));
  if (const auto dir = cmd.get("out")) {
    fs::create_directories(*dir);
    write_text(fs::path(*dir) / (to_string(report.spec.kind) + ".csv"), report_csv(report));
  }
  out << "experiment " << to_string(report.spec.kind) << (report.synthetic ? " (synthetic)" : "") << "\n";
  print_verdicts(report, out);
  return exit_of(report.overall());
}

}  // namespace

std::string to_string(Verb verb) {
  switch (verb) {
    case Verb::sample: return "sample";
    case Verb::distance: return "distance";
    case Verb::around: return "around";
    case Verb::across: return "across";
    case Verb::crossing: return "crossing";
    case Verb::estimate: return "estimate";
    case Verb::experiment: return "experiment";
    case Verb::report: return "report";
  }
  return "?";
}

std::optional<std::string> Command::get(const std::string& flag) const {
  const auto it = options.find(flag);
  if (it == options.end()) return std::nullopt;
  return it->second;
}

Command parse(const std::vector<std::string>& args) {
  Parsed p = parse_or_help(args);
  if (!p.command) throw UsageError("help requested");
  return *p.command;
}

int run(const Command& cmd, std::ostream& out, std::ostream&) {
  switch (cmd.verb) {
    case Verb::sample: return run_sample(cmd, out);
    case Verb::distance:
    case Verb::around:
    case Verb::across:
    case Verb::crossing: return run_query(cmd, out);
    case Verb::estimate: return run_estimate(cmd, out);
    case Verb::experiment: return run_experiment_verb(cmd, out);
    case Verb::report: return run_report(cmd, out);
  }
  return kExitUsage;
}

std::string usage() {
  std::ostringstream os;
  os << "usage: lfpp <verb> [flags]\n"
        "verbs: sample distance around across crossing estimate experiment report\n"
        "flags: --config PATH --seed U64 --xi F | --gamma F --eps F --n U --replicas U --out PATH\n"
        "       --quantile F --experiment NAME --workers U\n"
        "       (distance: --a x,y --b x,y; around/across: --center x,y --r1 F --r2 F;\n"
        "        crossing: --square x,y,side; estimate: --target a_eps|alpha|beta)\n"
        "experiments: continuity euclidean_limit exponent_scan xi_infty annulus_scaling weyl_check\n"
        "             invariance_check\n"
        "exit codes: 0 pass, 1 failure or error, 2 usage, 3 statistical warning only\n"
        "run 'lfpp <verb> --help' for the CSV columns of each verb\n";
  return os.str();
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Parsed parsed;
  try {
    parsed = parse_or_help(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << usage();
    return kExitUsage;
  }
  if (!parsed.command) {
    out << parsed.help;
    return kExitPass;
  }
  try {
    return run(*parsed.command, out, err);
  } catch (const Error& e) {
    err << "lfpp: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    err << "lfpp: internal error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace lfpp::cli
