#include "lfpp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lfpp/error.hpp"

namespace lfpp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool try_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

double number_of(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!try_number(text, v)) throw Error(ErrorKind::config, key + ": '" + text + "' is not a number");
  return v;
}

double ranged(const std::string& key, const std::string& text, double lo, double hi, bool lo_open,
              bool hi_open, const std::string& range) {
  const double v = number_of(key, text);
  const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  if (!ok) throw Error(ErrorKind::config, key + "=" + trim(text) + " outside accepted range " + range);
  return v;
}

std::uint64_t unsigned_of(const std::string& key, const std::string& text, std::uint64_t lo,
                          std::uint64_t hi, const std::string& range) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorKind::config, key + ": '" + text + "' is not an unsigned integer");
  }
  if (v < lo || v > hi) throw Error(ErrorKind::config, key + "=" + t + " outside accepted range " + range);
  return v;
}

void check_all(const std::string& key, const std::vector<double>& values, double lo, double hi,
               const std::string& range) {
  if (values.empty()) throw Error(ErrorKind::config, key + " must not be empty");
  for (double v : values) {
    if (!(v > lo && v < hi)) {
      std::ostringstream os;
      os << key << " value " << v << " outside accepted range " << range;
      throw Error(ErrorKind::config, os.str());
    }
  }
}

}  // namespace

const std::vector<std::string>& experiment_parameter_keys() {
  static const std::vector<std::string> keys = {
      "bump_amplitude", "bump_radius", "c",          "eps",           "eps_ladder",
      "fixture",        "gammas",      "hook",       "hook_c",        "inject_slope",
      "inject_slopes",  "quantile",    "queries",    "r1",            "r2",
      "radii",          "translate_x", "translate_y", "xi",           "xis",
  };
  return keys;
}

RunConfig::RunConfig()
    : eps_ladder(parse_ladder("2^-3..2^-7")),
      xis{0.2, 0.408248, 0.8, 1.6},
      gammas{1.0, 1.05, 1.5} {}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!try_number(item, v)) throw Error(ErrorKind::config, "'" + trim(item) + "' in list '" + text + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_ladder(const std::string& text) {
  const std::string t = trim(text);
  const auto dots = t.find("..");
  if (dots == std::string::npos) return parse_list(t);
  auto exponent = [&](const std::string& part) {
    const std::string p = trim(part);
    if (p.rfind("2^", 0) != 0) throw Error(ErrorKind::config, "ladder bound '" + p + "' must look like 2^k");
    const double k = number_of("ladder", p.substr(2));
    if (k != std::floor(k)) throw Error(ErrorKind::config, "ladder exponent '" + p + "' must be an integer");
    return static_cast<int>(k);
  };
  const int from = exponent(t.substr(0, dots));
  const int to = exponent(t.substr(dots + 2));
  const int step = from <= to ? 1 : -1;
  std::vector<double> out;
  for (int k = from;; k += step) {
    out.push_back(std::ldexp(1.0, k));
    if (k == to) break;
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::config, std::string("malformed configuration: ") + e.message() +
                                       " at line " + std::to_string(e.line()));
  }

  RunConfig cfg;
  const auto& experiment_keys = experiment_parameter_keys();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::config, "key '" + section + "' must sit inside a [grid], [run] or [experiment] section");
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      const std::string value = node.data();
      if (section == "grid") {
        if (name == "n") {
          const auto n = unsigned_of(key, value, 8, 8192, "[8, 8192], power of two");
          if ((n & (n - 1)) != 0) throw Error(ErrorKind::config, key + "=" + value + " outside accepted range [8, 8192], power of two");
          cfg.grid.n = static_cast<std::uint32_t>(n);
        } else if (name == "half_width") {
          cfg.grid.half_width = ranged(key, value, 0.0, 1e6, true, false, "(0, 1e6]");
        } else if (name == "pad_factor") {
          cfg.grid.pad_factor = static_cast<std::uint32_t>(unsigned_of(key, value, 2, 16, "[2, 16]"));
        } else {
          throw Error(ErrorKind::config, "unknown key '" + key + "'");
        }
      } else if (section == "run") {
        if (name == "root_seed") {
          cfg.root_seed = unsigned_of(key, value, 0, std::numeric_limits<std::uint64_t>::max(), "[0, 2^64)");
        } else if (name == "replicas") {
          cfg.replicas = unsigned_of(key, value, 1, 1000000, "[1, 1000000]");
        } else if (name == "eps") {
          cfg.eps = ranged(key, value, 0.0, 1.0, true, false, "(0, 1]");
        } else if (name == "eps_ladder") {
          cfg.eps_ladder = parse_ladder(value);
          check_all(key, cfg.eps_ladder, 0.0, 1.0 + 1e-12, "(0, 1]");
        } else if (name == "xis") {
          cfg.xis = parse_list(value);
          check_all(key, cfg.xis, 0.0, 100.0 + 1e-12, "(0, 100]");
        } else if (name == "gammas") {
          cfg.gammas = parse_list(value);
          check_all(key, cfg.gammas, 0.0, 2.0, "(0, 2)");
        } else if (name == "quantile") {
          cfg.quantile = ranged(key, value, 0.0, 1.0, true, true, "(0, 1)");
        } else if (name == "output_dir") {
          cfg.output_dir = trim(value);
        } else if (name == "cache_dir") {
          cfg.cache_dir = trim(value);
        } else if (name == "workers") {
          cfg.workers = static_cast<unsigned>(unsigned_of(key, value, 0, 1024, "[0, 1024]"));
        } else {
          throw Error(ErrorKind::config, "unknown key '" + key + "'");
        }
      } else if (section == "experiment") {
        if (std::find(experiment_keys.begin(), experiment_keys.end(), name) == experiment_keys.end()) {
          throw Error(ErrorKind::config, "unknown key '" + key + "'");
        }
        const std::string t = trim(value);
        double v = 0.0;
        if (name == "eps_ladder") {
          cfg.experiment[name] = parse_ladder(t);
        } else if (try_number(t, v)) {
          cfg.experiment[name] = v;
        } else if (t.find(',') != std::string::npos) {
          cfg.experiment[name] = parse_list(t);
        } else {
          cfg.experiment[name] = t;
        }
      } else {
        throw Error(ErrorKind::config, "unknown section '[" + section + "]'");
      }
    }
  }
  if (cfg.grid.half_width <= 0.0) throw Error(ErrorKind::config, "grid.half_width must be positive");
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open configuration " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace lfpp
