#pragma once

#include <filesystem>
#include <string>

#include "lfpp/estimate.hpp"
#include "lfpp/field_store.hpp"
#include "lfpp/report.hpp"

namespace lfpp {

struct RunContext {
  unsigned workers = 0;
  const FieldCache* cache = nullptr;
};

// Parameters read by the runners (all optional unless noted):
//   common           eps (1/16), hook ("none" | "zero" | "constant"), hook_c
//   continuity       gammas (required, >= 3, increasing)
//   euclidean_limit  gammas (required, decreasing)
//   exponent_scan    xis (required), eps_ladder (2^-3..2^-7), inject_slopes
//   xi_infty         xis (required, increasing, >= 1), quantile (0.9)
//   annulus_scaling  xi (required), radii (required), eps_ladder, inject_slope
//   weyl_check       xi (required), c, bump_amplitude, bump_radius, queries (50), fixture
//   invariance_check xi (required), r1 (0.25), r2 (0.5), translate_x (0.5), translate_y (0)
Report run_continuity(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_euclidean_limit(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_exponent_scan(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_xi_infty(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_annulus_scaling(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_weyl_check(const ExperimentSpec& spec, const RunContext& ctx = {});
Report run_invariance_check(const ExperimentSpec& spec, const RunContext& ctx = {});

Report run_experiment(const ExperimentSpec& spec, const RunContext& ctx = {});

// Checks that the parameters needed by spec.kind are present and sane.
void validate_experiment(const ExperimentSpec& spec);

// Pair battery used by the Euclidean-limit runner: lengths 0.25, 0.5, 1 from
// the origin along the x axis and along the direction (2, 1).
std::vector<std::pair<Point, Point>> euclidean_pair_battery();

// Small-grid distance fixture: a mollified field, xi, and point queries with
// expected distances.
struct OracleFixture {
  GridSpec grid;
  double xi = 1.0;
  std::vector<double> field;
  struct Query {
    Point a;
    Point b;
    double expected = 0.0;
  };
  std::vector<Query> queries;
};

void write_fixture(const OracleFixture& fixture, const std::filesystem::path& path);
OracleFixture read_fixture(const std::filesystem::path& path);

}  // namespace lfpp
