#pragma once

// Oracle fixture for the weyl_check runner: an 8x8 field whose expected
// distances come from brute-force path enumeration.

#include <filesystem>
#include <random>

#include "lfpp/experiments.hpp"
#include "oracles.hpp"

inline lfpp::OracleFixture make_oracle_fixture(std::uint64_t seed = 12) {
  using namespace lfpp;
  OracleFixture fx;
  fx.grid = GridSpec{8, 1.0, 2};  // nodes at -1, -0.75, ..., 0.75
  fx.xi = 0.9;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  fx.field.resize(fx.grid.node_count());
  for (auto& v : fx.field) v = u(rng);

  Field::Provenance prov;
  prov.synthetic = true;
  const Field f(fx.grid, fx.field, prov, FieldKind::mollified, 0.0625, false);
  const WeightedGrid grid = build_weighted_grid(f, fx.xi);
  const auto graph = oracle::build(grid);
  const auto fw = oracle::floyd_warshall(graph);
  std::uniform_int_distribution<std::size_t> pick(0, fx.grid.node_count() - 1);
  for (int q = 0; q < 6; ++q) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const double brute = oracle::PathEnumerator(graph, {graph.local_of(a)}, {graph.local_of(b)}, &fw).run();
    fx.queries.push_back({fx.grid.point_of(a), fx.grid.point_of(b), brute});
  }
  return fx;
}
