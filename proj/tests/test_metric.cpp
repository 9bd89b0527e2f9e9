#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lfpp/error.hpp"
#include "lfpp/field.hpp"
#include "lfpp/metric.hpp"
#include "lfpp/seed.hpp"
#include "oracles.hpp"

using namespace lfpp;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no lfpp::Error thrown");
  return ErrorKind::state;
}

Field mollified_constant(const GridSpec& g, double c, double eps = 0.0) {
  return Field(g, std::vector<double>(g.node_count(), c), Field::Provenance{0, true, false, 0.0},
               FieldKind::mollified, eps, false);
}

WeightedGrid unit_grid(const GridSpec& g) { return WeightedGrid(g, 1.0, 0.0, std::vector<double>(g.node_count(), 1.0)); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Mask of the nodes (i, j) with lo <= max(|i - ci|, |j - cj|) <= hi.
RegionMask square_ring(const GridSpec& g, Node c, int lo, int hi) {
  std::vector<std::uint8_t> bits(g.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const Node v = g.node_of_index(k);
    const int d = std::max(std::abs(v.i - c.i), std::abs(v.j - c.j));
    bits[k] = (d >= lo && d <= hi) ? 1 : 0;
  }
  return RegionMask(g, std::move(bits));
}

RegionMask block(const GridSpec& g, Node lo, int side) {
  std::vector<std::uint8_t> bits(g.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const Node v = g.node_of_index(k);
    bits[k] = (v.i >= lo.i && v.j >= lo.j && v.i < lo.i + side && v.j < lo.j + side) ? 1 : 0;
  }
  return RegionMask(g, std::move(bits));
}

const GridSpec kGrid{256, 2.0, 4};

}  // namespace

// --- weighted grid ---------------------------------------------------------

TEST_CASE("weights of zero, constant and hand-made fields") {
  const GridSpec g{4, 1.0, 2};
  const WeightedGrid zero = build_weighted_grid(mollified_constant(g, 0.0), 2.5);
  for (double v : zero.weights()) CHECK(v == 1.0);
  const WeightedGrid c = build_weighted_grid(mollified_constant(g, 0.3), 2.0);
  for (double v : c.weights()) CHECK(v == std::exp(0.6));
  std::vector<double> h = {0.0, 0.1, -0.2, 0.3, 1.0, -1.0, 0.5, 0.25, 0.0, 2.0, -0.7, 0.05, 0.9, -0.45, 0.6, 0.0};
  const Field f(g, h, {}, FieldKind::mollified, 0.5, false);
  const WeightedGrid w = build_weighted_grid(f, 0.8);
  for (std::size_t k = 0; k < h.size(); ++k) CHECK(w.weight(k) == std::exp(0.8 * h[k]));
  // Edge rule: mean of endpoint weights times the Euclidean step.
  CHECK(w.edge_length(0, 1) == g.delta() * (w.weight(0) + w.weight(1)) / 2.0);
  CHECK(w.edge_length(0, 5) == std::numbers::sqrt2 * g.delta() * (w.weight(0) + w.weight(5)) / 2.0);
}

TEST_CASE("weighted grid guards") {
  const GridSpec g{4, 1.0, 2};
  CHECK(kind_of([&] { build_weighted_grid(Field::constant(g, 0.0), 1.0); }) == ErrorKind::state);
  std::vector<double> h(g.node_count(), 0.0);
  h[6] = 800.0;
  const Field f(g, h, {}, FieldKind::mollified, 0.5, false);
  try {
    build_weighted_grid(f, 1.0);
    FAIL("expected range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::range);
    CHECK(std::string(e.what()).find("(2, 1)") != std::string::npos);
  }
  CHECK_NOTHROW(build_weighted_grid(f, 0.5));
  CHECK(kind_of([&] { WeightedGrid(g, 1.0, 0.0, std::vector<double>(g.node_count(), -1.0)); }) == ErrorKind::range);
}

// --- zero-field geometry ---------------------------------------------------

TEST_CASE("zero field: straight axis and crossing lengths are exact") {
  const WeightedGrid w = build_weighted_grid(mollified_constant(kGrid, 0.0), 0.7);
  const DistanceResult d = distance(w, {0.0, 0.0}, {1.0, 0.0});
  REQUIRE(d.reachable());
  CHECK(*d.value == 1.0);
  CHECK(d.path.size() == 65);
  CHECK(path_length(w, d.path) == doctest::Approx(*d.value).epsilon(1e-9));
  const DistanceResult c = crossing_length(w, Square{{0.0, 0.0}, 1.0});
  CHECK(*c.value == 1.0);
  CHECK(*distance(w, {0.3, 0.3}, {0.3, 0.3}).value == 0.0);
}

TEST_CASE("zero field: octile ratio bounds on the pair battery") {
  const WeightedGrid w = build_weighted_grid(mollified_constant(kGrid, 0.0), 1.0);
  const double a = std::atan2(1.0, 2.0);
  for (double len : {0.25, 0.5, 1.0}) {
    for (double ang : {0.0, a}) {
      const Point b{len * std::cos(ang), len * std::sin(ang)};
      const double ratio = *distance(w, {0.0, 0.0}, b).value / len;
      CHECK(ratio >= 1.0 - 2.0 * kGrid.delta() / len);
      CHECK(ratio <= 1.083 + 4.0 * kGrid.delta() / len);
    }
  }
  // The octile worst case: direction (1, tan(pi/8)) needs sqrt(4 - 2 sqrt 2) of the distance.
  const double worst = std::sqrt(4.0 - 2.0 * std::numbers::sqrt2);
  CHECK(worst == doctest::Approx(1.0823922).epsilon(1e-7));
  const Point b{64 * kGrid.delta(), 64 * kGrid.delta() * (std::numbers::sqrt2 - 1.0)};
  const auto nb = kGrid.point_of(*kGrid.nearest(b));
  const double r = *distance(w, {0.0, 0.0}, nb).value / euclid({0.0, 0.0}, nb);
  CHECK(r <= worst + 1e-9);
  CHECK(r >= 1.08);
}

TEST_CASE("zero field: across and around the annulus A(0.25, 0.5)") {
  const GridSpec g{512, 2.0, 4};  // delta = 1/128
  const double d = g.delta();
  const WeightedGrid w = build_weighted_grid(mollified_constant(g, 0.0), 1.0);
  const AnnulusSpec ann{{0.0, 0.0}, 0.25, 0.5};
  const double across = *across_annulus(w, ann).value;
  // Both boundary bands are delta/sqrt(2) wide, so the lattice can save up to
  // sqrt(2) delta against the radial width.
  CHECK(across >= 0.25 - std::numbers::sqrt2 * d);
  CHECK(across <= 0.25 * 1.083 + 4.0 * d);
  const DistanceResult around = around_annulus(w, ann);
  CHECK(*around.value >= 2.0 * std::numbers::pi * 0.25 * (1.0 - 3.0 * d / 0.25));
  CHECK(*around.value <= 2.0 * std::numbers::pi * 0.25 * 1.083 + 8.0 * d);
  CHECK(std::abs(winding_number(g, around.path, ann.center)) == 1);
  CHECK(around.path.front() == around.path.back());
}

// --- exact Weyl scaling ----------------------------------------------------

TEST_CASE("constant shift scales every functional by exp(xi c)") {
  const double xi = 0.9;
  const double c = 0.7;
  const Field h = mollify(sample_field(kGrid, 17), 0.0625);
  const WeightedGrid a = build_weighted_grid(h, xi);
  const WeightedGrid b = build_weighted_grid(add_function(h, [c](Point) { return c; }), xi);
  const double f = std::exp(xi * c);
  const AnnulusSpec ann{{0.1, -0.2}, 0.3, 0.6};
  CHECK(rel(*distance(b, {-1.0, 0.3}, {0.8, -0.4}).value, f * *distance(a, {-1.0, 0.3}, {0.8, -0.4}).value) <= 1e-12);
  CHECK(rel(*across_annulus(b, ann).value, f * *across_annulus(a, ann).value) <= 1e-12);
  CHECK(rel(*around_annulus(b, ann).value, f * *around_annulus(a, ann).value) <= 1e-12);
  CHECK(rel(*crossing_length(b, Square{{-0.5, -0.5}, 1.0}).value, f * *crossing_length(a, Square{{-0.5, -0.5}, 1.0}).value) <= 1e-12);

  const WeightedGrid z = build_weighted_grid(mollified_constant(kGrid, 0.0), xi);
  const WeightedGrid k = build_weighted_grid(mollified_constant(kGrid, c), xi);
  CHECK(rel(*distance(k, {0.0, 0.0}, {0.4, 0.7}).value, f * *distance(z, {0.0, 0.0}, {0.4, 0.7}).value) <= 1e-12);
  CHECK(rel(*crossing_length(k, Square{{0.0, 0.0}, 1.0}).value, f) <= 1e-12);
  CHECK(rel(*around_annulus(k, ann).value, f * *around_annulus(z, ann).value) <= 1e-12);
}

TEST_CASE("shift by zero leaves distances bit-identical") {
  const Field h = mollify(sample_field(kGrid, 3), 0.0625);
  const WeightedGrid a = build_weighted_grid(h, 1.0);
  const WeightedGrid b = build_weighted_grid(add_function(h, [](Point) { return 0.0; }), 1.0);
  CHECK(*distance(a, {0.0, 0.0}, {1.0, 0.5}).value == *distance(b, {0.0, 0.0}, {1.0, 0.5}).value);
}

// --- oracle equivalence ----------------------------------------------------

TEST_CASE("distance equals simple-path enumeration on a random 5x5 block") {
  const GridSpec g{8, 1.0, 2};
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 6; ++trial) {
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 1.5));
    const RegionMask m = block(g, {1, 2}, 5);
    const auto graph = oracle::build(w, &m);
    REQUIRE(graph.size() == 25);
    std::uniform_int_distribution<std::size_t> pick(0, graph.size() - 1);
    for (int q = 0; q < 4; ++q) {
      std::size_t a = graph.global[pick(rng)];
      std::size_t b = graph.global[pick(rng)];
      if (a == b) continue;
      const double engine = *distance_nodes(w, a, b, &m).value;
      const std::size_t src = std::min(a, b);
      const std::size_t dst = std::max(a, b);
      // Branch and bound over all simple paths; the unpruned walk is checked on 3x3 and 4x4.
      const double brute = oracle::shortest_simple_path(graph, {graph.local_of(src)}, {graph.local_of(dst)});
      CHECK(engine == brute);
      CHECK(engine == distance_nodes(w, b, a, &m).value.value());
    }
  }
}

TEST_CASE("distance on the full 8x8 lattice equals pruned enumeration and Floyd-Warshall") {
  const GridSpec g{8, 1.0, 2};
  std::mt19937_64 rng(8);
  const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 2.0));
  const auto graph = oracle::build(w);
  const auto fw = oracle::floyd_warshall(graph);
  for (std::size_t a = 0; a < g.node_count(); a += 5) {
    for (std::size_t b = a + 1; b < g.node_count(); b += 7) {
      const double engine = *distance_nodes(w, a, b).value;
      CHECK(engine == doctest::Approx(fw[a][b]).epsilon(1e-13));
      CHECK(engine == oracle::shortest_simple_path(graph, {a}, {b}));
    }
  }
}

TEST_CASE("unpruned enumeration agrees with pruned on 3x3 and 4x4 lattices") {
  std::mt19937_64 rng(4);
  for (std::uint32_t n : {4u}) {
    const GridSpec g{n, 1.0, 2};
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 1.0));
    const RegionMask three = block(g, {0, 0}, 3);
    for (const RegionMask* m : {&three, static_cast<const RegionMask*>(nullptr)}) {
      const auto graph = oracle::build(w, m);
      const std::size_t last = graph.size() - 1;
      CHECK(oracle::shortest_simple_path(graph, {0}, {last}, false) ==
            oracle::shortest_simple_path(graph, {0}, {last}, true));
      CHECK(*distance_nodes(w, graph.global[0], graph.global[last], m).value ==
            oracle::shortest_simple_path(graph, {0}, {last}, false));
    }
  }
}

TEST_CASE("distance_sets equals the minimum over pairwise distances") {
  const GridSpec g{16, 1.0, 2};
  std::mt19937_64 rng(21);
  const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 1.0));
  const std::vector<std::size_t> A = {3, 40, 77, 130};
  const std::vector<std::size_t> B = {200, 255, 17, 99};
  double best = oracle::kInf;
  for (auto a : A) {
    for (auto b : B) best = std::min(best, *distance_nodes(w, a, b).value);
  }
  CHECK(*distance_sets(w, A, B).value == doctest::Approx(best).epsilon(1e-14));
  CHECK(*distance_sets(w, A, std::vector<std::size_t>{40, 1}).value == 0.0);
}

TEST_CASE("crossing_length equals enumeration on random 6x6 squares") {
  const GridSpec g{16, 1.0, 2};
  const double d = g.delta();
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 5; ++trial) {
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 1.2));
    const Square sq{g.point_of(Node{4, 5}), 5.0 * d};
    const RegionMask m = square_mask(g, sq);
    REQUIRE(m.count() == 36);
    const auto graph = oracle::build(w, &m);
    const auto left = oracle::to_local(graph, segment_nodes(g, sq.corner, {sq.corner.x, sq.corner.y + sq.side}));
    const auto right = oracle::to_local(graph, segment_nodes(g, {sq.corner.x + sq.side, sq.corner.y}, {sq.corner.x + sq.side, sq.corner.y + sq.side}));
    REQUIRE(left.size() == 6);
    CHECK(*crossing_length(w, sq).value == oracle::shortest_simple_path(graph, left, right));
  }
  // The largest square with at most 81 nodes.
  const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 1.2));
  const Square sq{g.point_of(Node{3, 3}), 8.0 * d};
  const RegionMask m = square_mask(g, sq);
  REQUIRE(m.count() == 81);
  const auto graph = oracle::build(w, &m);
  const auto left = oracle::to_local(graph, segment_nodes(g, sq.corner, {sq.corner.x, sq.corner.y + sq.side}));
  const auto right = oracle::to_local(graph, segment_nodes(g, {sq.corner.x + sq.side, sq.corner.y}, {sq.corner.x + sq.side, sq.corner.y + sq.side}));
  CHECK(*crossing_length(w, sq).value == oracle::shortest_simple_path(graph, left, right));
}

TEST_CASE("around_point equals cycle enumeration on 9x9 rings") {
  const GridSpec g{16, 1.0, 2};
  const Node c{8, 8};
  std::mt19937_64 rng(99);
  // Unit weights, 8 cells wide: the ring of Chebyshev radii 1..4.
  {
    const WeightedGrid w = unit_grid(g);
    const RegionMask m = square_ring(g, c, 1, 4);
    REQUIRE(m.count() == 80);
    const auto graph = oracle::build(w, &m);
    const double brute = oracle::shortest_cycle_around(graph, g.point_of(c));
    const DistanceResult r = around_point(w, g.point_of(c), m);
    CHECK(*r.value == doctest::Approx(brute).epsilon(1e-14));
    CHECK(*r.value == doctest::Approx(4.0 * g.delta() * std::numbers::sqrt2).epsilon(1e-14));
  }
  for (int trial = 0; trial < 6; ++trial) {
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 0.4));
    const int lo = 1 + trial % 2;
    const RegionMask m = square_ring(g, c, lo, 4);
    const auto graph = oracle::build(w, &m);
    const Point centre = g.point_of(c);
    const Point off{centre.x + 0.3 * g.delta(), centre.y + 0.45 * g.delta()};
    for (Point p : {centre, off}) {
      const double brute = oracle::shortest_cycle_around(graph, p);
      const DistanceResult r = around_point(w, p, m);
      REQUIRE(r.reachable());
      CHECK(*r.value == doctest::Approx(brute).epsilon(1e-13));
      CHECK(path_length(w, r.path) == doctest::Approx(*r.value).epsilon(1e-12));
      CHECK(std::abs(winding_number(g, r.path, p)) == 1);
    }
  }
}

TEST_CASE("around_point with holes in the ring") {
  const GridSpec g{16, 1.0, 2};
  const Node c{8, 8};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 0.6));
    RegionMask ring = square_ring(g, c, 1, 4);
    std::vector<std::uint8_t> bits(ring.bits().begin(), ring.bits().end());
    std::bernoulli_distribution drop(0.15);
    for (auto& b : bits) {
      if (b && drop(rng)) b = 0;
    }
    const RegionMask m(g, bits);
    const auto graph = oracle::build(w, &m);
    const double brute = oracle::shortest_cycle_around(graph, g.point_of(c));
    const DistanceResult r = around_point(w, g.point_of(c), m);
    if (brute == oracle::kInf) {
      CHECK_FALSE(r.reachable());
    } else {
      REQUIRE(r.reachable());
      CHECK(*r.value == doctest::Approx(brute).epsilon(1e-13));
    }
  }
}

TEST_CASE("across and around the smallest admissible annulus equal enumeration") {
  const GridSpec g{32, 2.0, 2};  // delta = 1/8
  const AnnulusSpec ann{{0.0, 0.0}, 0.25, 0.75};
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const WeightedGrid w(g, 1.0, 0.0, oracle::random_weights(g, rng, 0.3));
    const RegionMask m = annulus_mask(g, ann);
    const auto graph = oracle::build(w, &m);
    const auto inner = oracle::to_local(graph, circle_nodes(g, ann.center, ann.r1));
    const auto outer = oracle::to_local(graph, circle_nodes(g, ann.center, ann.r2));
    CHECK(*across_annulus(w, ann).value == oracle::shortest_simple_path(graph, inner, outer));
    const RegionMask open = annulus_interior_mask(g, ann);
    REQUIRE(open.count() <= 81);
    const auto ring = oracle::build(w, &open);
    CHECK(*around_annulus(w, ann).value == doctest::Approx(oracle::shortest_cycle_around(ring, ann.center)).epsilon(1e-13));
  }
}

// --- metric axioms and monotonicity ----------------------------------------

TEST_CASE("symmetry, identity and triangle inequality on random triples") {
  const Field h = mollify(sample_field(kGrid, 101), 0.0625);
  const WeightedGrid w = build_weighted_grid(h, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.9, 1.9);
  for (int q = 0; q < 40; ++q) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    const Point c{u(rng), u(rng)};
    const double ab = *distance(w, a, b).value;
    CHECK(ab == *distance(w, b, a).value);
    CHECK(*distance(w, a, a).value == 0.0);
    CHECK(*distance(w, a, c).value <= ab + *distance(w, b, c).value + 1e-9);
  }
}

TEST_CASE("enlarging the mask never increases distances") {
  const Field h = mollify(sample_field(kGrid, 102), 0.0625);
  const WeightedGrid w = build_weighted_grid(h, 1.0);
  const RegionMask small = annulus_mask(kGrid, {{0.0, 0.0}, 0.5, 0.9});
  const RegionMask large = annulus_mask(kGrid, {{0.0, 0.0}, 0.3, 1.2});
  REQUIRE(small.subset_of(large));
  const Point a{0.7, 0.0};
  const Point b{-0.7, 0.05};
  const double ds = *distance(w, a, b, &small).value;
  const double dl = *distance(w, a, b, &large).value;
  const double df = *distance(w, a, b).value;
  CHECK(dl <= ds);
  CHECK(df <= dl);
  // Shrinking the annulus never decreases the around-distance.
  CHECK(*around_annulus(w, {{0.0, 0.0}, 0.5, 0.9}).value >= *around_annulus(w, {{0.0, 0.0}, 0.3, 1.2}).value);
}

TEST_CASE("nested annuli: across is superadditive") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Field h = mollify(sample_field(kGrid, derive_seed(9, s)), 0.0625);
    const WeightedGrid w = build_weighted_grid(h, 1.0);
    const double r = 0.2;
    const double whole = *across_annulus(w, {{0.0, 0.0}, r, 4 * r}).value;
    const double inner = *across_annulus(w, {{0.0, 0.0}, r, 2 * r}).value;
    const double outer = *across_annulus(w, {{0.0, 0.0}, 2 * r, 4 * r}).value;
    CHECK(whole >= inner + outer - 1e-9);
  }
}

TEST_CASE("across geodesics meet around cycles") {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Field h = mollify(sample_field(kGrid, derive_seed(12, s)), 0.0625);
    for (double xi : {0.5, 2.0}) {
      const WeightedGrid w = build_weighted_grid(h, xi);
      const AnnulusSpec ann{{0.0, 0.0}, 0.5, 1.0};
      const DistanceResult across = across_annulus(w, ann);
      const DistanceResult around = around_annulus(w, ann);
      CHECK(polylines_meet(kGrid, across.path, around.path));
      CHECK(path_length(w, across.path) == doctest::Approx(*across.value).epsilon(1e-9));
      CHECK(path_length(w, around.path) == doctest::Approx(*around.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("across meets around when cycles hug the band edge") {
  // Replicas where a cycle dips below r1 or above r2 between boundary nodes.
  const GridSpec g{256, 2.25, 4};
  const AnnulusSpec ann{{0.0, 0.0}, 1.0, 2.0};
  const std::pair<std::uint64_t, double> cases[] = {{17, 2.0}, {23, 8.0}, {29, 8.0}, {37, 8.0}};
  for (const auto& [replica, xi] : cases) {
    const Field h = mollify(sample_field(g, derive_seed(8, replica)), 0.0625);
    const WeightedGrid w = build_weighted_grid(h, xi);
    const DistanceResult across = across_annulus(w, ann);
    const DistanceResult around = around_annulus(w, ann);
    CHECK(polylines_meet(g, across.path, around.path));
    // The across geodesic starts inside the cycle and ends outside it.
    const Point start = g.point_of(across.path.front());
    const Point end = g.point_of(across.path.back());
    CHECK(std::abs(winding_number(g, around.path, start)) == 1);
    CHECK(winding_number(g, around.path, end) == 0);
  }
}

TEST_CASE("open annulus lies strictly between the boundary bands") {
  const GridSpec g{64, 2.0, 2};
  const AnnulusSpec ann{{0.1, -0.05}, 0.5, 1.2};
  const RegionMask closed = annulus_mask(g, ann);
  const RegionMask open = annulus_interior_mask(g, ann);
  CHECK(open.subset_of(closed));
  std::vector<std::uint8_t> band(g.node_count(), 0);
  for (double r : {ann.r1, ann.r2}) {
    for (std::size_t k : circle_nodes(g, ann.center, r)) band[k] = 1;
  }
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    // The closed annulus is the open one plus the two bands, disjointly.
    CHECK(closed.contains(k) == (open.contains(k) || band[k] == 1));
    if (band[k]) CHECK_FALSE(open.contains(k));
  }
  // Shrinking the annulus shrinks the open annulus too.
  CHECK(annulus_interior_mask(g, {ann.center, 0.6, 1.0}).subset_of(open));
}

TEST_CASE("quarter rotation of field and geometry gives the same values") {
  const Field h = mollify(sample_field(kGrid, 77), 0.0625);
  const Field hr = rotate_quarter(h);
  const WeightedGrid w = build_weighted_grid(h, 1.0);
  const WeightedGrid wr = build_weighted_grid(hr, 1.0);
  auto rot = [](Point p) { return Point{-p.y, p.x}; };
  const AnnulusSpec ann{{0.25, -0.125}, 0.5, 1.0};
  const AnnulusSpec annr{rot(ann.center), 0.5, 1.0};
  CHECK(rel(*across_annulus(wr, annr).value, *across_annulus(w, ann).value) <= 1e-12);
  CHECK(rel(*around_annulus(wr, annr).value, *around_annulus(w, ann).value) <= 1e-12);
  const RegionMask m = annulus_mask(kGrid, ann);
  const RegionMask mr = annulus_mask(kGrid, annr);
  const Point a{0.25 + 0.75, -0.125};
  const Point b{0.25 - 0.75, -0.125};
  CHECK(rel(*distance(wr, rot(a), rot(b), &mr).value, *distance(w, a, b, &m).value) <= 1e-12);
}

// --- winding, meeting and errors -------------------------------------------

TEST_CASE("winding numbers and polyline meeting") {
  const GridSpec g{8, 1.0, 2};
  auto idx = [&](int i, int j) { return g.index_of(Node{i, j}); };
  const std::vector<std::size_t> square = {idx(3, 3), idx(5, 3), idx(5, 5), idx(3, 5), idx(3, 3)};
  const Point inside = g.point_of(Node{4, 4});
  CHECK(winding_number(g, square, inside) == 1);
  std::vector<std::size_t> reversed(square.rbegin(), square.rend());
  CHECK(winding_number(g, reversed, inside) == -1);
  CHECK(winding_number(g, square, g.point_of(Node{6, 6})) == 0);

  const std::vector<std::size_t> diag1 = {idx(2, 2), idx(3, 3)};
  const std::vector<std::size_t> diag2 = {idx(3, 2), idx(2, 3)};
  CHECK(polylines_meet(g, diag1, diag2));
  const std::vector<std::size_t> far = {idx(6, 6), idx(7, 7)};
  CHECK_FALSE(polylines_meet(g, diag1, far));
  const std::vector<std::size_t> shared = {idx(0, 0), idx(1, 1), idx(2, 2)};
  CHECK(polylines_meet(g, shared, diag1));
}

TEST_CASE("geometry errors and unreachable targets") {
  const WeightedGrid w = build_weighted_grid(mollified_constant(kGrid, 0.0), 1.0);
  CHECK(kind_of([&] { distance(w, {0.0, 0.0}, {3.0, 0.0}); }) == ErrorKind::geometry);
  const RegionMask m = annulus_mask(kGrid, {{0.0, 0.0}, 0.5, 1.0});
  CHECK(kind_of([&] { distance(w, {0.0, 0.0}, {0.75, 0.0}, &m); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { across_annulus(w, {{0.0, 0.0}, 0.5, 0.5 + 2 * kGrid.delta()}); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { across_annulus(w, {{0.0, 0.0}, 1.0, 1.98}); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { across_annulus(w, {{0.0, 0.0}, 0.8, 0.4}); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { around_annulus(w, {{0.0, 0.0}, kGrid.delta(), 0.5}); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { crossing_length(w, Square{{0.0, 0.0}, 2.0 * kGrid.delta()}); }) == ErrorKind::geometry);
  CHECK(kind_of([&] { crossing_length(w, Square{{1.5, 0.0}, 1.0}); }) == ErrorKind::geometry);

  // Two components: the left and right thirds of the grid.
  std::vector<std::uint8_t> bits(kGrid.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const Point p = kGrid.point_of(k);
    bits[k] = (p.x < -0.5 || p.x > 0.5) ? 1 : 0;
  }
  const RegionMask split(kGrid, bits);
  const DistanceResult r = distance(w, {-1.0, 0.0}, {1.0, 0.0}, &split);
  CHECK_FALSE(r.reachable());
  CHECK(r.path.empty());
}
