#include "lfpp/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "lfpp/error.hpp"

namespace lfpp {

namespace {

constexpr int kNeighbourOffsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                         {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

std::string describe(Point p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

// Admitted nodes renumbered densely in increasing global order, so comparing
// local ids is the same as comparing global node indices.
class LocalLattice {
 public:
  LocalLattice(const GridSpec& spec, const RegionMask* mask) : spec_(spec) {
    if (mask == nullptr) {
      identity_ = true;
      size_ = spec.node_count();
      return;
    }
    local_of_.assign(spec.node_count(), -1);
    global_.reserve(mask->count());
    for (std::size_t g = 0; g < spec.node_count(); ++g) {
      if (mask->contains(g)) {
        local_of_[g] = static_cast<std::int64_t>(global_.size());
        global_.push_back(g);
      }
    }
    size_ = global_.size();
  }

  std::size_t size() const { return size_; }
  std::size_t global(std::size_t local) const { return identity_ ? local : global_[local]; }
  std::int64_t local(std::size_t global) const {
    return identity_ ? static_cast<std::int64_t>(global) : local_of_[global];
  }

  template <typename Emit>
  void for_each_neighbour(std::size_t local_u, Emit&& emit) const {
    const std::size_t gu = global(local_u);
    const Node u = spec_.node_of_index(gu);
    for (const auto& off : kNeighbourOffsets) {
      const Node v{u.i + off[0], u.j + off[1]};
      if (!spec_.contains(v)) continue;
      const std::size_t gv = spec_.index_of(v);
      const std::int64_t lv = local(gv);
      if (lv < 0) continue;
      emit(static_cast<std::size_t>(lv), gu, gv);
    }
  }

 private:
  const GridSpec& spec_;
  bool identity_ = false;
  std::size_t size_ = 0;
  std::vector<std::size_t> global_;
  std::vector<std::int64_t> local_of_;
};

// Label-setting search with a binary heap. Heap order is (distance, state id),
// and an equal-length relaxation moves the predecessor to the smaller id, so
// witnesses do not depend on traversal accidents.
class Search {
 public:
  explicit Search(std::size_t states)
      : dist_(states, std::numeric_limits<double>::infinity()),
        pred_(states, -1),
        settled_(states, 0) {}

  void reset() {
    for (std::size_t s : touched_) {
      dist_[s] = std::numeric_limits<double>::infinity();
      pred_[s] = -1;
      settled_[s] = 0;
    }
    touched_.clear();
  }

  // Runs from all sources at distance zero until a target state is settled
  // or the next label reaches prune_at. Returns the settled target.
  template <typename IsTarget, typename Expand>
  std::optional<std::size_t> run(std::span<const std::size_t> sources, IsTarget&& is_target,
                                 Expand&& expand, double prune_at, std::uint64_t& relaxations) {
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (std::size_t s : sources) {
      if (dist_[s] == 0.0) continue;
      touch(s);
      dist_[s] = 0.0;
      heap.emplace(0.0, s);
    }
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (settled_[u] || d > dist_[u]) continue;
      if (d >= prune_at) return std::nullopt;
      settled_[u] = 1;
      if (is_target(u)) return u;
      expand(u, [&](std::size_t v, double len) {
        if (settled_[v]) return;
        ++relaxations;
        const double nd = d + len;
        if (nd < dist_[v]) {
          touch(v);
          dist_[v] = nd;
          pred_[v] = static_cast<std::int64_t>(u);
          heap.emplace(nd, v);
        } else if (nd == dist_[v] && static_cast<std::int64_t>(u) < pred_[v]) {
          pred_[v] = static_cast<std::int64_t>(u);
        }
      });
    }
    return std::nullopt;
  }

  double dist(std::size_t s) const { return dist_[s]; }

  std::vector<std::size_t> trace(std::size_t target) const {
    std::vector<std::size_t> states;
    for (std::int64_t s = static_cast<std::int64_t>(target); s >= 0; s = pred_[s]) {
      states.push_back(static_cast<std::size_t>(s));
    }
    std::reverse(states.begin(), states.end());
    return states;
  }

 private:
  void touch(std::size_t s) {
    if (dist_[s] == std::numeric_limits<double>::infinity() && pred_[s] < 0 && !settled_[s]) {
      touched_.push_back(s);
    }
  }

  std::vector<double> dist_;
  std::vector<std::int64_t> pred_;
  std::vector<std::uint8_t> settled_;
  std::vector<std::size_t> touched_;
};

std::size_t node_for(const GridSpec& spec, Point p, const RegionMask* mask, const char* role) {
  const auto v = spec.nearest(p);
  if (!v) throw Error(ErrorKind::geometry, std::string(role) + " " + describe(p) + " is outside the grid");
  const std::size_t idx = spec.index_of(*v);
  if (mask != nullptr && !mask->contains(idx)) {
    throw Error(ErrorKind::geometry, std::string(role) + " " + describe(p) + " is outside the mask");
  }
  return idx;
}

void require_same_grid(const WeightedGrid& grid, const RegionMask* mask) {
  if (mask != nullptr && !(mask->spec() == grid.spec())) {
    throw Error(ErrorKind::geometry, "mask and weighted grid use different lattices");
  }
}

DistanceResult multi_source(const WeightedGrid& grid, std::span<const std::size_t> from,
                            std::span<const std::size_t> to, const RegionMask* mask) {
  require_same_grid(grid, mask);
  if (from.empty() || to.empty()) {
    throw Error(ErrorKind::geometry, "source or target set is empty after rasterization");
  }
  const LocalLattice lattice(grid.spec(), mask);
  std::vector<std::size_t> sources;
  std::vector<std::uint8_t> is_target(lattice.size(), 0);
  for (std::size_t g : from) {
    const std::int64_t l = lattice.local(g);
    if (l < 0) throw Error(ErrorKind::geometry, "source node lies outside the mask");
    sources.push_back(static_cast<std::size_t>(l));
  }
  for (std::size_t g : to) {
    const std::int64_t l = lattice.local(g);
    if (l < 0) throw Error(ErrorKind::geometry, "target node lies outside the mask");
    is_target[static_cast<std::size_t>(l)] = 1;
  }
  std::sort(sources.begin(), sources.end());

  DistanceResult result;
  Search search(lattice.size());
  const auto hit = search.run(
      sources, [&](std::size_t s) { return is_target[s] != 0; },
      [&](std::size_t u, auto&& relax) {
        lattice.for_each_neighbour(u, [&](std::size_t v, std::size_t gu, std::size_t gv) {
          relax(v, grid.edge_length(gu, gv));
        });
      },
      std::numeric_limits<double>::infinity(), result.relaxations);
  if (!hit) return result;
  result.value = search.dist(*hit);
  for (std::size_t s : search.trace(*hit)) result.path.push_back(lattice.global(s));
  return result;
}

bool within(double value, double bound) { return value <= bound * (1.0 + 1e-12); }

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return euclid(p, {a.x + t * dx, a.y + t * dy});
}

// Signed crossing of the rightward horizontal ray from center by the edge
// u -> v: +1 upward, -1 downward, 0 otherwise. Points with y >= center.y
// count as above.
int ray_crossing(Point u, Point v, Point center) {
  const bool au = u.y >= center.y;
  const bool av = v.y >= center.y;
  if (au == av) return 0;
  // Evaluate the intersection from the lower endpoint so both directions agree.
  const Point lo = au ? v : u;
  const Point hi = au ? u : v;
  const double x = lo.x + (center.y - lo.y) * (hi.x - lo.x) / (hi.y - lo.y);
  if (x <= center.x) return 0;
  return av ? 1 : -1;
}

}  // namespace

// ---------------------------------------------------------------------------

WeightedGrid::WeightedGrid(GridSpec spec, double xi, double eps, std::vector<double> weights)
    : spec_(spec),
      xi_(xi),
      eps_(eps),
      weights_(std::move(weights)),
      axis_step_(spec.delta()),
      diagonal_step_(spec.delta() * std::numbers::sqrt2) {
  if (weights_.size() != spec_.node_count()) {
    throw Error(ErrorKind::data, "weight array size does not match the grid");
  }
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0) || !std::isfinite(weights_[k])) {
      throw Error(ErrorKind::range, "vertex weight at node " + std::to_string(k) +
                                        " is not positive and finite");
    }
  }
}

double WeightedGrid::edge_length(std::size_t u, std::size_t v) const {
  const std::size_t n = spec_.n;
  const bool diagonal = (u % n != v % n) && (u / n != v / n);
  const double step = diagonal ? diagonal_step_ : axis_step_;
  return step * (weights_[u] + weights_[v]) * 0.5;
}

WeightedGrid build_weighted_grid(const Field& mollified, double xi) {
  if (mollified.kind() != FieldKind::mollified) {
    throw Error(ErrorKind::state, "weighted grid needs a mollified field");
  }
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw Error(ErrorKind::domain, "xi must be positive and finite");
  }
  const GridSpec& spec = mollified.spec();
  std::vector<double> weights(spec.node_count());
  const auto values = mollified.values();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exponent = xi * values[k];
    if (std::abs(exponent) > 700.0) {
      const Node v = spec.node_of_index(k);
      throw Error(ErrorKind::range, "xi*h=" + std::to_string(exponent) + " at node (" +
                                        std::to_string(v.i) + ", " + std::to_string(v.j) +
                                        ") exceeds the exponent guard of 700");
    }
    weights[k] = std::exp(exponent);
  }
  return WeightedGrid(spec, xi, mollified.eps(), std::move(weights));
}

// ---------------------------------------------------------------------------

RegionMask::RegionMask(GridSpec spec, std::vector<std::uint8_t> admitted)
    : spec_(spec), admitted_(std::move(admitted)) {
  if (admitted_.size() != spec_.node_count()) {
    throw Error(ErrorKind::data, "mask size does not match the grid");
  }
  count_ = static_cast<std::size_t>(
      std::count_if(admitted_.begin(), admitted_.end(), [](std::uint8_t b) { return b != 0; }));
}

RegionMask RegionMask::full(const GridSpec& spec) {
  return RegionMask(spec, std::vector<std::uint8_t>(spec.node_count(), 1));
}

bool RegionMask::subset_of(const RegionMask& other) const {
  for (std::size_t k = 0; k < admitted_.size(); ++k) {
    if (admitted_[k] && !other.admitted_[k]) return false;
  }
  return true;
}

std::vector<std::size_t> circle_nodes(const GridSpec& spec, Point center, double radius) {
  const double tol = spec.delta() / std::numbers::sqrt2;
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < spec.node_count(); ++k) {
    if (within(std::abs(euclid(spec.point_of(k), center) - radius), tol)) nodes.push_back(k);
  }
  return nodes;
}

std::vector<std::size_t> segment_nodes(const GridSpec& spec, Point a, Point b) {
  const double tol = spec.delta() / 2.0;
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < spec.node_count(); ++k) {
    if (within(segment_distance(spec.point_of(k), a, b), tol)) nodes.push_back(k);
  }
  return nodes;
}

RegionMask annulus_mask(const GridSpec& spec, const AnnulusSpec& ann) {
  const double tol = spec.delta() / std::numbers::sqrt2;
  std::vector<std::uint8_t> bits(spec.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double r = euclid(spec.point_of(k), ann.center);
    bits[k] = (within(ann.r1 - r, tol) && within(r - ann.r2, tol)) ? 1 : 0;
  }
  return RegionMask(spec, std::move(bits));
}

RegionMask annulus_interior_mask(const GridSpec& spec, const AnnulusSpec& ann) {
  const double tol = spec.delta() / std::numbers::sqrt2;
  std::vector<std::uint8_t> bits(spec.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double r = euclid(spec.point_of(k), ann.center);
    bits[k] = (!within(r - ann.r1, tol) && !within(ann.r2 - r, tol)) ? 1 : 0;
  }
  return RegionMask(spec, std::move(bits));
}

RegionMask square_mask(const GridSpec& spec, const Square& sq) {
  const double tol = spec.delta() / 2.0;
  std::vector<std::uint8_t> bits(spec.node_count(), 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const Point p = spec.point_of(k);
    const double dx = std::max({sq.corner.x - p.x, p.x - (sq.corner.x + sq.side), 0.0});
    const double dy = std::max({sq.corner.y - p.y, p.y - (sq.corner.y + sq.side), 0.0});
    bits[k] = within(std::hypot(dx, dy), tol) ? 1 : 0;
  }
  return RegionMask(spec, std::move(bits));
}

void validate_annulus(const GridSpec& spec, const AnnulusSpec& ann) {
  const double d = spec.delta();
  if (!(ann.r1 > 0.0) || !(ann.r1 < ann.r2)) {
    throw Error(ErrorKind::geometry, "annulus radii must satisfy 0 < r1 < r2");
  }
  if (ann.r2 - ann.r1 < 4.0 * d) {
    throw Error(ErrorKind::geometry, "annulus width " + std::to_string(ann.r2 - ann.r1) +
                                         " is below 4*delta=" + std::to_string(4.0 * d));
  }
  if (spec.margin_of(ann.center) - ann.r2 < 2.0 * d) {
    throw Error(ErrorKind::geometry, "outer circle of radius " + std::to_string(ann.r2) +
                                         " about " + describe(ann.center) +
                                         " leaves the grid margin of 2*delta");
  }
}

// ---------------------------------------------------------------------------

DistanceResult distance_nodes(const WeightedGrid& grid, std::size_t a, std::size_t b,
                              const RegionMask* mask) {
  // Always search from the smaller index so that d(a,b) and d(b,a) are bit-equal.
  const bool swapped = b < a;
  const std::size_t from[1] = {swapped ? b : a};
  const std::size_t to[1] = {swapped ? a : b};
  DistanceResult result = multi_source(grid, from, to, mask);
  if (swapped) std::reverse(result.path.begin(), result.path.end());
  return result;
}

DistanceResult distance(const WeightedGrid& grid, Point a, Point b, const RegionMask* mask) {
  require_same_grid(grid, mask);
  const std::size_t na = node_for(grid.spec(), a, mask, "start");
  const std::size_t nb = node_for(grid.spec(), b, mask, "end");
  return distance_nodes(grid, na, nb, mask);
}

DistanceResult distance_sets(const WeightedGrid& grid, std::span<const std::size_t> from,
                             std::span<const std::size_t> to, const RegionMask* mask) {
  return multi_source(grid, from, to, mask);
}

DistanceResult distance_sets(const WeightedGrid& grid, std::span<const Point> from,
                             std::span<const Point> to, const RegionMask* mask) {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
  for (Point p : from) a.push_back(node_for(grid.spec(), p, mask, "source"));
  for (Point p : to) b.push_back(node_for(grid.spec(), p, mask, "target"));
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return multi_source(grid, a, b, mask);
}

DistanceResult across_annulus(const WeightedGrid& grid, const AnnulusSpec& ann) {
  const GridSpec& spec = grid.spec();
  validate_annulus(spec, ann);
  const RegionMask mask = annulus_mask(spec, ann);
  const auto inner = circle_nodes(spec, ann.center, ann.r1);
  const auto outer = circle_nodes(spec, ann.center, ann.r2);
  return multi_source(grid, inner, outer, &mask);
}

DistanceResult around_point(const WeightedGrid& grid, Point center, const RegionMask& mask) {
  const GridSpec& spec = grid.spec();
  require_same_grid(grid, &mask);
  if (const auto c = spec.nearest(center);
      c && spec.point_of(*c) == center && mask.contains(spec.index_of(*c))) {
    throw Error(ErrorKind::geometry, "separation centre " + describe(center) + " is an admitted node");
  }
  const LocalLattice lattice(spec, &mask);
  const std::size_t count = lattice.size();

  // Walks are lifted to a cover with sheets -1..2 indexed by the signed
  // number of ray crossings so far; a closed walk of winding one runs from
  // (u, sheet 0) to (u, sheet 1).
  constexpr std::size_t kSheets = 4;
  constexpr std::size_t kStartSheet = 1;
  auto state = [count](std::size_t sheet, std::size_t local) { return sheet * count + local; };

  std::vector<std::size_t> starts;
  for (std::size_t u = 0; u < count; ++u) {
    bool crosses_up = false;
    const Point pu = spec.point_of(lattice.global(u));
    lattice.for_each_neighbour(u, [&](std::size_t, std::size_t, std::size_t gv) {
      if (ray_crossing(pu, spec.point_of(gv), center) > 0) crosses_up = true;
    });
    if (crosses_up) starts.push_back(u);
  }

  DistanceResult best;
  double best_value = std::numeric_limits<double>::infinity();
  Search search(kSheets * count);
  for (std::size_t u : starts) {
    search.reset();
    const std::size_t source[1] = {state(kStartSheet, u)};
    const std::size_t target = state(kStartSheet + 1, u);
    const auto hit = search.run(
        source, [&](std::size_t s) { return s == target; },
        [&](std::size_t s, auto&& relax) {
          const std::size_t sheet = s / count;
          const std::size_t local = s % count;
          const Point pu = spec.point_of(lattice.global(local));
          lattice.for_each_neighbour(local, [&](std::size_t lv, std::size_t gu, std::size_t gv) {
            const int step = ray_crossing(pu, spec.point_of(gv), center);
            const auto next = static_cast<std::int64_t>(sheet) + step;
            if (next < 0 || next >= static_cast<std::int64_t>(kSheets)) return;
            relax(state(static_cast<std::size_t>(next), lv), grid.edge_length(gu, gv));
          });
        },
        best_value, best.relaxations);
    if (!hit) continue;
    const double value = search.dist(*hit);
    if (value < best_value) {
      best_value = value;
      best.value = value;
      best.path.clear();
      for (std::size_t s : search.trace(*hit)) best.path.push_back(lattice.global(s % count));
    }
  }
  return best;
}

DistanceResult around_annulus(const WeightedGrid& grid, const AnnulusSpec& ann) {
  const GridSpec& spec = grid.spec();
  validate_annulus(spec, ann);
  if (ann.r1 < 2.0 * spec.delta()) {
    throw Error(ErrorKind::geometry, "inner radius must be at least 2*delta to separate");
  }
  const RegionMask mask = annulus_interior_mask(spec, ann);
  DistanceResult result = around_point(grid, ann.center, mask);
  if (!result.reachable()) {
    throw Error(ErrorKind::geometry, "annulus of radii " + std::to_string(ann.r1) + ", " +
                                         std::to_string(ann.r2) +
                                         " contains no separating cycle at this resolution");
  }
  return result;
}

DistanceResult crossing_length(const WeightedGrid& grid, const Square& square) {
  const GridSpec& spec = grid.spec();
  if (!(square.side >= 4.0 * spec.delta())) {
    throw Error(ErrorKind::geometry, "square side " + std::to_string(square.side) +
                                         " is below 4*delta");
  }
  const Point far{square.corner.x + square.side, square.corner.y + square.side};
  if (spec.margin_of(square.corner) < 0.0 || spec.margin_of(far) < 0.0) {
    throw Error(ErrorKind::geometry, "square with corner " + describe(square.corner) +
                                         " is not inside the grid");
  }
  const RegionMask mask = square_mask(spec, square);
  const auto left = segment_nodes(spec, square.corner, {square.corner.x, far.y});
  const auto right = segment_nodes(spec, {far.x, square.corner.y}, far);
  return multi_source(grid, left, right, &mask);
}

double path_length(const WeightedGrid& grid, std::span<const std::size_t> path) {
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) total += grid.edge_length(path[k - 1], path[k]);
  return total;
}

int winding_number(const GridSpec& spec, std::span<const std::size_t> cycle, Point center) {
  int winding = 0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const std::size_t next = cycle[(k + 1) % cycle.size()];
    winding += ray_crossing(spec.point_of(cycle[k]), spec.point_of(next), center);
  }
  return winding;
}

bool polylines_meet(const GridSpec& spec, std::span<const std::size_t> a,
                    std::span<const std::size_t> b) {
  std::vector<std::size_t> sorted(b.begin(), b.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t v : a) {
    if (std::binary_search(sorted.begin(), sorted.end(), v)) return true;
  }
  // Diagonal edges keyed by the lower-left node of their cell.
  auto cells = [&](std::span<const std::size_t> path, bool rising) {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < path.size(); ++k) {
      const Node u = spec.node_of_index(path[k - 1]);
      const Node v = spec.node_of_index(path[k]);
      if (u.i == v.i || u.j == v.j) continue;
      const bool is_rising = (v.i - u.i) == (v.j - u.j);
      if (is_rising != rising) continue;
      out.push_back(spec.index_of({std::min(u.i, v.i), std::min(u.j, v.j)}));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a_rise = cells(a, true);
  const auto a_fall = cells(a, false);
  const auto b_rise = cells(b, true);
  const auto b_fall = cells(b, false);
  auto intersects = [](const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] == y[j]) return true;
      if (x[i] < y[j]) ++i; else ++j;
    }
    return false;
  };
  return intersects(a_rise, b_fall) || intersects(a_fall, b_rise);
}

}  // namespace lfpp
