#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace lfpp {

// A point of the continuum plane.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double euclid(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Lattice coordinates of a grid node; i runs along x, j along y.
struct Node {
  int i = 0;
  int j = 0;

  friend bool operator==(const Node&, const Node&) = default;
};

// Square lattice with n nodes per side covering [-L, L) in both directions.
// Node (i, j) sits at (-L + i*delta, -L + j*delta), so the origin is node
// (n/2, n/2). Sampling happens on a torus with n*pad_factor nodes per side.
struct GridSpec {
  std::uint32_t n = 256;
  double half_width = 2.0;
  std::uint32_t pad_factor = 4;

  double delta() const { return 2.0 * half_width / static_cast<double>(n); }
  std::size_t node_count() const { return std::size_t{n} * n; }
  std::uint32_t torus_n() const { return n * pad_factor; }

  // Throws lfpp::Error(geometry) when the invariants fail.
  void validate() const;

  Point point_of(Node v) const {
    const double d = delta();
    return {-half_width + v.i * d, -half_width + v.j * d};
  }
  Point point_of(std::size_t index) const { return point_of(node_of_index(index)); }

  Node node_of_index(std::size_t index) const {
    return {static_cast<int>(index % n), static_cast<int>(index / n)};
  }
  std::size_t index_of(Node v) const {
    return static_cast<std::size_t>(v.j) * n + static_cast<std::size_t>(v.i);
  }
  bool contains(Node v) const {
    return v.i >= 0 && v.j >= 0 && v.i < static_cast<int>(n) && v.j < static_cast<int>(n);
  }

  // Nearest node, or nullopt when the point falls outside the lattice.
  std::optional<Node> nearest(Point p) const {
    const double d = delta();
    const Node v{static_cast<int>(std::lround((p.x + half_width) / d)),
                 static_cast<int>(std::lround((p.y + half_width) / d))};
    if (!contains(v)) return std::nullopt;
    return v;
  }

  // Distance from p to the nearest edge of the node-covered square [-L, L-delta]^2.
  double margin_of(Point p) const {
    const double lo = -half_width;
    const double hi = half_width - delta();
    return std::min({p.x - lo, hi - p.x, p.y - lo, hi - p.y});
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

}  // namespace lfpp
