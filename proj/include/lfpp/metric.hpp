#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfpp/field.hpp"
#include "lfpp/grid.hpp"

namespace lfpp {

// Vertex-weighted 8-neighbour lattice. The edge between neighbours u and v
// has length step(u, v) * (w(u) + w(v)) / 2, with step delta or delta*sqrt(2).
class WeightedGrid {
 public:
  WeightedGrid(GridSpec spec, double xi, double eps, std::vector<double> weights);

  const GridSpec& spec() const { return spec_; }
  double xi() const { return xi_; }
  double eps() const { return eps_; }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t index) const { return weights_[index]; }

  // Length of the edge between two lattice neighbours.
  double edge_length(std::size_t u, std::size_t v) const;

 private:
  GridSpec spec_;
  double xi_;
  double eps_;
  std::vector<double> weights_;
  double axis_step_;
  double diagonal_step_;
};

WeightedGrid build_weighted_grid(const Field& mollified, double xi);

// Vertices admissible for an internal metric.
class RegionMask {
 public:
  RegionMask(GridSpec spec, std::vector<std::uint8_t> admitted);
  static RegionMask full(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  bool contains(std::size_t index) const { return admitted_[index] != 0; }
  std::size_t count() const { return count_; }
  std::span<const std::uint8_t> bits() const { return admitted_; }

  // Every vertex admitted here is admitted by other.
  bool subset_of(const RegionMask& other) const;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> admitted_;
  std::size_t count_ = 0;
};

struct AnnulusSpec {
  Point center;
  double r1 = 0.0;
  double r2 = 0.0;
};

// Axis-aligned square [corner.x, corner.x + side] x [corner.y, corner.y + side].
struct Square {
  Point corner;
  double side = 0.0;
};

struct DistanceResult {
  std::optional<double> value;     // nullopt: target unreachable
  std::vector<std::size_t> path;   // node indices; a closed cycle repeats its first node
  std::uint64_t relaxations = 0;

  bool reachable() const { return value.has_value(); }
};

// Boundary rasterization: nodes within delta/sqrt(2) of a circle, and nodes
// within delta/2 of a segment.
std::vector<std::size_t> circle_nodes(const GridSpec& spec, Point center, double radius);
std::vector<std::size_t> segment_nodes(const GridSpec& spec, Point a, Point b);

// Closed annulus, widened by delta/sqrt(2) so that it contains both boundary circles.
RegionMask annulus_mask(const GridSpec& spec, const AnnulusSpec& ann);
// Open annulus: the nodes of annulus_mask strictly between the two boundary
// bands. Separating cycles live here, so every cycle encloses the whole inner
// band and excludes the whole outer band.
RegionMask annulus_interior_mask(const GridSpec& spec, const AnnulusSpec& ann);
// Nodes within delta/2 of the square.
RegionMask square_mask(const GridSpec& spec, const Square& square);

void validate_annulus(const GridSpec& spec, const AnnulusSpec& ann);

DistanceResult distance(const WeightedGrid& grid, Point a, Point b,
                        const RegionMask* mask = nullptr);
DistanceResult distance_nodes(const WeightedGrid& grid, std::size_t a, std::size_t b,
                              const RegionMask* mask = nullptr);
DistanceResult distance_sets(const WeightedGrid& grid, std::span<const std::size_t> from,
                             std::span<const std::size_t> to, const RegionMask* mask = nullptr);
DistanceResult distance_sets(const WeightedGrid& grid, std::span<const Point> from,
                             std::span<const Point> to, const RegionMask* mask = nullptr);

DistanceResult across_annulus(const WeightedGrid& grid, const AnnulusSpec& ann);
DistanceResult around_annulus(const WeightedGrid& grid, const AnnulusSpec& ann);
// Shortest separating cycle inside an arbitrary mask around a point that
// no admitted node or edge touches.
DistanceResult around_point(const WeightedGrid& grid, Point center, const RegionMask& mask);
DistanceResult crossing_length(const WeightedGrid& grid, const Square& square);

// Sum of edge lengths along a node path.
double path_length(const WeightedGrid& grid, std::span<const std::size_t> path);

// Winding number of a closed lattice polyline around a point not on it.
int winding_number(const GridSpec& spec, std::span<const std::size_t> cycle, Point center);

// True when two lattice polylines share a vertex or cross through the
// centre of a cell along opposite diagonals.
bool polylines_meet(const GridSpec& spec, std::span<const std::size_t> a,
                    std::span<const std::size_t> b);

}  // namespace lfpp
