#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lfpp/grid.hpp"

namespace lfpp {

enum class FieldKind : std::uint8_t { raw = 0, mollified = 1 };

// Heat-kernel weights p_{eps^2/2} sampled at cell centers on a
// (2r+1) x (2r+1) stencil and renormalized to unit mass.
struct Kernel {
  double eps = 0.0;
  double delta = 0.0;
  int radius_cells = 0;
  std::vector<double> weights;  // row-major, (2r+1)^2
  std::vector<double> profile;  // normalized 1-D factor: weights(a,b) = profile[a]*profile[b]
  double raw_center = 0.0;      // delta^2 * p(0) before renormalization
  double raw_mass = 0.0;        // sum of the unnormalized weights

  int side() const { return 2 * radius_cells + 1; }
  double at(int di, int dj) const {
    return weights[static_cast<std::size_t>(dj + radius_cells) * side() +
                   static_cast<std::size_t>(di + radius_cells)];
  }
};

Kernel make_kernel(double eps, double delta);

// Torus values surrounding the window, kept with sampled fields so that
// mollification near the window edge sees genuine field values.
struct Halo {
  std::uint32_t margin = 0;
  std::vector<double> values;  // (n + 2*margin)^2, row-major, window at (margin, margin)
};

// Immutable scalar field on the n x n lattice of a GridSpec.
class Field {
 public:
  struct Provenance {
    std::uint64_t seed = 0;
    bool synthetic = false;  // built from a formula rather than sampled
    bool augmented = false;  // a function was added after sampling
    double calibration = 0.0;  // spectral amplitude factor; 0 when not sampled
  };

  Field(GridSpec spec, std::vector<double> values, Provenance provenance, FieldKind kind,
        double eps, bool normalized, std::shared_ptr<const Halo> halo = nullptr);

  static Field synthetic(GridSpec spec, std::vector<double> values);
  static Field constant(GridSpec spec, double c);
  static Field from_function(GridSpec spec, const std::function<double(Point)>& f);

  const GridSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  double at(Node v) const { return values_[spec_.index_of(v)]; }
  double at(std::size_t index) const { return values_[index]; }
  const Provenance& provenance() const { return provenance_; }
  std::uint64_t seed() const { return provenance_.seed; }
  FieldKind kind() const { return kind_; }
  double eps() const { return eps_; }
  bool normalized() const { return normalized_; }
  const Halo* halo() const { return halo_.get(); }

  // Sum of the functions added since sampling, kept apart from the sampled
  // values so that adding f and then -f restores the field bit for bit.
  // Empty when nothing was added.
  std::span<const double> added() const { return added_; }
  std::span<const double> base_values() const { return base_ ? std::span<const double>(*base_) : values(); }

 private:
  friend Field add_function(const Field& field, const std::function<double(Point)>& f);

  GridSpec spec_;
  std::vector<double> values_;
  Provenance provenance_;
  FieldKind kind_;
  double eps_;
  bool normalized_;
  std::shared_ptr<const Halo> halo_;
  std::shared_ptr<const std::vector<double>> base_;
  std::vector<double> added_;
};

// Amplitude factor applied to the lattice GFF spectrum so that the
// circle-average increment h_{1/e}(0) - h_1(0) has unit variance. Computed
// exactly from the spectrum, once per GridSpec.
double spectral_calibration(const GridSpec& spec);

// Whole-plane GFF proxy: spectral synthesis on the padded torus, windowed,
// shifted so that the unit circle average about the origin vanishes.
Field sample_field(const GridSpec& spec, std::uint64_t seed);

Field mollify(const Field& field, double eps);

// Mean of bilinearly interpolated values at max(64, ceil(2 pi r / delta))
// equally spaced points of the circle.
double circle_average(const Field& field, Point center, double radius);

Field add_function(const Field& field, const std::function<double(Point)>& f);

// Quarter turn counter-clockwise about the origin node; the row that would
// come from outside the window wraps around.
Field rotate_quarter(const Field& field);

// True when the unit circle about the origin fits and its average is within 1e-9 of 0.
bool unit_circle_normalized(const GridSpec& spec, std::span<const double> values);

}  // namespace lfpp
