#include "lfpp/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

#include "lfpp/error.hpp"

namespace lfpp {

namespace {

// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t count) : data(fftw_alloc_real(count)) {
    if (data == nullptr) throw Error(ErrorKind::range, "out of memory for FFT buffer");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data;
};

struct FftwPlan {
  FftwPlan() = default;
  explicit FftwPlan(fftw_plan p) : plan(p) {}
  ~FftwPlan() {
    if (plan != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  fftw_plan plan = nullptr;
};

// In-place r2c layout: each row holds 2*(N/2+1) doubles.
std::size_t padded_row(std::uint32_t N) { return 2 * (std::size_t{N} / 2 + 1); }

FftwPlan plan_r2c(std::uint32_t N, double* buf) {
  std::lock_guard lock(fftw_planner_mutex());
  return FftwPlan(fftw_plan_dft_r2c_2d(static_cast<int>(N), static_cast<int>(N), buf,
                                       reinterpret_cast<fftw_complex*>(buf), FFTW_ESTIMATE));
}

FftwPlan plan_c2r(std::uint32_t N, double* buf) {
  std::lock_guard lock(fftw_planner_mutex());
  return FftwPlan(fftw_plan_dft_c2r_2d(static_cast<int>(N), static_cast<int>(N),
                                       reinterpret_cast<fftw_complex*>(buf), buf, FFTW_ESTIMATE));
}

// Spectral density of the lattice GFF with Green's function ~ -log|x|:
// pi / (2 (sin^2(pi kx/N) + sin^2(pi ky/N))), zero mode dropped.
double lattice_spectrum(std::uint32_t N, std::uint32_t kx, std::uint32_t ky) {
  if (kx == 0 && ky == 0) return 0.0;
  const double sx = std::sin(std::numbers::pi * kx / N);
  const double sy = std::sin(std::numbers::pi * ky / N);
  return std::numbers::pi / (2.0 * (sx * sx + sy * sy));
}

int circle_points(double radius, double delta) {
  return std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / delta)));
}

// Visits the four bilinear stencil nodes of point p, in lattice units
// relative to node (0,0) at (-L,-L).
template <typename Visit>
void bilinear_stencil(const GridSpec& spec, Point p, Visit&& visit) {
  const double d = spec.delta();
  const double fx = (p.x + spec.half_width) / d;
  const double fy = (p.y + spec.half_width) / d;
  const double ix = std::floor(fx);
  const double iy = std::floor(fy);
  const double tx = fx - ix;
  const double ty = fy - iy;
  const int i = static_cast<int>(ix);
  const int j = static_cast<int>(iy);
  visit(i, j, (1.0 - tx) * (1.0 - ty));
  visit(i + 1, j, tx * (1.0 - ty));
  visit(i, j + 1, (1.0 - tx) * ty);
  visit(i + 1, j + 1, tx * ty);
}

double circle_average_of(const GridSpec& spec, std::span<const double> values, Point center,
                         double radius) {
  const int K = circle_points(radius, spec.delta());
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / K;
    const Point p{center.x + radius * std::cos(theta), center.y + radius * std::sin(theta)};
    bilinear_stencil(spec, p, [&](int i, int j, double w) {
      if (w != 0.0) sum += w * values[spec.index_of({i, j})];
    });
  }
  return sum / K;
}

void require_circle_inside(const GridSpec& spec, Point center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::geometry, "circle radius must be positive");
  const double margin = spec.margin_of(center) - radius;
  if (margin < 2.0 * spec.delta()) {
    throw Error(ErrorKind::geometry, "circle of radius " + std::to_string(radius) +
                                         " about (" + std::to_string(center.x) + ", " +
                                         std::to_string(center.y) +
                                         ") leaves the grid margin of 2*delta");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Field::Field(GridSpec spec, std::vector<double> values, Provenance provenance, FieldKind kind,
             double eps, bool normalized, std::shared_ptr<const Halo> halo)
    : spec_(spec),
      values_(std::move(values)),
      provenance_(provenance),
      kind_(kind),
      eps_(eps),
      normalized_(normalized),
      halo_(std::move(halo)) {
  if (values_.size() != spec_.node_count()) {
    throw Error(ErrorKind::data, "field has " + std::to_string(values_.size()) +
                                     " values, expected " + std::to_string(spec_.node_count()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::data, "field contains a non-finite value");
  }
}

Field Field::synthetic(GridSpec spec, std::vector<double> values) {
  Provenance prov;
  prov.synthetic = true;
  const bool norm = values.size() == spec.node_count() && unit_circle_normalized(spec, values);
  return Field(spec, std::move(values), prov, FieldKind::raw, 0.0, norm);
}

Field Field::constant(GridSpec spec, double c) {
  return synthetic(spec, std::vector<double>(spec.node_count(), c));
}

Field Field::from_function(GridSpec spec, const std::function<double(Point)>& f) {
  std::vector<double> values(spec.node_count());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(spec.point_of(k));
  return synthetic(spec, std::move(values));
}

bool unit_circle_normalized(const GridSpec& spec, std::span<const double> values) {
  const Point origin{0.0, 0.0};
  if (spec.margin_of(origin) - 1.0 < 2.0 * spec.delta()) return false;
  return std::abs(circle_average_of(spec, values, origin, 1.0)) <= 1e-9;
}

// ---------------------------------------------------------------------------

Kernel make_kernel(double eps, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::resolution, "lattice spacing must be positive");
  }
  if (!(eps >= 2.0 * delta)) {
    throw Error(ErrorKind::resolution, "eps=" + std::to_string(eps) +
                                           " is below twice the lattice spacing " +
                                           std::to_string(delta));
  }
  Kernel k;
  k.eps = eps;
  k.delta = delta;
  const double sigma = eps / std::numbers::sqrt2;
  k.radius_cells = static_cast<int>(std::ceil(5.0 * sigma / delta));
  const int r = k.radius_cells;

  // p_{eps^2/2}(z) = exp(-|z|^2/eps^2) / (pi eps^2) factors into two 1-D terms.
  std::vector<double> g(static_cast<std::size_t>(2 * r + 1));
  for (int a = -r; a <= r; ++a) {
    const double x = a * delta;
    g[static_cast<std::size_t>(a + r)] = std::exp(-(x * x) / (eps * eps));
  }
  const double prefactor = delta * delta / (std::numbers::pi * eps * eps);
  double gsum = 0.0;
  for (double v : g) gsum += v;

  k.raw_center = prefactor;
  k.raw_mass = prefactor * gsum * gsum;
  k.profile.resize(g.size());
  for (std::size_t a = 0; a < g.size(); ++a) k.profile[a] = g[a] / gsum;

  const int side = k.side();
  k.weights.resize(static_cast<std::size_t>(side) * side);
  for (int b = 0; b < side; ++b) {
    for (int a = 0; a < side; ++a) {
      k.weights[static_cast<std::size_t>(b) * side + a] = k.profile[a] * k.profile[b];
    }
  }
  return k;
}

// ---------------------------------------------------------------------------

double spectral_calibration(const GridSpec& spec) {
  spec.validate();
  using Key = std::tuple<std::uint32_t, double, std::uint32_t>;
  static std::mutex cache_mutex;
  static std::map<Key, double> cache;
  const Key key{spec.n, spec.half_width, spec.pad_factor};
  {
    std::lock_guard lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  const std::uint32_t N = spec.torus_n();
  const std::size_t row = padded_row(N);
  const std::size_t offset = (N - spec.n) / 2;
  FftwBuffer buf(row * N);
  std::fill(buf.data, buf.data + row * N, 0.0);

  // Linear functional w with <w, h> = h_{1/e}(0) - h_1(0) on the torus.
  auto accumulate = [&](double radius, double sign) {
    const int K = circle_points(radius, spec.delta());
    for (int k = 0; k < K; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / K;
      const Point p{radius * std::cos(theta), radius * std::sin(theta)};
      bilinear_stencil(spec, p, [&](int i, int j, double w) {
        buf.data[(offset + static_cast<std::size_t>(j)) * row + offset +
                 static_cast<std::size_t>(i)] += sign * w / K;
      });
    }
  };
  accumulate(std::exp(-1.0), 1.0);
  accumulate(1.0, -1.0);

  FftwPlan plan = plan_r2c(N, buf.data);
  fftw_execute(plan.plan);

  const auto* spectrum = reinterpret_cast<const fftw_complex*>(buf.data);
  const std::size_t half = N / 2 + 1;
  double variance = 0.0;
  for (std::uint32_t ky = 0; ky < N; ++ky) {
    for (std::uint32_t kx = 0; kx < half; ++kx) {
      const auto& c = spectrum[ky * half + kx];
      const double mult = (kx == 0 || kx == N / 2) ? 1.0 : 2.0;
      variance += mult * lattice_spectrum(N, kx, ky) * (c[0] * c[0] + c[1] * c[1]);
    }
  }
  variance /= static_cast<double>(N) * N;
  const double calibration = 1.0 / std::sqrt(variance);

  std::lock_guard lock(cache_mutex);
  cache.emplace(key, calibration);
  return calibration;
}

Field sample_field(const GridSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.n < 64) {
    throw Error(ErrorKind::geometry,
                "n=" + std::to_string(spec.n) + " is too coarse to resolve the unit circle");
  }
  if (spec.half_width <= 1.0 + 4.0 * spec.delta()) {
    throw Error(ErrorKind::geometry, "unit circle about the origin does not fit in the grid (L=" +
                                         std::to_string(spec.half_width) + ")");
  }
  const double calibration = spectral_calibration(spec);

  const std::uint32_t N = spec.torus_n();
  const std::size_t row = padded_row(N);
  FftwBuffer buf(row * N);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < N; ++j) {
    double* r = buf.data + j * row;
    for (std::size_t i = 0; i < N; ++i) r[i] = normal(rng);
    r[N] = 0.0;
    r[N + 1] = 0.0;
  }

  {
    FftwPlan forward = plan_r2c(N, buf.data);
    fftw_execute(forward.plan);
  }
  auto* spectrum = reinterpret_cast<fftw_complex*>(buf.data);
  const std::size_t half = N / 2 + 1;
  const double norm = calibration / (static_cast<double>(N) * N);
  for (std::uint32_t ky = 0; ky < N; ++ky) {
    for (std::uint32_t kx = 0; kx < half; ++kx) {
      const double amp = std::sqrt(lattice_spectrum(N, kx, ky)) * norm;
      auto& c = spectrum[ky * half + kx];
      c[0] *= amp;
      c[1] *= amp;
    }
  }
  {
    FftwPlan inverse = plan_c2r(N, buf.data);
    fftw_execute(inverse.plan);
  }

  const std::size_t n = spec.n;
  const std::size_t offset = (N - n) / 2;
  const std::size_t margin = std::min<std::size_t>(n / 2, offset);
  const std::size_t side = n + 2 * margin;

  auto halo = std::make_shared<Halo>();
  halo->margin = static_cast<std::uint32_t>(margin);
  halo->values.resize(side * side);
  for (std::size_t j = 0; j < side; ++j) {
    const double* src = buf.data + (offset - margin + j) * row + (offset - margin);
    std::copy(src, src + side, halo->values.begin() + static_cast<std::ptrdiff_t>(j * side));
  }

  std::vector<double> values(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* src = halo->values.data() + (margin + j) * side + margin;
    std::copy(src, src + n, values.begin() + static_cast<std::ptrdiff_t>(j * n));
  }

  const double shift = circle_average_of(spec, values, {0.0, 0.0}, 1.0);
  for (double& v : values) v -= shift;
  for (double& v : halo->values) v -= shift;

  Field::Provenance prov;
  prov.seed = seed;
  prov.calibration = calibration;
  const bool normalized = unit_circle_normalized(spec, values);
  return Field(spec, std::move(values), prov, FieldKind::raw, 0.0, normalized, std::move(halo));
}

// ---------------------------------------------------------------------------

Field mollify(const Field& field, double eps) {
  if (field.kind() != FieldKind::raw) {
    throw Error(ErrorKind::state, "field is already mollified (eps=" +
                                      std::to_string(field.eps()) + ")");
  }
  const GridSpec& spec = field.spec();
  const Kernel kernel = make_kernel(eps, spec.delta());
  const std::size_t n = spec.n;
  const std::size_t r = static_cast<std::size_t>(kernel.radius_cells);

  // Extended patch with the window at (margin, margin).
  std::span<const double> patch;
  std::vector<double> clamped;
  std::size_t margin = 0;
  const Halo* halo = field.halo();
  if (halo != nullptr && field.added().empty()) {
    if (halo->margin < r) {
      throw Error(ErrorKind::resolution, "kernel radius " + std::to_string(r) +
                                             " cells exceeds the sampled halo of " +
                                             std::to_string(halo->margin));
    }
    margin = halo->margin;
    patch = halo->values;
  } else {
    // Synthetic or augmented fields: replicate the edge values outward.
    margin = r;
    const std::size_t side = n + 2 * r;
    clamped.resize(side * side);
    const auto values = field.values();
    for (std::size_t j = 0; j < side; ++j) {
      const std::size_t sj = std::min(n - 1, j < r ? 0 : j - r);
      for (std::size_t i = 0; i < side; ++i) {
        const std::size_t si = std::min(n - 1, i < r ? 0 : i - r);
        clamped[j * side + i] = values[sj * n + si];
      }
    }
    patch = clamped;
  }
  const std::size_t side = n + 2 * margin;
  const auto& g = kernel.profile;
  const std::size_t taps = g.size();

  // Horizontal pass over the rows the vertical pass will read.
  const std::size_t rows = n + 2 * r;
  std::vector<double> tmp(rows * n);
  for (std::size_t jr = 0; jr < rows; ++jr) {
    const double* src = patch.data() + (margin - r + jr) * side + (margin - r);
    double* dst = tmp.data() + jr * n;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t a = 0; a < taps; ++a) s += g[a] * src[i + a];
      dst[i] = s;
    }
  }

  std::vector<double> out(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double* dst = out.data() + j * n;
    for (std::size_t b = 0; b < taps; ++b) {
      const double wb = g[b];
      const double* src = tmp.data() + (j + b) * n;
      for (std::size_t i = 0; i < n; ++i) dst[i] += wb * src[i];
    }
  }

  return Field(spec, std::move(out), field.provenance(), FieldKind::mollified, eps,
               field.normalized());
}

double circle_average(const Field& field, Point center, double radius) {
  require_circle_inside(field.spec(), center, radius);
  return circle_average_of(field.spec(), field.values(), center, radius);
}

Field add_function(const Field& field, const std::function<double(Point)>& f) {
  const GridSpec& spec = field.spec();
  std::vector<double> added(spec.node_count());
  const auto previous = field.added();
  for (std::size_t k = 0; k < added.size(); ++k) {
    const double fv = f(spec.point_of(k));
    if (!std::isfinite(fv)) {
      const Point p = spec.point_of(k);
      throw Error(ErrorKind::data, "added function is not finite at (" + std::to_string(p.x) +
                                       ", " + std::to_string(p.y) + ")");
    }
    added[k] = previous.empty() ? fv : previous[k] + fv;
  }

  auto base = field.base_ ? field.base_
                          : std::make_shared<const std::vector<double>>(field.values().begin(),
                                                                        field.values().end());
  const bool any = std::any_of(added.begin(), added.end(), [](double v) { return v != 0.0; });

  std::vector<double> values(base->size());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = any ? (*base)[k] + added[k] : (*base)[k];

  Field::Provenance prov = field.provenance();
  prov.augmented = any;
  const bool normalized = unit_circle_normalized(spec, values);
  Field out(spec, std::move(values), prov, field.kind(), field.eps(), normalized,
            any ? nullptr : field.halo_);
  if (any) {
    out.base_ = std::move(base);
    out.added_ = std::move(added);
  }
  return out;
}

Field rotate_quarter(const Field& field) {
  const GridSpec& spec = field.spec();
  const std::uint32_t n = spec.n;
  std::vector<double> values(spec.node_count());
  // h'(x, y) = h(y, -x): node (i, j) reads node (j, n - i) modulo n.
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t si = j;
      const std::uint32_t sj = (n - i) % n;
      values[std::size_t{j} * n + i] = field.values()[std::size_t{sj} * n + si];
    }
  }
  const bool normalized = unit_circle_normalized(spec, values);
  return Field(spec, std::move(values), field.provenance(), field.kind(), field.eps(), normalized);
}

}  // namespace lfpp
