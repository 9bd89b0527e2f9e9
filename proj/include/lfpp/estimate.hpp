#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lfpp/field.hpp"
#include "lfpp/field_store.hpp"
#include "lfpp/metric.hpp"

namespace lfpp {

struct SampleSet {
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::string descriptor;

  void validate() const;
  std::size_t size() const { return values.size(); }
};

struct QuantileEstimate {
  double p = 0.5;
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double confidence = 0.95;
  std::size_t n = 0;

  friend bool operator==(const QuantileEstimate&, const QuantileEstimate&) = default;
};

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> points;  // (log eps, log a_eps)
};

// Where replica fields come from. The hooks bypass sampling and hand back a
// constant mollified field (0 for zero, `constant` for constant).
struct FieldSource {
  enum class Hook { none, zero, constant };
  Hook hook = Hook::none;
  double constant = 0.0;

  bool synthetic() const { return hook != Hook::none; }
  static FieldSource sampled() { return {}; }
  static FieldSource zero() { return {Hook::zero, 0.0}; }
  static FieldSource constant_field(double c) { return {Hook::constant, c}; }
};

// Shared knobs for the Monte Carlo estimators.
struct MonteCarlo {
  GridSpec grid;
  std::size_t replicas = 64;
  std::uint64_t root_seed = 1;
  FieldSource source;
  unsigned workers = 0;  // 0: one per available processor
  const FieldCache* cache = nullptr;
};

// Mollified replica fields for every eps of the ladder, sampled once per seed.
std::vector<Field> replica_fields(const GridSpec& grid, std::uint64_t seed,
                                  const std::vector<double>& eps_ladder, const FieldSource& source,
                                  const FieldCache* cache = nullptr);

// p-quantile x_(ceil(n p)) with a distribution-free order-statistic interval.
QuantileEstimate quantile_estimate(const SampleSet& samples, double p, double confidence = 0.95);
double empirical_cdf(const SampleSet& samples, double x);

// Runs `functional` on the mollified field of each replica, in replica order.
SampleSet collect_samples(const MonteCarlo& mc, double eps, const std::string& descriptor,
                          const std::function<double(const Field&)>& functional);

// Left-right crossing of [0,1]^2.
SampleSet sample_a_eps(double xi, double eps, const MonteCarlo& mc);
QuantileEstimate estimate_a_eps(double xi, double eps, const MonteCarlo& mc);

// Around-distance of the annulus A_{1,2}(0), at quantile p.
SampleSet sample_alpha(double xi, double eps, const MonteCarlo& mc);
QuantileEstimate estimate_alpha(double xi, double p, double eps, const MonteCarlo& mc);

// D(0, (1,0)), at the median.
SampleSet sample_beta(double xi, double eps, const MonteCarlo& mc);
QuantileEstimate estimate_beta(double xi, double eps, const MonteCarlo& mc);

// Least squares of log a_eps on log eps. Points are (eps, a_eps).
ExponentFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points);
// Same regression without the decreasing-eps requirement (used for radii).
ExponentFit fit_loglog(const std::vector<std::pair<double, double>>& points);

double q_subcritical(double gamma);
double d_gamma_upper(double gamma);
std::pair<double, double> xi_bounds_of_gamma(double gamma);
// Midpoint of xi_bounds_of_gamma, the default xi for a given gamma.
double xi_of_gamma(double gamma);

double ks_statistic(const SampleSet& a, const SampleSet& b);
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Asymptotic two-sample critical value c(alpha) sqrt((n+m)/(n m)).
double ks_critical_value(std::size_t n, std::size_t m, double alpha = 0.05);

}  // namespace lfpp
