#include "lfpp/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>

#include "lfpp/error.hpp"
#include "lfpp/parallel.hpp"
#include "lfpp/seed.hpp"

namespace lfpp {

namespace {

constexpr double kSqrt83 = 1.6329931618554521;  // sqrt(8/3)

void require_gamma(double gamma, double upper, const char* what) {
  if (!(gamma > 0.0) || !(gamma <= upper)) {
    std::ostringstream os;
    os << what << ": gamma=" << gamma << " outside (0, " << upper << "]";
    throw Error(ErrorKind::domain, os.str());
  }
}

Field hook_field(const GridSpec& grid, double eps, const FieldSource& source) {
  const double c = source.hook == FieldSource::Hook::constant ? source.constant : 0.0;
  Field::Provenance prov;
  prov.synthetic = true;
  return Field(grid, std::vector<double>(grid.node_count(), c), prov, FieldKind::mollified, eps,
               c == 0.0);
}

std::string descriptor_for(const char* functional, double xi, double eps) {
  std::ostringstream os;
  os << functional << ":eps=" << eps << ":xi=" << xi;
  return os.str();
}

}  // namespace

void SampleSet::validate() const {
  if (descriptor.empty()) throw Error(ErrorKind::data, "sample set has no descriptor");
  if (values.size() != seeds.size()) throw Error(ErrorKind::data, "sample values and seeds differ in length");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::data, "sample set " + descriptor + " holds a non-finite value");
  }
}

std::vector<Field> replica_fields(const GridSpec& grid, std::uint64_t seed,
                                  const std::vector<double>& eps_ladder, const FieldSource& source,
                                  const FieldCache* cache) {
  std::vector<Field> out;
  out.reserve(eps_ladder.size());
  if (source.synthetic()) {
    for (double eps : eps_ladder) out.push_back(hook_field(grid, eps, source));
    return out;
  }
  if (cache != nullptr) {
    for (double eps : eps_ladder) {
      auto hit = cache->find(grid, seed, FieldKind::mollified, eps);
      if (!hit) break;
      out.push_back(std::move(*hit));
    }
    if (out.size() == eps_ladder.size()) return out;
    out.clear();
  }
  const Field raw = sample_field(grid, seed);
  for (double eps : eps_ladder) {
    out.push_back(mollify(raw, eps));
    if (cache != nullptr) cache->insert(out.back());
  }
  return out;
}

QuantileEstimate quantile_estimate(const SampleSet& samples, double p, double confidence) {
  samples.validate();
  if (samples.values.empty()) throw Error(ErrorKind::data, "quantile of an empty sample set");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::domain, "quantile level must lie in (0,1)");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorKind::domain, "confidence must lie in (0,1)");

  std::vector<double> sorted = samples.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(static_cast<double>(n) * p)), 1, n);

  // [x_(lo), x_(hi)] covers the p-quantile with probability P(lo <= B <= hi-1),
  // B ~ Binomial(n, p).
  const boost::math::binomial_distribution<double> binom(static_cast<double>(n), p);
  const double tail = (1.0 - confidence) / 2.0;
  std::size_t lo = 1;
  for (std::size_t j = 1; j <= n; ++j) {
    if (boost::math::cdf(binom, static_cast<double>(j - 1)) <= tail) lo = j; else break;
  }
  std::size_t hi = n;
  for (std::size_t j = n; j >= 1; --j) {
    if (boost::math::cdf(boost::math::complement(binom, static_cast<double>(j - 1))) <= tail) hi = j; else break;
  }
  lo = std::min(lo, k);
  hi = std::max(hi, k);

  QuantileEstimate q;
  q.p = p;
  q.point = sorted[k - 1];
  q.ci_lo = sorted[lo - 1];
  q.ci_hi = sorted[hi - 1];
  q.confidence = confidence;
  q.n = n;
  return q;
}

double empirical_cdf(const SampleSet& samples, double x) {
  if (samples.values.empty()) throw Error(ErrorKind::data, "empirical CDF of an empty sample set");
  const auto below = std::count_if(samples.values.begin(), samples.values.end(),
                                   [x](double v) { return v <= x; });
  return static_cast<double>(below) / static_cast<double>(samples.values.size());
}

SampleSet collect_samples(const MonteCarlo& mc, double eps, const std::string& descriptor,
                          const std::function<double(const Field&)>& functional) {
  mc.grid.validate();
  SampleSet set;
  set.descriptor = descriptor;
  set.values.resize(mc.replicas);
  set.seeds.resize(mc.replicas);
  const std::vector<double> ladder{eps};
  parallel_for(mc.replicas, mc.workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(mc.root_seed, i);
    set.seeds[i] = seed;
    try {
      const auto fields = replica_fields(mc.grid, seed, ladder, mc.source, mc.cache);
      set.values[i] = functional(fields.front());
    } catch (const Error& e) {
      throw Error(e.kind(), "replica " + std::to_string(i) + ": " + e.detail());
    }
  });
  set.validate();
  return set;
}

namespace {

void require_replicas(const MonteCarlo& mc) {
  if (mc.replicas < 16) {
    throw Error(ErrorKind::domain, "estimators need at least 16 replicas, got " + std::to_string(mc.replicas));
  }
}

double require_reachable(const DistanceResult& r, const char* what) {
  if (!r.reachable()) throw Error(ErrorKind::geometry, std::string(what) + " is unreachable");
  return *r.value;
}

}  // namespace

SampleSet sample_a_eps(double xi, double eps, const MonteCarlo& mc) {
  require_replicas(mc);
  return collect_samples(mc, eps, descriptor_for("crossing", xi, eps), [xi](const Field& f) {
    const WeightedGrid grid = build_weighted_grid(f, xi);
    return require_reachable(crossing_length(grid, Square{{0.0, 0.0}, 1.0}), "unit square crossing");
  });
}

QuantileEstimate estimate_a_eps(double xi, double eps, const MonteCarlo& mc) {
  return quantile_estimate(sample_a_eps(xi, eps, mc), 0.5);
}

SampleSet sample_alpha(double xi, double eps, const MonteCarlo& mc) {
  require_replicas(mc);
  return collect_samples(mc, eps, descriptor_for("around12", xi, eps), [xi](const Field& f) {
    const WeightedGrid grid = build_weighted_grid(f, xi);
    return require_reachable(around_annulus(grid, AnnulusSpec{{0.0, 0.0}, 1.0, 2.0}), "around A(1,2)");
  });
}

QuantileEstimate estimate_alpha(double xi, double p, double eps, const MonteCarlo& mc) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::domain, "quantile level must lie in (0,1)");
  return quantile_estimate(sample_alpha(xi, eps, mc), p);
}

SampleSet sample_beta(double xi, double eps, const MonteCarlo& mc) {
  require_replicas(mc);
  return collect_samples(mc, eps, descriptor_for("d01", xi, eps), [xi](const Field& f) {
    const WeightedGrid grid = build_weighted_grid(f, xi);
    return require_reachable(distance(grid, {0.0, 0.0}, {1.0, 0.0}), "D(0,1)");
  });
}

QuantileEstimate estimate_beta(double xi, double eps, const MonteCarlo& mc) {
  return quantile_estimate(sample_beta(xi, eps, mc), 0.5);
}

// ---------------------------------------------------------------------------

ExponentFit fit_loglog(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw Error(ErrorKind::data, "exponent fit needs at least 3 points");
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      throw Error(ErrorKind::data, "exponent fit inputs must be positive and finite");
    }
  }
  // Responses are taken relative to the first point so that rescaling every
  // y by a power of two leaves the slope bit-identical.
  const double x_ref = points.front().first;
  const double y_ref = points.front().second;
  const std::size_t m = points.size();
  std::vector<double> lx(m);
  std::vector<double> ly(m);
  for (std::size_t k = 0; k < m; ++k) {
    lx[k] = std::log(points[k].first / x_ref);
    ly[k] = std::log(points[k].second / y_ref);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::data, "exponent fit needs distinct abscissae");

  ExponentFit fit;
  fit.slope = sxy / sxx;
  const double local_intercept = my - fit.slope * mx;
  fit.intercept = std::log(y_ref) + local_intercept - fit.slope * std::log(x_ref);
  double ssr = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double r = ly[k] - (local_intercept + fit.slope * lx[k]);
    ssr += r * r;
  }
  fit.stderr_slope = m > 2 ? std::sqrt(ssr / static_cast<double>(m - 2) / sxx) : 0.0;
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  for (const auto& [x, y] : points) fit.points.emplace_back(std::log(x), std::log(y));
  return fit;
}

ExponentFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw Error(ErrorKind::data, "exponent fit needs at least 3 points");
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (!(points[k].first < points[k - 1].first)) {
      throw Error(ErrorKind::data, "eps values must be strictly decreasing");
    }
  }
  return fit_loglog(points);
}

double q_subcritical(double gamma) {
  require_gamma(gamma, 2.0, "Q(gamma/d_gamma)");
  return 2.0 / gamma + gamma / 2.0;
}

double d_gamma_upper(double gamma) {
  require_gamma(gamma, kSqrt83, "d_gamma upper bound");
  return 2.0 + gamma * gamma / 2.0 + std::sqrt(2.0) * gamma;
}

std::pair<double, double> xi_bounds_of_gamma(double gamma) {
  return {gamma / d_gamma_upper(gamma), gamma / 2.0};
}

double xi_of_gamma(double gamma) {
  const auto [lo, hi] = xi_bounds_of_gamma(gamma);
  return 0.5 * (lo + hi);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::data, "KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double sup = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

double ks_statistic(const SampleSet& a, const SampleSet& b) {
  return ks_statistic(a.values, b.values);
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw Error(ErrorKind::data, "KS critical value needs nonempty samples");
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace lfpp
