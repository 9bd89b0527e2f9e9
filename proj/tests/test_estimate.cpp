#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lfpp/error.hpp"
#include "lfpp/estimate.hpp"
#include "lfpp/seed.hpp"

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

SampleSet set_of(std::vector<double> values, std::string descriptor = "test") {
  SampleSet s;
  s.seeds.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.seeds[i] = i;
  s.values = std::move(values);
  s.descriptor = std::move(descriptor);
  return s;
}

SampleSet uniform_set(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return set_of(std::move(v));
}

MonteCarlo zero_mc(const GridSpec& grid, std::size_t replicas = 16) {
  MonteCarlo mc;
  mc.grid = grid;
  mc.replicas = replicas;
  mc.root_seed = 9;
  mc.source = FieldSource::zero();
  mc.workers = 1;
  return mc;
}

}  // namespace

TEST_CASE("quantile is the ceil(np)-th order statistic inside its interval") {
  const SampleSet s = set_of({5, 1, 4, 2, 3, 9, 8, 7, 6, 10});
  const auto med = quantile_estimate(s, 0.5);
  CHECK(med.point == 5.0);
  CHECK(med.n == 10);
  CHECK(med.ci_lo <= med.point);
  CHECK(med.point <= med.ci_hi);
  CHECK(quantile_estimate(s, 0.9).point == 9.0);
  CHECK(quantile_estimate(s, 0.01).point == 1.0);
  CHECK(quantile_estimate(s, 0.99).point == 10.0);
}

TEST_CASE("quantile estimates are monotone in p") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const SampleSet s = uniform_set(rng, 37 + static_cast<std::size_t>(trial));
    double last = -INFINITY;
    for (double p = 0.02; p < 1.0; p += 0.02) {
      const auto q = quantile_estimate(s, p);
      REQUIRE(q.point >= last);
      REQUIRE(q.ci_lo <= q.point);
      REQUIRE(q.point <= q.ci_hi);
      last = q.point;
    }
  }
}

TEST_CASE("median interval covers 0.5 in at least 90% of 500 uniform trials") {
  std::mt19937_64 rng(2718);
  int covered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto q = quantile_estimate(uniform_set(rng, 64), 0.5);
    if (q.ci_lo <= 0.5 && 0.5 <= q.ci_hi) ++covered;
  }
  INFO("covered " << covered << " of 500");
  CHECK(covered >= 450);
}

TEST_CASE("empirical CDF at the returned quantile is within 2/sqrt(n) of p") {
  std::mt19937_64 rng(4);
  for (std::size_t n : {16u, 64u, 257u}) {
    const SampleSet s = uniform_set(rng, n);
    for (double p : {0.1, 0.5, 0.9}) {
      const double f = empirical_cdf(s, quantile_estimate(s, p).point);
      CHECK(std::abs(f - p) <= 2.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("quantile and sample set errors") {
  CHECK(kind_of([] { quantile_estimate(set_of({}), 0.5); }) == ErrorKind::data);
  CHECK(kind_of([] { quantile_estimate(set_of({1.0}), 0.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { quantile_estimate(set_of({1.0}), 1.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { quantile_estimate(set_of({1.0, NAN}), 0.5); }) == ErrorKind::data);
  CHECK(kind_of([] { quantile_estimate(set_of({1.0}, ""), 0.5); }) == ErrorKind::data);
  SampleSet bad = set_of({1.0, 2.0});
  bad.seeds.pop_back();
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::data);
}

TEST_CASE("KS statistic examples") {
  CHECK(ks_statistic(set_of({3, 1, 2}), set_of({1, 2, 3})) == 0.0);
  CHECK(ks_statistic(set_of({1, 2, 3}), set_of({4, 5})) == 1.0);
  CHECK(ks_statistic(set_of({1, 2, 3}), set_of({2, 3, 4})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(kind_of([] { ks_statistic(std::vector<double>{}, std::vector<double>{1.0}); }) == ErrorKind::data);
  // c(0.05) = 1.358102 for equal arms of 64.
  CHECK(ks_critical_value(64, 64) == doctest::Approx(1.3581015 * std::sqrt(2.0 / 64)).epsilon(1e-6));
}

TEST_CASE("KS statistic agrees with a direct CDF sweep") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> u(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(1 + trial % 13);
    std::vector<double> b(1 + trial % 7);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    double sup = 0.0;
    for (int x = -1; x <= 10; ++x) {
      sup = std::max(sup, std::abs(empirical_cdf(set_of(a), x) - empirical_cdf(set_of(b), x)));
    }
    REQUIRE(ks_statistic(a, b) == doctest::Approx(sup).epsilon(1e-15));
  }
}

TEST_CASE("noiseless power law fits exactly") {
  std::vector<std::pair<double, double>> pts;
  for (int k = 3; k <= 7; ++k) {
    const double eps = std::ldexp(1.0, -k);
    pts.emplace_back(eps, std::pow(eps, 0.25));
  }
  const auto fit = fit_scaling_exponent(pts);
  CHECK(std::abs(fit.slope - 0.25) <= 1e-12);
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.stderr_slope <= 1e-12);
  REQUIRE(fit.points.size() == 5);
  CHECK(fit.points[0].first == doctest::Approx(std::log(0.125)));
}

TEST_CASE("rescaling every a_eps leaves the slope unchanged") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<std::pair<double, double>> pts;
  for (int k = 3; k <= 7; ++k) {
    const double eps = std::ldexp(1.0, -k);
    pts.emplace_back(eps, std::pow(eps, 0.2) * std::exp(noise(rng)));
  }
  const auto base = fit_scaling_exponent(pts);
  for (double factor : {0.5, 4.0, 1024.0, 3.0, 0.1}) {
    auto scaled = pts;
    for (auto& [e, a] : scaled) a *= factor;
    const auto fit = fit_scaling_exponent(scaled);
    CHECK(fit.slope == doctest::Approx(base.slope).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(base.intercept + std::log(factor)).epsilon(1e-9));
  }
  auto pow2 = pts;
  for (auto& [e, a] : pow2) a *= 8.0;
  CHECK(fit_scaling_exponent(pow2).slope == base.slope);
}

TEST_CASE("noisy slope 0.3 is recovered within 3 standard errors") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> noise(0.0, 0.02);
  int inside = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int k = 2; k <= 9; ++k) {
      const double eps = std::ldexp(1.0, -k);
      pts.emplace_back(eps, 1.7 * std::pow(eps, 0.3) * std::exp(noise(rng)));
    }
    const auto fit = fit_scaling_exponent(pts);
    REQUIRE(fit.stderr_slope > 0.0);
    if (std::abs(fit.slope - 0.3) <= 3.0 * fit.stderr_slope) ++inside;
  }
  CHECK(inside >= 95);
}

TEST_CASE("fit input errors") {
  CHECK(kind_of([] { fit_scaling_exponent({{0.5, 1.0}, {0.25, 1.0}}); }) == ErrorKind::data);
  CHECK(kind_of([] { fit_scaling_exponent({{0.5, 1.0}, {0.25, 0.0}, {0.125, 1.0}}); }) == ErrorKind::data);
  CHECK(kind_of([] { fit_scaling_exponent({{0.5, 1.0}, {-0.25, 1.0}, {0.125, 1.0}}); }) == ErrorKind::data);
  CHECK(kind_of([] { fit_scaling_exponent({{0.25, 1.0}, {0.5, 1.0}, {0.125, 1.0}}); }) == ErrorKind::data);
  CHECK_NOTHROW(fit_loglog({{0.25, 1.0}, {0.5, 1.5}, {1.0, 2.0}}));
}

TEST_CASE("exponent formulas") {
  const double g83 = std::sqrt(8.0 / 3.0);
  CHECK(q_subcritical(1.0) == 2.5);
  CHECK(q_subcritical(g83) == doctest::Approx(2.041241).epsilon(1e-6));
  CHECK(q_subcritical(2.0) == 2.0);
  CHECK(d_gamma_upper(0.1) == doctest::Approx(2.146421).epsilon(1e-6));
  CHECK(d_gamma_upper(g83) == doctest::Approx(5.642734).epsilon(1e-6));
  CHECK(d_gamma_upper(1e-9) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(d_gamma_upper(g83) >= 4.0);

  const auto [lo, hi] = xi_bounds_of_gamma(g83);
  CHECK(lo == doctest::Approx(0.289399).epsilon(1e-5));
  CHECK(hi == doctest::Approx(0.816497).epsilon(1e-6));
  CHECK(lo < g83 / 4.0);
  CHECK(g83 / 4.0 < hi);
  const auto [lo1, hi1] = xi_bounds_of_gamma(0.1);
  CHECK(lo1 == doctest::Approx(0.046589).epsilon(1e-5));
  CHECK(hi1 == 0.05);
  for (double g = 0.01; g <= g83; g += 0.01) {
    const auto [a, b] = xi_bounds_of_gamma(g);
    REQUIRE(a < b);
  }
  CHECK(xi_of_gamma(g83) == doctest::Approx(0.5 * (lo + hi)));

  // Target slope 1 - xi Q at gamma = sqrt(8/3), xi = gamma / 4.
  CHECK(1.0 - g83 / 4.0 * q_subcritical(g83) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("exponent formula domain errors") {
  CHECK(kind_of([] { q_subcritical(0.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { q_subcritical(-1.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { q_subcritical(2.5); }) == ErrorKind::domain);
  CHECK(kind_of([] { d_gamma_upper(0.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { d_gamma_upper(1.7); }) == ErrorKind::domain);
  CHECK(kind_of([] { xi_bounds_of_gamma(2.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { q_subcritical(NAN); }) == ErrorKind::domain);
}

TEST_CASE("zero-field hook makes the estimators deterministic") {
  const GridSpec grid{256, 4.0, 4};  // delta = 1/32
  const MonteCarlo mc = zero_mc(grid);
  const auto a = estimate_a_eps(0.4, 0.0625, mc);
  CHECK(a.point == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.ci_lo == a.point);
  CHECK(a.ci_hi == a.point);

  const auto b = estimate_beta(0.4, 0.0625, mc);
  CHECK(b.point == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.ci_hi - b.ci_lo == 0.0);

  const auto al = estimate_alpha(0.4, 0.5, 0.0625, mc);
  const Field zero = mollify(Field::constant(grid, 0.0), 0.0625);
  const double unit = *around_annulus(build_weighted_grid(zero, 0.4), AnnulusSpec{{0.0, 0.0}, 1.0, 2.0}).value;
  CHECK(al.point == unit);
  CHECK(al.ci_hi - al.ci_lo == 0.0);
  // Shortest lattice loop around the unit circle: between 2 pi and the octile bound.
  CHECK(al.point >= 2.0 * std::numbers::pi);
  CHECK(al.point <= 2.0 * std::numbers::pi * 1.0824 + 0.1);
}

TEST_CASE("constant hook scales the zero-field estimate by exp(xi c)") {
  const GridSpec grid{256, 4.0, 4};  // delta = 1/32
  MonteCarlo mc = zero_mc(grid);
  mc.source = FieldSource::constant_field(0.5);
  const auto b = estimate_beta(0.4, 0.0625, mc);
  CHECK(b.point == doctest::Approx(std::exp(0.2)).epsilon(1e-12));
}

TEST_CASE("estimators need 16 replicas and report the replica index on failure") {
  const GridSpec grid{256, 4.0, 4};  // delta = 1/32
  CHECK(kind_of([&] { estimate_beta(0.4, 0.0625, zero_mc(grid, 8)); }) == ErrorKind::domain);
  CHECK(kind_of([&] { estimate_alpha(0.4, 1.5, 0.0625, zero_mc(grid)); }) == ErrorKind::domain);
  // A kernel below two lattice spacings fails inside replica 0.
  MonteCarlo sampled = zero_mc(grid);
  sampled.source = FieldSource::sampled();
  try {
    estimate_beta(0.4, 0.03, sampled);
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
    CHECK(std::string(e.what()).find("replica 0") != std::string::npos);
  }
}

TEST_CASE("sampled estimators are pure functions of the root seed" * doctest::timeout(600)) {
  const GridSpec grid{256, 4.0, 4};  // delta = 1/32
  MonteCarlo mc;
  mc.grid = grid;
  mc.replicas = 16;
  mc.root_seed = 404;
  mc.workers = 1;
  const auto one = sample_beta(0.4, 0.0625, mc);
  mc.workers = 0;
  const auto two = sample_beta(0.4, 0.0625, mc);
  CHECK(one.values == two.values);
  CHECK(one.seeds == two.seeds);
  for (std::size_t i = 0; i < one.seeds.size(); ++i) CHECK(one.seeds[i] == derive_seed(404, i));
  CHECK(quantile_estimate(one, 0.5) == quantile_estimate(two, 0.5));
  const auto f = empirical_cdf(one, quantile_estimate(one, 0.5).point);
  CHECK(std::abs(f - 0.5) <= 2.0 / std::sqrt(16.0));
  mc.root_seed = 405;
  CHECK(sample_beta(0.4, 0.0625, mc).values != one.values);
}
