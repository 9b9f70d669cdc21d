#include <doctest.h>

#include <cmath>
#include <random>

#include "psf/errors.hpp"
#include "psf/uncertainty.hpp"

using namespace psf;

namespace {

// Reference values from an independent truncated-normal implementation.
constexpr double kMassMeanP = 0.7294459532;
constexpr double kFrictionMeanP = 0.6336970664;
constexpr double kMassMeanPPrime = 0.2138789750;
constexpr double kFrictionMeanPPrime = 0.7998959492;

DistributionSpec prior() { return {}; }
DistributionSpec updated() { return apply_probe(prior(), {0.2, 0.8}, {0.1, 0.2}); }

// Midpoint rule on an n x n grid, independent of make_grid.
double riemann(const DistributionSpec& s, int n) {
  const auto& d = s.domain;
  const double hm = (d.mass.upper - d.mass.lower) / n;
  const double hf = (d.friction.upper - d.friction.lower) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sum += density(s, {d.mass.lower + (i + 0.5) * hm, d.friction.lower + (j + 0.5) * hf});
  }
  return sum * hm * hf;
}

}  // namespace

TEST_CASE("density integrates to one") {
  CHECK(std::abs(riemann(prior(), 1024) - 1.0) < 1e-6);
  // The narrow updated mass belief needs a finer rule for the same accuracy.
  CHECK(std::abs(riemann(updated(), 2048) - 1.0) < 1e-6);
}

TEST_CASE("density matches a closed form and peaks at an interior mean") {
  DistributionSpec s;
  s.mean = {1.0, 0.8};
  s.sigma = {0.3, 0.2};
  auto pdf = [](double x, double m, double sd, double lo, double hi) {
    auto Phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
    return std::exp(-0.5 * std::pow((x - m) / sd, 2)) / (sd * std::sqrt(2.0 * M_PI)) /
           (Phi((hi - m) / sd) - Phi((lo - m) / sd));
  };
  const WorldParams at{0.7, 1.1};
  CHECK(density(s, at) ==
        doctest::Approx(pdf(0.7, 1.0, 0.3, 0.05, 2.0) * pdf(1.1, 0.8, 0.2, 0.05, 1.5)).epsilon(1e-12));
  const double peak = density(s, s.mean);
  for (double dm : {-0.2, 0.0, 0.3}) {
    for (double df : {-0.1, 0.0, 0.2}) {
      if (dm == 0.0 && df == 0.0) continue;
      CHECK(density(s, {1.0 + dm, 0.8 + df}) < peak);
    }
  }
  // Symmetric about the mean.
  CHECK(density(s, {1.1, 0.9}) == doctest::Approx(density(s, {0.9, 0.7})).epsilon(1e-14));
  CHECK_THROWS_AS(density(s, {2.5, 0.5}), InvalidArgument);
}

TEST_CASE("nominal is the truncated mean") {
  const auto p = nominal(prior());
  CHECK(p.mass == doctest::Approx(kMassMeanP).epsilon(1e-9));
  CHECK(p.friction == doctest::Approx(kFrictionMeanP).epsilon(1e-9));
  const auto q = nominal(updated());
  CHECK(q.mass == doctest::Approx(kMassMeanPPrime).epsilon(1e-9));
  CHECK(q.friction == doctest::Approx(kFrictionMeanPPrime).epsilon(1e-9));
}

TEST_CASE("truncated mean agrees with Monte Carlo sampling") {
  // Rejection sampling; the tolerance is three standard errors.
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal(0.25, 0.8);
  const int n = 10'000'000;
  double sum = 0.0;
  double sq = 0.0;
  for (int accepted = 0; accepted < n;) {
    const double x = normal(rng);
    if (x < 0.05 || x > 2.0) continue;
    sum += x;
    sq += x * x;
    ++accepted;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(truncated_normal_mean(0.25, 0.8, 0.05, 2.0) - mean) < 3.0 * se);
}

TEST_CASE("nominal edge cases") {
  DistributionSpec s;
  s.mean = {1.025, 0.775};  // domain centres
  const auto n = nominal(s);
  CHECK(n.mass == doctest::Approx(1.025).epsilon(1e-14));
  CHECK(n.friction == doctest::Approx(0.775).epsilon(1e-14));
  s.mean = {0.3, 0.2};
  s.sigma = {1e-6, 1e-6};
  const auto tight = nominal(s);
  CHECK(tight.mass == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(tight.friction == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(s.domain.contains(nominal(prior())));
}

TEST_CASE("grid on a unit square with uniform density") {
  DistributionSpec s;
  s.domain.mass = {"mass", 0.0, 1.0, "kg"};
  s.domain.friction = {"friction", 0.0, 1.0, ""};
  s.mean = {0.5, 0.5};
  s.sigma = {1e6, 1e6};
  const auto g = make_grid(s, 2, 2);
  REQUIRE(g.size() == 4);
  for (double w : g.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g.points[0].mass == 0.25);
  CHECK(g.points[1].friction == 0.75);
  CHECK_THROWS_AS(make_grid(s, 1, 2), InvalidArgument);
}

TEST_CASE("48 x 48 grid weights form a pmf concentrated near the mean") {
  const auto g = make_grid(prior());
  REQUIRE(g.size() == 48u * 48u);
  double sum = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.weights[i] > 0.0);
    sum += g.weights[i];
    if (g.weights[i] > g.weights[best]) best = i;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK(std::abs(g.points[best].mass - 0.25) < 2.0 * (1.95 / 48));
  CHECK(std::abs(g.points[best].friction - 0.5) < 2.0 * (1.45 / 48));
  CHECK(std::abs(g.raw_mass - 1.0) < 1e-3);
  const auto again = make_grid(prior());
  CHECK(again.weights == g.weights);
}

TEST_CASE("grid refinement barely moves scores of smooth fields") {
  auto field = [](const WorldParams& p) { return std::clamp(0.3 * p.mass / p.friction, 0.0, 1.0); };
  for (const auto& spec : {prior(), updated()}) {
    double s[2];
    int k = 0;
    for (int n : {48, 96}) {
      const auto g = make_grid(spec, n, n);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g.weights[i] * field(g.points[i]);
      s[k++] = acc;
    }
    CHECK(std::abs(s[0] - s[1]) < 1e-3);
  }
}

TEST_CASE("probe update") {
  const auto p = updated();
  CHECK(p.mean == WorldParams{0.2, 0.8});
  CHECK(p.sigma == WorldParams{0.1, 0.2});
  CHECK(apply_probe(prior(), prior().mean, prior().sigma) == prior());
  CHECK_THROWS_AS(apply_probe(prior(), {3.0, 0.5}, {0.1, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(apply_probe(prior(), {0.3, 0.5}, {0.0, 0.1}), InvalidArgument);
  auto narrow = apply_probe(prior(), prior().mean, {0.4, 0.25});
  CHECK(density(narrow, prior().mean) > density(prior(), prior().mean));
}

TEST_CASE("nominal closeness") {
  CHECK(nominal_close({0.25, 0.5}, {0.25, 0.5}));
  CHECK_FALSE(nominal_close({0.25, 0.5}, {0.2, 0.8}));
  CHECK(nominal_close({0.25, 0.5}, {0.26, 0.55}));
  CHECK_FALSE(nominal_close({0.25, 0.5}, {0.31, 0.5}));
}

TEST_CASE("re-weighting a grid equals building it from the new spec") {
  const auto g = make_grid(prior());
  const auto w = reweight(g, updated());
  const auto h = make_grid(updated());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(w[i] - h.weights[i]) <= 1e-15);
}
