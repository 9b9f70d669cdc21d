#include "psf/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "psf/errors.hpp"

namespace psf {

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double truncated_pdf(double x, double mu, double sigma, double lo, double hi) {
  const double z = cdf((hi - mu) / sigma) - cdf((lo - mu) / sigma);
  return phi((x - mu) / sigma) / (sigma * z);
}

void check_bounds(const ParamBounds& b) {
  if (!(b.lower < b.upper) || !std::isfinite(b.lower) || !std::isfinite(b.upper)) {
    throw InvalidArgument("domain bounds for " + b.name + " must satisfy lower < upper");
  }
}

}  // namespace

void validate(const DistributionSpec& spec) {
  check_bounds(spec.domain.mass);
  check_bounds(spec.domain.friction);
  if (!(spec.sigma.mass > 0.0) || !(spec.sigma.friction > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!spec.domain.contains(spec.mean)) throw InvalidArgument("distribution mean lies outside the domain");
}

double density(const DistributionSpec& spec, const WorldParams& theta) {
  if (!spec.domain.contains(theta)) throw InvalidArgument("density evaluated outside the domain");
  const auto& d = spec.domain;
  return truncated_pdf(theta.mass, spec.mean.mass, spec.sigma.mass, d.mass.lower, d.mass.upper) *
         truncated_pdf(theta.friction, spec.mean.friction, spec.sigma.friction, d.friction.lower, d.friction.upper);
}

double truncated_normal_mean(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0) || !(lo < hi)) throw InvalidArgument("invalid truncated normal");
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double z = cdf(b) - cdf(a);
  // Far in a tail the normaliser underflows; the mass piles onto the nearer bound.
  if (!(z > 1e-300)) return mu < lo ? lo : hi;
  return std::clamp(mu + sigma * (phi(a) - phi(b)) / z, lo, hi);
}

WorldParams nominal(const DistributionSpec& spec) {
  validate(spec);
  const auto& d = spec.domain;
  return {truncated_normal_mean(spec.mean.mass, spec.sigma.mass, d.mass.lower, d.mass.upper),
          truncated_normal_mean(spec.mean.friction, spec.sigma.friction, d.friction.lower, d.friction.upper)};
}

ParamGrid make_grid(const DistributionSpec& spec, int n_mass, int n_friction) {
  validate(spec);
  if (n_mass < 2 || n_friction < 2) throw InvalidArgument("grid needs at least 2 points per dimension");
  const auto& d = spec.domain;
  const double hm = (d.mass.upper - d.mass.lower) / n_mass;
  const double hf = (d.friction.upper - d.friction.lower) / n_friction;
  ParamGrid g;
  g.n_mass = n_mass;
  g.n_friction = n_friction;
  g.points.reserve(static_cast<std::size_t>(n_mass) * static_cast<std::size_t>(n_friction));
  for (int i = 0; i < n_mass; ++i) {
    for (int j = 0; j < n_friction; ++j) {
      g.points.push_back({d.mass.lower + (i + 0.5) * hm, d.friction.lower + (j + 0.5) * hf});
    }
  }
  g.weights = reweight(g, spec);
  double raw = 0.0;
  for (const auto& p : g.points) raw += density(spec, p) * hm * hf;
  g.raw_mass = raw;
  return g;
}

std::vector<double> reweight(const ParamGrid& grid, const DistributionSpec& spec) {
  validate(spec);
  std::vector<double> w(grid.points.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = density(spec, grid.points[i]);
    sum += w[i];
  }
  if (!(sum > 0.0)) throw InvalidArgument("distribution puts no mass on the grid");
  for (double& v : w) v /= sum;
  return w;
}

DistributionSpec apply_probe(const DistributionSpec& spec, const WorldParams& new_mean, const WorldParams& new_sigma) {
  DistributionSpec out = spec;
  out.mean = new_mean;
  out.sigma = new_sigma;
  if (!spec.domain.contains(new_mean)) throw InvalidArgument("probe mean lies outside the domain");
  validate(out);
  return out;
}

bool nominal_close(const WorldParams& a, const WorldParams& b, const NominalTolerance& tol) {
  return std::abs(a.mass - b.mass) <= tol.mass && std::abs(a.friction - b.friction) <= tol.friction;
}

}  // namespace psf
