#pragma once

// Truncated Gaussian belief over (mass, friction) and its quadrature grid.

#include <vector>

#include "psf/params.hpp"

namespace psf {

struct DistributionSpec {
  WorldParams mean{0.25, 0.5};
  WorldParams sigma{0.8, 0.5};
  ParamDomain domain{};

  bool operator==(const DistributionSpec&) const = default;
};

void validate(const DistributionSpec& spec);

// Product of per-dimension Gaussians, each renormalised over its bounds.
// Throws InvalidArgument outside the domain.
double density(const DistributionSpec& spec, const WorldParams& theta);

// Mean of a normal(mu, sigma) truncated to [lo, hi].
double truncated_normal_mean(double mu, double sigma, double lo, double hi);

// Expectation of the truncated distribution, per dimension.
WorldParams nominal(const DistributionSpec& spec);

struct ParamGrid {
  int n_mass = 0;
  int n_friction = 0;
  // Mass-major: index = i * n_friction + j.
  std::vector<WorldParams> points;
  std::vector<double> weights;
  // Sum of density * cell area before renormalisation.
  double raw_mass = 0.0;

  std::size_t size() const { return points.size(); }
  std::size_t index(int i_mass, int j_friction) const {
    return static_cast<std::size_t>(i_mass) * static_cast<std::size_t>(n_friction) + static_cast<std::size_t>(j_friction);
  }
};

// Cell-centred tiling of the domain with weights density * cell area,
// renormalised to sum to one.
ParamGrid make_grid(const DistributionSpec& spec, int n_mass = 48, int n_friction = 48);

// Weights of `spec` at the points of an existing grid.
std::vector<double> reweight(const ParamGrid& grid, const DistributionSpec& spec);

// The emulated probing action: replaces mean and sigma, keeps the domain.
DistributionSpec apply_probe(const DistributionSpec& spec, const WorldParams& new_mean, const WorldParams& new_sigma);

struct NominalTolerance {
  double mass = 0.05;
  double friction = 0.1;
};

bool nominal_close(const WorldParams& a, const WorldParams& b, const NominalTolerance& tol = {});

}  // namespace psf
