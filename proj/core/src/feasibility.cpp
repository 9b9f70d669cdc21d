#include "psf/feasibility.hpp"

#include <cmath>
#include <limits>

#include "psf/errors.hpp"

namespace psf {

namespace {

FeasibilityOutput counts(double capacity, const FeasibilityInput& in) {
  const double dense = capacity * (1.0 - in.overhead) / in.sequential_penalty;
  // Nudge by a few ulps so that exact products such as 1000 / 0.001 survive the floor.
  auto floor_exact = [](double v) { return std::floor(v * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())); };
  return {floor_exact(dense), floor_exact(dense / in.alpha)};
}

}  // namespace

void validate(const FeasibilityInput& in) {
  if (!(in.tau > 0.0) || !std::isfinite(in.tau)) throw InvalidArgument("tau must be positive");
  if (!(in.threads >= 1.0) || !std::isfinite(in.threads)) throw InvalidArgument("thread count must be at least 1");
  if (!(in.alpha > 0.0 && in.alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (!(in.sequential_penalty >= 1.0) || !std::isfinite(in.sequential_penalty)) {
    throw InvalidArgument("sequential penalty must be at least 1");
  }
  if (!(in.overhead >= 0.0 && in.overhead < 1.0)) throw InvalidArgument("overhead must lie in [0, 1)");
}

FeasibilityOutput budget(const FeasibilityInput& in) {
  validate(in);
  return counts(in.threads * in.tau, in);
}

FeasibilityOutput budget_ratio_variant(const FeasibilityInput& in) {
  validate(in);
  return counts(in.threads / in.tau, in);
}

}  // namespace psf
