#pragma once

// How many nominal rollouts and sparse transitions fit a real-time budget.

namespace psf {

struct FeasibilityInput {
  double tau = 10.0;  // simulator speed / real time
  double threads = 100.0;
  double alpha = 1e-3;  // fraction of transitions sparsely evaluated
  double sequential_penalty = 1.0;
  double overhead = 0.0;  // fraction of compute lost to overhead
};

struct FeasibilityOutput {
  double dense = 0.0;
  double sparse = 0.0;
};

void validate(const FeasibilityInput& in);

// dense = floor(K tau (1 - overhead) / penalty), sparse = floor(dense-before-floor / alpha).
FeasibilityOutput budget(const FeasibilityInput& in);

// The same counts with K / tau in place of K tau, for comparison.
FeasibilityOutput budget_ratio_variant(const FeasibilityInput& in);

}  // namespace psf
