#pragma once

// Mixed linear complementarity problems with box bounds:
//
//   H y - rhs = w_lower - w_upper
//   0 <= y - lower  _|_  w_lower >= 0
//   0 <= upper - y  _|_  w_upper >= 0
//
// Rows with both bounds infinite are plain equalities. A friction link ties
// the bounds of a tangential row to +-mu times the current value of its
// normal row (box friction).

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "psf/errors.hpp"

namespace psf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct FrictionLink {
  Eigen::Index tangent = 0;
  Eigen::Index normal = 0;
  double mu = 0.0;
};

struct MLCPProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<FrictionLink> friction_links;

  Eigen::Index size() const { return rhs.size(); }
};

struct MLCPSolution {
  Eigen::VectorXd y;
  Eigen::VectorXd w_lower;
  Eigen::VectorXd w_upper;
  int iterations = 0;
  double residual = 0.0;
  // Per-sweep residual of the reduced problem; filled only on request.
  std::vector<double> residual_history;
};

struct PgsOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;
  double relaxation = 1.0;
  std::optional<Eigen::VectorXd> initial_y;
  bool record_history = false;
};

struct DirectOptions {
  Eigen::Index max_size = 64;
  // Fixed-point passes over friction-linked bounds.
  int max_friction_iterations = 10;
  double friction_tolerance = 1e-12;
  std::optional<Eigen::VectorXd> initial_y;
};

// Projected Gauss-Seidel. Plain equality rows are eliminated by a Schur
// complement first; friction bounds are refreshed from the latest normal value
// whenever a tangential row is visited.
MLCPSolution solve_pgs(const MLCPProblem& problem, const PgsOptions& opts = {});

// Block principal pivoting (Judice-Pires safeguard, Murty fallback) with an
// outer fixed-point loop over friction-linked bounds.
MLCPSolution solve_direct(const MLCPProblem& problem, const DirectOptions& opts = {});

// max_i max(|min(y - l, w_l)|, |min(u - y, w_u)|) with w = H y - rhs split
// into its positive and negative parts; friction bounds taken at y.
double complementarity_residual(const MLCPProblem& problem, const MLCPSolution& solution);

// Bounds with friction links resolved against y.
void effective_bounds(const MLCPProblem& problem, const Eigen::VectorXd& y, Eigen::VectorXd& lower,
                      Eigen::VectorXd& upper);

// Throws SolverError on shape, finiteness or bound-order violations.
void validate(const MLCPProblem& problem);

}  // namespace psf
