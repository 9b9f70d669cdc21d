#include "psf/lcp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace psf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void resolve_bounds(const VectorXd& lower, const VectorXd& upper, const std::vector<FrictionLink>& links,
                    const VectorXd& y, VectorXd& lo, VectorXd& hi) {
  lo = lower;
  hi = upper;
  for (const auto& link : links) {
    const double cap = link.mu * std::max(0.0, y[link.normal]);
    lo[link.tangent] = -cap;
    hi[link.tangent] = cap;
  }
}

double residual_of(const MatrixXd& A, const VectorXd& b, const VectorXd& lower, const VectorXd& upper,
                   const std::vector<FrictionLink>& links, const VectorXd& y) {
  VectorXd lo, hi;
  resolve_bounds(lower, upper, links, y, lo, hi);
  const VectorXd w = A * y - b;
  double worst = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double wl = std::max(w[i], 0.0);
    const double wu = std::max(-w[i], 0.0);
    worst = std::max(worst, std::abs(std::min(y[i] - lo[i], wl)));
    worst = std::max(worst, std::abs(std::min(hi[i] - y[i], wu)));
  }
  return worst;
}

// Problem with the plain equality rows E eliminated by a Schur complement:
//   y_E = c - K y_R,   A y_R - b = w_R.
struct Reduced {
  std::vector<Index> eq;
  std::vector<Index> rest;
  MatrixXd A;
  VectorXd b;
  VectorXd lower;
  VectorXd upper;
  std::vector<FrictionLink> links;
  MatrixXd K;
  VectorXd c;

  VectorXd expand(const VectorXd& y_rest) const {
    VectorXd y(static_cast<Index>(eq.size() + rest.size()));
    const VectorXd y_eq = c - K * y_rest;
    for (std::size_t i = 0; i < eq.size(); ++i) y[eq[i]] = y_eq[static_cast<Index>(i)];
    for (std::size_t i = 0; i < rest.size(); ++i) y[rest[i]] = y_rest[static_cast<Index>(i)];
    return y;
  }
  VectorXd restrict(const VectorXd& y) const { return y(rest); }
  Index original(Index reduced_row) const { return rest[static_cast<std::size_t>(reduced_row)]; }
};

bool is_equality_row(const MLCPProblem& p, Index i) {
  if (!(std::isinf(p.lower[i]) && p.lower[i] < 0 && std::isinf(p.upper[i]) && p.upper[i] > 0)) return false;
  return std::none_of(p.friction_links.begin(), p.friction_links.end(),
                      [i](const FrictionLink& l) { return l.tangent == i || l.normal == i; });
}

Reduced reduce(const MLCPProblem& p) {
  Reduced r;
  const Index n = p.size();
  for (Index i = 0; i < n; ++i) (is_equality_row(p, i) ? r.eq : r.rest).push_back(i);

  Eigen::PartialPivLU<MatrixXd> lu;
  if (!r.eq.empty()) {
    lu.compute(p.H(r.eq, r.eq));
    if (!(lu.rcond() > 1e-14)) {
      r.eq.clear();
      r.rest.resize(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) r.rest[static_cast<std::size_t>(i)] = i;
    }
  }
  if (r.eq.empty()) {
    r.A = p.H(r.rest, r.rest);
    r.b = p.rhs(r.rest);
    r.K.resize(0, static_cast<Index>(r.rest.size()));
    r.c.resize(0);
  } else {
    r.K = lu.solve(p.H(r.eq, r.rest));
    r.c = lu.solve(p.rhs(r.eq));
    const MatrixXd H_re = p.H(r.rest, r.eq);
    r.A = p.H(r.rest, r.rest) - H_re * r.K;
    r.b = p.rhs(r.rest) - H_re * r.c;
  }
  r.lower = p.lower(r.rest);
  r.upper = p.upper(r.rest);
  std::vector<Index> position(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < r.rest.size(); ++i) position[static_cast<std::size_t>(r.rest[i])] = static_cast<Index>(i);
  for (auto link : p.friction_links) {
    link.tangent = position[static_cast<std::size_t>(link.tangent)];
    link.normal = position[static_cast<std::size_t>(link.normal)];
    r.links.push_back(link);
  }
  return r;
}

MLCPSolution finish(const MLCPProblem& p, VectorXd y, int iterations) {
  MLCPSolution s;
  const VectorXd w = p.H * y - p.rhs;
  s.w_lower = w.cwiseMax(0.0);
  s.w_upper = (-w).cwiseMax(0.0);
  s.y = std::move(y);
  s.iterations = iterations;
  s.residual = residual_of(p.H, p.rhs, p.lower, p.upper, p.friction_links, s.y);
  return s;
}

VectorXd project(VectorXd y, const VectorXd& lower, const VectorXd& upper, const std::vector<FrictionLink>& links) {
  VectorXd lo, hi;
  resolve_bounds(lower, upper, links, y, lo, hi);
  return y.cwiseMax(lo).cwiseMin(hi);
}

VectorXd initial_rest(const Reduced& r, const std::optional<VectorXd>& initial) {
  if (initial && initial->size() == static_cast<Index>(r.eq.size() + r.rest.size())) return r.restrict(*initial);
  return VectorXd::Zero(static_cast<Index>(r.rest.size()));
}

// ---------------------------------------------------------------------------
// Block principal pivoting on a box LCP with fixed bounds.

enum class Slot : unsigned char { Free, Lower, Upper, Fixed };

struct PivotResult {
  VectorXd y;
  int iterations = 0;
};

PivotResult pivot_solve(const MatrixXd& A, const VectorXd& b, const VectorXd& lo, const VectorXd& hi,
                        std::vector<Slot>& slots) {
  const Index m = b.size();
  const double scale = m > 0 ? 1.0 + b.cwiseAbs().maxCoeff() + A.cwiseAbs().maxCoeff() : 1.0;
  const double tol_w = 1e-13 * scale;
  const int max_iter = 50 + 20 * static_cast<int>(m);

  for (Index i = 0; i < m; ++i) {
    if (lo[i] == hi[i]) slots[i] = Slot::Fixed;
    else if (slots[i] == Slot::Fixed) slots[i] = std::isfinite(lo[i]) ? Slot::Lower : Slot::Upper;
    if (slots[i] == Slot::Lower && !std::isfinite(lo[i])) slots[i] = std::isfinite(hi[i]) ? Slot::Upper : Slot::Free;
    if (slots[i] == Slot::Upper && !std::isfinite(hi[i])) slots[i] = std::isfinite(lo[i]) ? Slot::Lower : Slot::Free;
  }

  PivotResult out;
  out.y = VectorXd::Zero(m);
  Index best = m + 1;
  int budget = 3;
  std::vector<Index> free_idx;
  std::vector<Index> infeasible;

  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    free_idx.clear();
    for (Index i = 0; i < m; ++i) {
      switch (slots[i]) {
        case Slot::Free: free_idx.push_back(i); break;
        case Slot::Lower:
        case Slot::Fixed: out.y[i] = lo[i]; break;
        case Slot::Upper: out.y[i] = hi[i]; break;
      }
    }
    if (!free_idx.empty()) {
      const auto f = static_cast<Index>(free_idx.size());
      MatrixXd Aff(f, f);
      VectorXd rhs(f);
      for (Index r = 0; r < f; ++r) {
        const Index i = free_idx[r];
        double acc = b[i];
        for (Index j = 0; j < m; ++j) {
          if (slots[j] != Slot::Free) acc -= A(i, j) * out.y[j];
        }
        rhs[r] = acc;
        for (Index c = 0; c < f; ++c) Aff(r, c) = A(i, free_idx[c]);
      }
      Eigen::PartialPivLU<MatrixXd> lu(Aff);
      if (!(lu.rcond() > 1e-15)) {
        throw SolverError(SolverError::Kind::PivotFailure, "singular principal submatrix during pivoting",
                          free_idx.front());
      }
      const VectorXd yf = lu.solve(rhs);
      for (Index r = 0; r < f; ++r) out.y[free_idx[r]] = yf[r];
    }

    const VectorXd w = A * out.y - b;
    infeasible.clear();
    for (Index i = 0; i < m; ++i) {
      const double tol_y = 1e-13 * (1.0 + std::abs(out.y[i]));
      switch (slots[i]) {
        case Slot::Free:
          if (out.y[i] < lo[i] - tol_y || out.y[i] > hi[i] + tol_y) infeasible.push_back(i);
          break;
        case Slot::Lower:
          if (w[i] < -tol_w) infeasible.push_back(i);
          break;
        case Slot::Upper:
          if (w[i] > tol_w) infeasible.push_back(i);
          break;
        case Slot::Fixed: break;
      }
    }
    if (infeasible.empty()) return out;

    auto flip = [&](Index i) {
      if (slots[i] == Slot::Free) slots[i] = out.y[i] < lo[i] ? Slot::Lower : Slot::Upper;
      else slots[i] = Slot::Free;
    };
    const auto count = static_cast<Index>(infeasible.size());
    if (count < best) {
      best = count;
      budget = 3;
      for (Index i : infeasible) flip(i);
    } else if (budget > 0) {
      --budget;
      for (Index i : infeasible) flip(i);
    } else {
      flip(infeasible.back());
    }
  }
  throw SolverError(SolverError::Kind::PivotFailure, "block pivoting did not terminate (cycling)");
}

}  // namespace

void validate(const MLCPProblem& p) {
  const Index n = p.size();
  if (p.H.rows() != n || p.H.cols() != n || p.lower.size() != n || p.upper.size() != n) {
    throw SolverError(SolverError::Kind::DimensionMismatch, "MLCP dimensions are inconsistent");
  }
  if (!p.H.allFinite() || !p.rhs.allFinite()) {
    throw SolverError(SolverError::Kind::NonFinite, "MLCP matrix or right-hand side is not finite");
  }
  for (Index i = 0; i < n; ++i) {
    if (std::isnan(p.lower[i]) || std::isnan(p.upper[i])) {
      throw SolverError(SolverError::Kind::NonFinite, "NaN bound at row " + std::to_string(i), i);
    }
    if (p.lower[i] > p.upper[i]) {
      throw SolverError(SolverError::Kind::DimensionMismatch, "lower > upper at row " + std::to_string(i), i);
    }
    if (p.H(i, i) == 0.0) {
      throw SolverError(SolverError::Kind::ZeroDiagonal, "zero diagonal at row " + std::to_string(i), i);
    }
  }
  for (const auto& link : p.friction_links) {
    if (link.tangent < 0 || link.tangent >= n || link.normal < 0 || link.normal >= n || link.tangent == link.normal) {
      throw SolverError(SolverError::Kind::DimensionMismatch, "friction link references an invalid row");
    }
    if (!std::isfinite(link.mu) || link.mu < 0.0) {
      throw SolverError(SolverError::Kind::NonFinite, "friction coefficient must be finite and >= 0", link.tangent);
    }
  }
}

void effective_bounds(const MLCPProblem& problem, const VectorXd& y, VectorXd& lower, VectorXd& upper) {
  resolve_bounds(problem.lower, problem.upper, problem.friction_links, y, lower, upper);
}

double complementarity_residual(const MLCPProblem& problem, const MLCPSolution& solution) {
  if (solution.y.size() != problem.size() || problem.H.rows() != problem.size()) {
    throw SolverError(SolverError::Kind::DimensionMismatch, "solution size does not match problem");
  }
  return residual_of(problem.H, problem.rhs, problem.lower, problem.upper, problem.friction_links, solution.y);
}

MLCPSolution solve_pgs(const MLCPProblem& problem, const PgsOptions& opts) {
  validate(problem);
  const Reduced r = reduce(problem);
  const Index m = r.b.size();

  for (Index i = 0; i < m; ++i) {
    if (!(r.A(i, i) != 0.0) || !std::isfinite(r.A(i, i))) {
      throw SolverError(SolverError::Kind::ZeroDiagonal, "zero diagonal after eliminating equality rows", r.original(i));
    }
  }

  // Tangent rows are visited after their normals so each refresh sees this sweep's value.
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::vector<const FrictionLink*> link_of(static_cast<std::size_t>(m), nullptr);
  for (Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  for (const auto& link : r.links) link_of[static_cast<std::size_t>(link.tangent)] = &link;
  std::stable_partition(order.begin(), order.end(),
                        [&](Index i) { return link_of[static_cast<std::size_t>(i)] == nullptr; });

  VectorXd y = project(initial_rest(r, opts.initial_y), r.lower, r.upper, r.links);
  MLCPSolution out;
  int it = 0;
  double res = residual_of(r.A, r.b, r.lower, r.upper, r.links, y);
  while (res > opts.tolerance && it < opts.max_iterations) {
    for (Index i : order) {
      double lo = r.lower[i];
      double hi = r.upper[i];
      if (const FrictionLink* link = link_of[static_cast<std::size_t>(i)]) {
        hi = link->mu * std::max(0.0, y[link->normal]);
        lo = -hi;
      }
      const double g = r.A.row(i).dot(y) - r.b[i];
      y[i] = std::clamp(y[i] - opts.relaxation * g / r.A(i, i), lo, hi);
    }
    ++it;
    res = residual_of(r.A, r.b, r.lower, r.upper, r.links, y);
    if (opts.record_history) out.residual_history.push_back(res);
  }

  MLCPSolution s = finish(problem, r.expand(y), it);
  s.residual_history = std::move(out.residual_history);
  return s;
}

MLCPSolution solve_direct(const MLCPProblem& problem, const DirectOptions& opts) {
  if (problem.size() > opts.max_size) {
    throw SolverError(SolverError::Kind::CapExceeded,
                      "problem size " + std::to_string(problem.size()) + " exceeds direct-solver cap " +
                          std::to_string(opts.max_size));
  }
  validate(problem);
  const Reduced r = reduce(problem);
  const Index m = r.b.size();

  VectorXd y = initial_rest(r, opts.initial_y);
  std::vector<Slot> slots(static_cast<std::size_t>(m), Slot::Lower);
  if (opts.initial_y) {
    VectorXd lo, hi;
    resolve_bounds(r.lower, r.upper, r.links, y, lo, hi);
    for (Index i = 0; i < m; ++i) {
      const double tol = 1e-12 * (1.0 + std::abs(y[i]));
      if (y[i] <= lo[i] + tol) slots[i] = Slot::Lower;
      else if (y[i] >= hi[i] - tol) slots[i] = Slot::Upper;
      else slots[i] = Slot::Free;
    }
  }

  int iterations = 0;
  VectorXd lo, hi;
  resolve_bounds(r.lower, r.upper, r.links, y, lo, hi);
  for (int outer = 0; outer <= std::max(0, opts.max_friction_iterations); ++outer) {
    PivotResult pr;
    try {
      pr = pivot_solve(r.A, r.b, lo, hi, slots);
    } catch (const SolverError& e) {
      throw SolverError(e.kind(), e.what(), e.index() >= 0 ? r.original(e.index()) : -1);
    }
    iterations += pr.iterations;
    y = std::move(pr.y);
    if (r.links.empty()) break;
    VectorXd lo_next, hi_next;
    resolve_bounds(r.lower, r.upper, r.links, y, lo_next, hi_next);
    double change = 0.0;
    for (const auto& link : r.links) {
      change = std::max(change, std::abs(hi_next[link.tangent] - hi[link.tangent]) /
                                    (1.0 + std::abs(hi_next[link.tangent])));
    }
    lo = std::move(lo_next);
    hi = std::move(hi_next);
    if (change <= opts.friction_tolerance) break;
  }
  return finish(problem, r.expand(y), iterations);
}

}  // namespace psf
