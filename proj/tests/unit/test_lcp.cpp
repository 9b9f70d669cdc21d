#include <doctest.h>

#include <random>

#include "lcp_oracle.hpp"
#include "psf/lcp.hpp"

using psf::kInf;
using psf::MLCPProblem;

namespace {

MLCPProblem scalar(double h, double rhs, double lo, double hi) {
  MLCPProblem p;
  p.H = Eigen::MatrixXd::Constant(1, 1, h);
  p.rhs = Eigen::VectorXd::Constant(1, rhs);
  p.lower = Eigen::VectorXd::Constant(1, lo);
  p.upper = Eigen::VectorXd::Constant(1, hi);
  return p;
}

// Normal row unconstrained value 10, tangential 7, mu 0.5.
MLCPProblem friction_pair() {
  MLCPProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.rhs = Eigen::Vector2d(10.0, 7.0);
  p.lower = Eigen::Vector2d(0.0, -kInf);
  p.upper = Eigen::Vector2d(kInf, kInf);
  p.friction_links.push_back({1, 0, 0.5});
  return p;
}

}  // namespace

TEST_CASE("unconstrained scalar is a linear solve") {
  const auto p = scalar(2.0, 4.0, -kInf, kInf);
  for (const auto& s : {psf::solve_pgs(p), psf::solve_direct(p)}) {
    CHECK(s.y[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.w_lower[0] == doctest::Approx(0.0));
    CHECK(s.w_upper[0] == doctest::Approx(0.0));
    CHECK(s.residual <= 1e-12);
  }
}

TEST_CASE("upper bound clamps with positive upper slack") {
  const auto p = scalar(1.0, 1.0, -kInf, 0.5);
  for (const auto& s : {psf::solve_pgs(p), psf::solve_direct(p)}) {
    CHECK(s.y[0] == doctest::Approx(0.5));
    CHECK(s.w_upper[0] == doctest::Approx(0.5));
    CHECK(s.w_lower[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("friction pair clamps tangential multiplier at mu * normal") {
  const auto p = friction_pair();
  const auto oracle = psf::testing::enumerate_active_sets(p);
  REQUIRE(oracle);
  CHECK(oracle->feasible_patterns == 1);
  CHECK(oracle->y[0] == doctest::Approx(10.0));
  CHECK(oracle->y[1] == doctest::Approx(5.0));

  const auto pgs = psf::solve_pgs(p);
  const auto direct = psf::solve_direct(p);
  for (const auto& s : {pgs, direct}) {
    CHECK(s.y[0] == doctest::Approx(10.0));
    CHECK(s.y[1] == doctest::Approx(5.0));
    CHECK(s.w_upper[1] == doctest::Approx(2.0));
    CHECK(psf::complementarity_residual(p, s) <= 1e-10);
  }
}

TEST_CASE("direct solver matches enumeration on a 3x3 with one active lower bound") {
  MLCPProblem p;
  p.H.resize(3, 3);
  p.H << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  p.rhs = Eigen::Vector3d(1.0, -2.0, 1.0);
  p.lower = Eigen::Vector3d(-kInf, 0.0, -1.0);
  p.upper = Eigen::Vector3d(kInf, kInf, 1.0);
  const auto oracle = psf::testing::enumerate_active_sets(p);
  REQUIRE(oracle);
  const auto s = psf::solve_direct(p);
  CHECK((s.y - oracle->y).cwiseAbs().maxCoeff() <= 1e-12);
  const auto act = psf::testing::classify(p, s.y);
  CHECK(act == oracle->pattern);
  CHECK(act[1] == psf::testing::Activity::Lower);
  CHECK(act[2] == psf::testing::Activity::Free);
}

TEST_CASE("all-unbounded problem reduces to H^-1 rhs") {
  MLCPProblem p;
  p.H.resize(3, 3);
  p.H << 3, -1, 0.5, 0.2, 2, -0.3, 0.1, 0.4, 5;
  p.rhs = Eigen::Vector3d(1.0, 2.0, -3.0);
  p.lower = Eigen::Vector3d::Constant(-kInf);
  p.upper = Eigen::Vector3d::Constant(kInf);
  const Eigen::VectorXd expected = p.H.partialPivLu().solve(p.rhs);
  CHECK((psf::solve_direct(p).y - expected).norm() <= 1e-12);
}

TEST_CASE("complementarity residual") {
  SUBCASE("exact unconstrained solution") {
    const auto p = scalar(2.0, 4.0, -kInf, kInf);
    CHECK(psf::complementarity_residual(p, psf::solve_direct(p)) == 0.0);
  }
  SUBCASE("perturbed equality row") {
    MLCPProblem p;
    p.H.resize(2, 2);
    p.H << 3, 1, 1, 2;
    p.rhs = Eigen::Vector2d(1.0, 1.0);
    p.lower = Eigen::Vector2d::Constant(-kInf);
    p.upper = Eigen::Vector2d::Constant(kInf);
    auto s = psf::solve_direct(p);
    const double delta = 1e-3;
    s.y[0] += delta;
    CHECK(psf::complementarity_residual(p, s) >= delta * 2.0);
  }
  SUBCASE("dimension mismatch") {
    const auto p = scalar(2.0, 4.0, -kInf, kInf);
    psf::MLCPSolution s;
    s.y = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(psf::complementarity_residual(p, s), psf::SolverError);
  }
}

TEST_CASE("error reporting") {
  SUBCASE("zero diagonal names the row") {
    MLCPProblem p = scalar(1.0, 1.0, 0.0, kInf);
    p.H = Eigen::Matrix2d{{1.0, 0.0}, {0.0, 0.0}};
    p.rhs = Eigen::Vector2d(1.0, 1.0);
    p.lower = Eigen::Vector2d(0.0, 0.0);
    p.upper = Eigen::Vector2d(kInf, kInf);
    try {
      psf::solve_pgs(p);
      FAIL("expected ZeroDiagonal");
    } catch (const psf::SolverError& e) {
      CHECK(e.kind() == psf::SolverError::Kind::ZeroDiagonal);
      CHECK(e.index() == 1);
    }
  }
  SUBCASE("non-finite input") {
    auto p = scalar(1.0, std::nan(""), -kInf, kInf);
    CHECK_THROWS_AS(psf::solve_pgs(p), psf::SolverError);
  }
  SUBCASE("cap exceeded") {
    MLCPProblem p;
    p.H = Eigen::MatrixXd::Identity(65, 65);
    p.rhs = Eigen::VectorXd::Ones(65);
    p.lower = Eigen::VectorXd::Zero(65);
    p.upper = Eigen::VectorXd::Constant(65, kInf);
    try {
      psf::solve_direct(p);
      FAIL("expected CapExceeded");
    } catch (const psf::SolverError& e) {
      CHECK(e.kind() == psf::SolverError::Kind::CapExceeded);
    }
  }
  SUBCASE("singular principal submatrix") {
    MLCPProblem p;
    p.H = Eigen::Matrix2d{{1.0, 1.0}, {1.0, 1.0}};
    p.rhs = Eigen::Vector2d(1.0, 2.0);
    p.lower = Eigen::Vector2d::Constant(-kInf);
    p.upper = Eigen::Vector2d::Constant(kInf);
    try {
      psf::solve_direct(p);
      FAIL("expected PivotFailure");
    } catch (const psf::SolverError& e) {
      CHECK(e.kind() == psf::SolverError::Kind::PivotFailure);
    }
  }
}

TEST_CASE("property: direct solver agrees with enumeration and PGS on random problems") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Eigen::Index> size(1, 6);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = psf::testing::random_mlcp(rng, size(rng));
    const auto oracle = psf::testing::enumerate_active_sets(p);
    REQUIRE(oracle);
    const auto direct = psf::solve_direct(p);
    const auto pgs = psf::solve_pgs(p);
    CHECK((direct.y - oracle->y).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(direct.residual <= 1e-10);
    CHECK(pgs.residual <= 1e-8);
    // Bounds hold at the returned point.
    CHECK(((direct.y - p.lower).array() >= -1e-10).all());
    CHECK(((p.upper - direct.y).array() >= -1e-10).all());
  }
}

TEST_CASE("property: PGS residual is non-increasing on SPD problems with fixed bounds") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Eigen::Index> size(2, 8);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = psf::testing::random_mlcp(rng, size(rng));
    const Eigen::Index n = p.size();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Random(n, n);
    p.H = R * R.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
    psf::PgsOptions opts;
    opts.record_history = true;
    opts.tolerance = 1e-13;
    const auto s = psf::solve_pgs(p, opts);
    for (std::size_t k = 1; k < s.residual_history.size(); ++k) {
      CHECK(s.residual_history[k] <= s.residual_history[k - 1] * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("property: scaling an unbounded problem leaves y unchanged") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = psf::testing::random_mlcp(rng, 5);
    p.lower.setConstant(-kInf);
    p.upper.setConstant(kInf);
    auto q = p;
    q.H *= 37.5;
    q.rhs *= 37.5;
    const auto a = psf::solve_direct(p);
    const auto b = psf::solve_direct(q);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + a.y.cwiseAbs().maxCoeff()));
    const auto c = psf::solve_pgs(q);
    CHECK((a.y - c.y).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + a.y.cwiseAbs().maxCoeff()));
  }
}
