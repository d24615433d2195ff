#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <random>

#include "fairlds/sdp.hpp"
#include "oracles.hpp"

using namespace fairlds::sdp;

namespace {

LinearForm lf(std::initializer_list<std::pair<int, double>> terms, double constant = 0.0) {
  LinearForm f(constant);
  for (const auto& [v, c] : terms) f.add(v, c);
  return f;
}

// min y s.t. [[y, 1], [1, y]] >= 0
SdpInstance arch_instance() {
  SdpInstance ins;
  ins.num_vars = 1;
  ins.objective = lf({{0, 1.0}});
  Block b;
  b.dim = 2;
  b.set(0, 0, lf({{0, 1.0}}));
  b.set(0, 1, LinearForm(1.0));
  b.set(1, 1, lf({{0, 1.0}}));
  ins.blocks.push_back(b);
  return ins;
}

}  // namespace

TEST_CASE("analytic 2x2 instance solves to y* = 1") {
  SdpInstance ins = arch_instance();
  SdpSolution sol = solve(ins);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.duality_gap <= 1e-8);
}

TEST_CASE("decoupled diagonal instance reaches the LP optimum") {
  SdpInstance ins;
  ins.num_vars = 2;
  ins.objective = lf({{0, 1.0}, {1, 1.0}});
  Block b1, b2;
  b1.dim = 1;
  b1.set(0, 0, lf({{0, 1.0}}, -1.0));  // y1 - 1 >= 0
  b2.dim = 1;
  b2.set(0, 0, lf({{1, 1.0}}, -2.0));  // y2 - 2 >= 0
  ins.blocks.push_back(b1);
  ins.blocks.push_back(b2);
  SdpSolution sol = solve(ins);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.y[1] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("impossible block with pinned variable is flagged Infeasible") {
  SdpInstance ins;
  ins.num_vars = 1;
  ins.objective = lf({{0, 1.0}});
  Block b;
  b.dim = 1;
  b.set(0, 0, lf({{0, -1.0}}));  // -y1 >= 0
  ins.blocks.push_back(b);
  ins.equalities.push_back(lf({{0, 1.0}}, -1.0));  // y1 = 1
  SdpSolution sol = solve(ins);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("objective ray is flagged Unbounded") {
  SdpInstance ins = arch_instance();
  ins.objective = lf({{0, -1.0}});  // min -y, feasible y -> infinity
  SdpSolution sol = solve(ins);
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("diagonal instances match the LP enumeration oracle") {
  std::mt19937 eng(42);
  auto coin = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng() % 10000) / 10000.0);
  };
  for (int trial = 0; trial < 12; ++trial) {
    int nvars = 2 + static_cast<int>(eng() % 2);
    SdpInstance ins;
    ins.num_vars = nvars;
    std::vector<oracle::LinearConstraint> oineq, oeq;
    std::vector<double> c(nvars);
    for (int i = 0; i < nvars; ++i) {
      c[i] = coin(-2.0, 2.0);
      ins.objective.add(i, c[i]);
    }
    // random halfspaces plus a bounding box
    int extra = 2 + static_cast<int>(eng() % 3);
    for (int j = 0; j < extra; ++j) {
      LinearForm f;
      oracle::LinearConstraint oc;
      oc.a.assign(nvars, 0.0);
      for (int i = 0; i < nvars; ++i) {
        double a = coin(-1.0, 1.0);
        f.add(i, a);
        oc.a[i] = a;
      }
      f.constant = oc.b = coin(0.5, 3.0);
      Block b;
      b.dim = 1;
      b.set(0, 0, f);
      ins.blocks.push_back(b);
      oineq.push_back(oc);
    }
    for (int i = 0; i < nvars; ++i) {
      for (double sgn : {1.0, -1.0}) {
        LinearForm f;
        f.add(i, sgn);
        f.constant = 10.0;
        Block b;
        b.dim = 1;
        b.set(0, 0, f);
        ins.blocks.push_back(b);
        oracle::LinearConstraint oc;
        oc.a.assign(nvars, 0.0);
        oc.a[i] = sgn;
        oc.b = 10.0;
        oineq.push_back(oc);
      }
    }
    SdpSolution sol = solve(ins);
    REQUIRE(sol.status == SolveStatus::Optimal);
    auto expect = oracle::lp_enumerate(nvars, oineq, oeq, c);
    REQUIRE(expect.has_value());
    CHECK(sol.objective == doctest::Approx(*expect).epsilon(1e-6));
  }
}

TEST_CASE("weak duality holds at every iterate") {
  for (SdpInstance ins : {arch_instance()}) {
    SdpSolution sol = solve(ins);
    REQUIRE(sol.status == SolveStatus::Optimal);
    double scale = 1.0 + std::fabs(sol.objective);
    for (const auto& [pobj, dbound] : sol.iterate_log) CHECK(dbound <= pobj + 1e-10 * scale);
  }
}

TEST_CASE("solution is invariant under row and block permutation") {
  SdpInstance a;
  a.num_vars = 2;
  a.objective = lf({{0, 1.0}, {1, 2.0}});
  Block b1, b2;
  b1.dim = 2;
  b1.set(0, 0, lf({{0, 1.0}}));
  b1.set(0, 1, LinearForm(0.5));
  b1.set(1, 1, lf({{1, 1.0}}));
  b2.dim = 1;
  b2.set(0, 0, lf({{0, 1.0}, {1, 1.0}}, -0.5));
  a.blocks = {b1, b2};
  a.equalities.push_back(lf({{0, 1.0}, {1, -1.0}}, -0.25));
  a.equalities.push_back(lf({{0, 1.0}, {1, 1.0}}, -2.0));

  SdpInstance b = a;
  std::swap(b.blocks[0], b.blocks[1]);
  std::swap(b.equalities[0], b.equalities[1]);

  SdpSolution sa = solve(a), sb = solve(b);
  REQUIRE(sa.status == SolveStatus::Optimal);
  REQUIRE(sb.status == SolveStatus::Optimal);
  CHECK(sa.objective == doctest::Approx(sb.objective).epsilon(1e-6));
}

TEST_CASE("identical instance and config give bit-identical runs") {
  SdpInstance ins = arch_instance();
  SdpSolution s1 = solve(ins), s2 = solve(ins);
  CHECK(s1.iterations == s2.iterations);
  CHECK(s1.objective == s2.objective);  // exact
  CHECK(s1.y[0] == s2.y[0]);
}

TEST_CASE("certify recomputes eigenvalues and residuals from scratch") {
  SUBCASE("optimal point of the analytic instance") {
    SdpInstance ins = arch_instance();
    SdpSolution sol = solve(ins);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CertifyReport rep = certify(ins, sol.y);
    REQUIRE(rep.block_min_eig.size() == 1);
    CHECK(rep.block_min_eig[0] >= -1e-8);
    CHECK(rep.objective == doctest::Approx(sol.objective));
  }
  SUBCASE("hand-built infeasible point reports the matching eigenvalue") {
    SdpInstance ins = arch_instance();
    std::vector<double> y = {0.25};  // [[0.25, 1], [1, 0.25]] has eig 0.25 -+ 1
    CertifyReport rep = certify(ins, y);
    Eigen::Matrix2d S;
    S << 0.25, 1.0, 1.0, 0.25;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S, Eigen::EigenvaluesOnly);
    CHECK(rep.block_min_eig[0] == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-12));
    CHECK(rep.block_min_eig[0] < 0.0);
  }
  SUBCASE("zero-block instance degenerates to a least-squares report") {
    SdpInstance ins;
    ins.num_vars = 2;
    ins.objective = lf({{0, 1.0}});
    ins.equalities.push_back(lf({{0, 1.0}, {1, 1.0}}, -2.0));
    ins.equalities.push_back(lf({{0, 1.0}, {1, -1.0}}));
    SdpSolution sol = solve(ins);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.y[1] == doctest::Approx(1.0).epsilon(1e-9));
    CertifyReport rep = certify(ins, sol.y);
    CHECK(rep.block_min_eig.empty());
    CHECK(rep.equality_residual <= 1e-9);
  }
}
