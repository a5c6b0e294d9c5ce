#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "lcs/bubbles.hpp"
#include "lcs/error.hpp"
#include "lcs/expression.hpp"
#include "lcs/field_io.hpp"
#include "lcs/random.hpp"
#include "lcs/solver.hpp"

using namespace lcs;
using std::numbers::pi;

namespace {

Field expr(const GridPtr& g, const char* e) { return field_from_expression(g, Expression::parse(e)); }

Field rnd(const GridPtr& g, Rng& rng, double amp, int order = 4) {
  return random_field(g, rng, amp, eigenvalue_cutoff(*g, order));
}

ProblemData flat(const GridPtr& g, RhoPair rho) { return desingularize(g, rho, Field(g, 1.0), Field(g, 1.0), {}); }

ProblemData cosine(const GridPtr& g, RhoPair rho, std::vector<Vortex> v = {}) {
  const Field h = expr(g, "1 + 0.5*cos(2*pi*x)");
  return desingularize(g, rho, h, h, std::move(v));
}


}  // namespace

TEST_CASE("residual vanishes at the constant pair") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto r = residual(flat(g, {4 * pi, 4 * pi}), Field(g), Field(g));
  CHECK(r.r1 == 0.0);
  CHECK(r.r2 == 0.0);
}

TEST_CASE("residual grows linearly with a perturbation of a solution") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = cosine(g, {6 * pi, 6 * pi});
  const auto base = newton_el(pd, Field(g), Field(g));
  REQUIRE(base.residual() < 1e-10);
  Rng rng(7);
  const Field v1 = rnd(g, rng, 1.0), v2 = rnd(g, rng, 1.0);
  const double a = residual(pd, base.u1 + 0.01 * v1, base.u2 + 0.01 * v2).max();
  const double b = residual(pd, base.u1 + 0.005 * v1, base.u2 + 0.005 * v2).max();
  CHECK(a / b == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("descent from a random start reaches the constant solution") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = flat(g, {4 * pi, 4 * pi});
  Rng rng(1);
  const auto r = minimize_outer(pd, rnd(g, rng, 0.1));
  CHECK(r.success);
  CHECK(r.residual() < 1e-7);
  CHECK(r.F.sup_norm() < 1e-7);
  CHECK(r.G.sup_norm() < 1e-7);
  CHECK(r.method == SolveMethod::Minimize);
  // J~ decreases over accepted iterations, up to round-off on flat steps.
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i].value <= r.trace[i - 1].value + 1e-12 * (std::abs(r.trace[i - 1].value) + 1.0));
}

TEST_CASE("symmetric data reduce to the scalar mean-field equation") {
  const int n = 32;
  auto g = SurfaceGrid::build(SurfaceKind::Torus, n, n);
  const auto pd = cosine(g, {6 * pi, 6 * pi});
  const auto r = minimize_outer(pd, Field(g));
  REQUIRE(r.success);

  const Eigen::MatrixXd L = oracle::torus_neg_laplacian(n, n);
  Eigen::VectorXd logh(n * n);
  for (int k = 0; k < n * n; ++k) logh[k] = pd.log_tilde_h1()[k];
  const Eigen::VectorXd u = oracle::scalar_mean_field(L, logh, 6 * pi);
  double err1 = 0.0, err2 = 0.0;
  for (int k = 0; k < n * n; ++k) {
    err1 = std::max(err1, std::abs(r.u1[k] - u[k]));
    err2 = std::max(err2, std::abs(r.u2[k] - u[k]));
  }
  CHECK(err1 < 1e-6);
  CHECK(err2 < 1e-6);
  CHECK(u.lpNorm<Eigen::Infinity>() > 0.1);
}

TEST_CASE("descent above the coercive range is unbounded") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 64, 64);
  const auto pd = flat(g, {15 * pi, 15 * pi});
  const Field F0 = bubble_field(g, {3.0, equal_barycenter(*g, {{0.5, 0.5}})});
  CHECK_THROWS_AS(minimize_outer(pd, F0), ConfigError);
  OuterOptions o;
  o.check_regime = false;
  CHECK_THROWS_AS(minimize_outer(pd, F0, o), UnboundedDescentError);
}

TEST_CASE("newton stays at an exact root") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto r = newton_el(flat(g, {4 * pi, 4 * pi}), Field(g), Field(g));
  CHECK(r.residual() == 0.0);
  CHECK(r.trace.size() == 1);
  CHECK(r.u1.sup_norm() == 0.0);
}

TEST_CASE("newton polishes a descent result quadratically") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  // In the sup norm, -Lap of an O(|u|) field carries rounding of about
  // eps |u| times the top eigenvalues, near 1e-12 for |u| ~ 0.3 here. The
  // 1e-12 target is checked on data with small solutions, 1e-10 otherwise.
  struct Case {
    ProblemData pd;
    double tol;
  };
  const Case cases[] = {
      {flat(g, {4 * pi, 4 * pi}), 1e-12},
      {desingularize(g, {6 * pi, 6 * pi}, expr(g, "1 + 0.05*cos(2*pi*x)"), expr(g, "1 + 0.05*cos(2*pi*x)"), {}),
       1e-12},
      {cosine(g, {6 * pi, 6 * pi}), 1e-10},
      {desingularize(g, {5 * pi, 7 * pi}, expr(g, "1 + 0.5*cos(2*pi*x)"), expr(g, "exp(0.3*sin(2*pi*y))"), {}),
       1e-10},
  };
  for (const auto& c : cases) {
    Rng rng(2);
    const auto d = minimize_outer(c.pd, rnd(g, rng, 0.1));
    REQUIRE(d.success);
    NewtonOptions o;
    o.tolerance = c.tol;
    const auto r = newton_el(c.pd, d.u1, d.u2, o);
    CHECK(r.success);
    CHECK(r.residual() < c.tol);
    CHECK(r.trace.size() - 1 <= 3);
    // The variational value and the full functional agree at a critical point.
    CHECK(std::abs(r.J_value - r.J_tilde_value) < 1e-9);
    CHECK((r.u1 + r.u2 - 2.0 * r.F).sup_norm() == 0.0);
    CHECK((r.u2 - r.u1 - 2.0 * r.G).sup_norm() < 1e-15 * (1.0 + r.u1.sup_norm()));
  }
}

TEST_CASE("newton preserves symmetry of the iteration") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = cosine(g, {6 * pi, 6 * pi});
  Rng rng(3);
  const Field u = rnd(g, rng, 0.2);
  const auto r = newton_el(pd, u, u);
  CHECK(r.success);
  CHECK((r.u1 - r.u2).sup_norm() < 1e-8);
}

TEST_CASE("swapping the components swaps the solution") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = desingularize(g, {5 * pi, 7 * pi}, expr(g, "1 + 0.5*cos(2*pi*x)"),
                                expr(g, "exp(0.3*sin(2*pi*y))"), {});
  Rng rng(4);
  const Field a = rnd(g, rng, 0.1), b = rnd(g, rng, 0.1);
  const auto r = newton_el(pd, a, b);
  const auto s = newton_el(pd.swapped(), b, a);
  CHECK((r.u1 - s.u2).sup_norm() < 1e-8);
  CHECK((r.u2 - s.u1).sup_norm() < 1e-8);
  const auto m = minimize_outer(pd, Field(g));
  const auto ms = minimize_outer(pd.swapped(), Field(g));
  CHECK((m.u1 - ms.u2).sup_norm() < 1e-6);
  CHECK(std::abs(m.J_tilde_value - ms.J_tilde_value) < 1e-9);
}

TEST_CASE("continuation along a constant branch") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = flat(g, {4 * pi, 4 * pi});
  std::vector<RhoPair> path;
  for (double r = 4.0; r <= 6.0 + 1e-9; r += 0.25) path.push_back({r * pi, r * pi});
  const auto branch = continuation(pd, path, Field(g), Field(g));
  REQUIRE(branch.size() == path.size());
  for (const auto& r : branch) {
    CHECK(r.u1.sup_norm() == 0.0);
    CHECK(r.residual() == 0.0);
    CHECK(r.method == SolveMethod::Continuation);
  }
}

TEST_CASE("continuation across the first critical curve") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 64, 64);
  const auto pd = cosine(g, {6 * pi, 6 * pi});
  const auto path = admissible_segment({6 * pi, 6 * pi}, {9 * pi, 9 * pi}, pd.alphas());
  REQUIRE(path.size() >= 3);
  for (const auto& p : path) CHECK(lambda_membership(p, pd.alphas()).margin >= kContinuationMargin * (1 - 1e-9));
  const auto base = minimize_outer(pd, Field(g));
  const auto branch = continuation(pd, path, base.u1, base.u2);
  REQUIRE(branch.size() == path.size());
  for (const auto& r : branch) CHECK(r.residual() < 1e-8);
  CHECK(branch.back().rho.rho1 == doctest::Approx(9 * pi));
  // Past 8 pi the branch no longer has constant density.
  CHECK(branch.back().u1.sup_norm() > 1e-3);
}

TEST_CASE("continuation paths are checked against the critical set") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = flat(g, {7 * pi, 7 * pi});
  CHECK_THROWS_AS(continuation(pd, {{7.5 * pi, 7.5 * pi}, {8 * pi, 8 * pi}}, Field(g), Field(g)), ConfigError);
  // Inside the margin band.
  CHECK_THROWS_AS(validate_path({{7.9 * pi, 7.9 * pi}}, {}), ConfigError);
  // Too long a step that crosses nothing.
  CHECK_THROWS_AS(validate_path({{4 * pi, 4 * pi}, {6 * pi, 6 * pi}}, {}), ConfigError);
  CHECK_NOTHROW(validate_path({{4 * pi, 4 * pi}, {4.25 * pi, 4.25 * pi}}, {}));
  CHECK_THROWS_AS(validate_path({}, {}), ConfigError);
}

TEST_CASE("k = 1 solutions") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 64, 64);

  SUBCASE("constant weights are solved by constants") {
    const auto r = find_k1_solution(flat(g, {9 * pi, 9 * pi}));
    CHECK(r.success);
    CHECK(r.residual() == 0.0);
  }
  SUBCASE("wrong regime") {
    CHECK_THROWS_AS(find_k1_solution(flat(g, {4 * pi, 4 * pi})), ConfigError);
  }
  SUBCASE("no vortex") {
    const auto pd = cosine(g, {9 * pi, 9 * pi});
    const auto r = find_k1_solution(pd);
    CHECK(r.success);
    CHECK(r.residual() < 1e-7);
    CHECK(residual(pd, r.u1, r.u2).max() < 1e-7);
    CHECK(r.u1.sup_norm() > 1e-3);
  }
  SUBCASE("one vortex") {
    const auto pd = cosine(g, {9 * pi, 9 * pi}, {{{0.25, 0.5}, 1.0}});
    const auto r = find_k1_solution(pd);
    const ProblemData& solved = r.perturbed_problem ? *r.perturbed_problem : pd;
    CHECK(r.success);
    CHECK(residual(solved, r.u1, r.u2).max() < 1e-7);
    CHECK(r.u1.sup_norm() > 1e-3);
    // The weight vanishes to second order at the vortex.
    const auto node = g->nearest_node({0.25, 0.5});
    CHECK(solved.tilde_h1()[node] == solved.tilde_h1().min());
  }
}

TEST_CASE("dumped solutions verify after a round trip") {
  auto g = SurfaceGrid::build(SurfaceKind::Torus, 32, 32);
  const auto pd = cosine(g, {6 * pi, 6 * pi});
  const auto r = newton_el(pd, Field(g), Field(g));
  REQUIRE(r.success);
  const auto dir = std::filesystem::temp_directory_path() / "lcs_test_solver";
  std::filesystem::create_directories(dir);
  write_field_binary(dir / "u1.bin", r.u1);
  write_field_binary(dir / "u2.bin", r.u2);
  write_field_csv(dir / "u1.csv", r.u1);
  write_field_csv(dir / "u2.csv", r.u2);
  const Field b1 = read_field(dir / "u1.bin", g), b2 = read_field(dir / "u2.bin", g);
  CHECK(residual(pd, b1, b2).max() <= r.tolerance);
  CHECK((b1 - r.u1).sup_norm() == 0.0);
  std::ifstream csv(dir / "u1.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,y,value");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == g->size());
  std::filesystem::remove_all(dir);
}
