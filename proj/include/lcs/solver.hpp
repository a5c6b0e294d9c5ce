#pragma once

// Solvers for the desingularised mean-field system
//
//   -Lap u1 = rho2 (nu2 - 1),   -Lap u2 = rho1 (nu1 - 1),
//   nu_i = tilde_h_i e^{u_i} / int tilde_h_i e^{u_i}.
//
// Two routes: descent on the constrained functional J~ (subcritical masses)
// and damped Newton-Krylov on the system itself. Continuation and bubble
// seeding reach solutions in the k = 1 regime.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcs/functionals.hpp"

namespace lcs {

enum class SolveMethod { Minimize, NewtonEL, Continuation };
std::string to_string(SolveMethod m);

struct TraceEntry {
  int iteration = 0;
  RhoPair rho;
  double value = 0.0;     // J~ for descent, J for Newton
  double measure = 0.0;   // gradient dual norm (descent) or residual sup norm (Newton)
  double step = 0.0;
  std::string note;
};

struct SolveReport {
  Field F, G, u1, u2;
  double residual_1 = 0.0;
  double residual_2 = 0.0;
  double J_tilde_value = 0.0;
  double J_value = 0.0;
  SolveMethod method = SolveMethod::Minimize;
  RhoPair rho;
  bool success = false;
  /// Residual bound that `success` was judged against.
  double tolerance = 0.0;
  std::vector<TraceEntry> trace;
  std::vector<std::string> notes;
  /// Set when the solver had to perturb the weights; the solution belongs to
  /// this problem rather than the one passed in.
  std::shared_ptr<const ProblemData> perturbed_problem;

  double residual() const { return std::max(residual_1, residual_2); }
};

struct Residuals {
  double r1 = 0.0;
  double r2 = 0.0;
  double max() const { return std::max(r1, r2); }
};

/// Sup norms of -Lap u1 - rho2 P(nu2) and -Lap u2 - rho1 P(nu1).
Residuals residual(const ProblemData& pd, const Field& u1, const Field& u2);
std::pair<Field, Field> residual_fields(const ProblemData& pd, const Field& u1, const Field& u2);

/// Fills u1, u2, residuals and energies of a report from (F, G).
void finalize_report(const ProblemData& pd, SolveReport& report, const InnerOptions& inner = {});

struct OuterOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 5000;
  double accept_residual = 1e-7;
  InnerOptions inner;
  /// Require the subcritical regime (Region 0) before descending.
  bool check_regime = true;
  /// Descent is declared unbounded when one node carries this fraction of the
  /// normalised mass hat_h e^F, or J~ falls below `energy_floor`.
  double collapse_fraction = 0.5;
  double energy_floor = -1e6;
};

/// Preconditioned Barzilai-Borwein descent with Armijo backtracking on J~.
SolveReport minimize_outer(const ProblemData& pd, const Field& F0, const OuterOptions& opts = {});

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  int max_krylov = 200;
  /// Jacobians with a GMRES condition estimate above this are singular.
  double singular_condition = 1e12;
};

/// Damped Newton-GMRES on the system with (-Lap + I)^{-1} right
/// preconditioning. Throws SingularJacobianError or ConvergenceError.
SolveReport newton_el(const ProblemData& pd, const Field& u1_init, const Field& u2_init,
                      const NewtonOptions& opts = {});

struct ContinuationOptions {
  NewtonOptions newton;
  double max_step = 0.5 * std::numbers::pi;
  double margin = kContinuationMargin;
  InnerOptions inner;
};

/// Checks a continuation path: every point keeps the margin from Lambda and
/// consecutive points are at most max_step apart, except for a single step
/// that carries the branch across one Lambda curve. Throws ConfigError.
void validate_path(const std::vector<RhoPair>& path, std::span<const double> alphas,
                   const ContinuationOptions& opts = {});

/// Tracks a branch along `path`, seeding each Newton solve with a secant
/// prediction from the previous solutions. The first solve starts from
/// (u1, u2). Throws BranchLostError carrying the last converged rho.
std::vector<SolveReport> continuation(const ProblemData& pd_start, const std::vector<RhoPair>& path,
                                      const Field& u1_init, const Field& u2_init,
                                      const ContinuationOptions& opts = {});

/// Straight path from `from` to `to` with steps of at most max_step, leaving
/// out points inside the Lambda margin.
std::vector<RhoPair> admissible_segment(RhoPair from, RhoPair to, std::span<const double> alphas,
                                        const ContinuationOptions& opts = {});

struct K1Options {
  ContinuationOptions continuation;
  OuterOptions outer;
  double accept_residual = 1e-7;
  /// Bubble scales tried as Newton seeds when continuation fails.
  std::vector<double> seed_lambdas{2.0, 3.0, 5.0};
  std::uint64_t perturbation_seed = 12345;
  double perturbation_amplitude = 1e-2;
};

/// The weight perturbation find_k1_solution applies after a singular
/// Jacobian: both weights times exp of a seeded random field with modes up to
/// order 3 and sup norm `amplitude`.
ProblemData perturb_weights(const ProblemData& pd, std::uint64_t seed, double amplitude);

/// Produces a solution in the k = 1 regime on the torus: trivial check,
/// continuation from the subcritical region, then bubble-seeded Newton.
/// Throws ConvergenceError when every route fails.
SolveReport find_k1_solution(const ProblemData& pd, const K1Options& opts = {});

}  // namespace lcs
