#pragma once

// Energies of the mutual Liouville system and the constrained reduction.
//
// With D(u) = int |grad u|^2 and L_i(u) = log int tilde_h_i e^u:
//
//   J(u1, u2)   = int grad u1 . grad u2 - rho2 L_2(u2) - rho1 L_1(u1)
//   I(F, G)     = D(G) + rho2 L_2(F + G) + rho1 L_1(F - G)
//   J(F, G)     = D(F) - I(F, G)                 (u1 = F - G, u2 = F + G)
//   J~(F)       = D(F) - min_G I(F, G)
//
// Gradients are L^2 gradients for the quadrature inner product, projected onto
// the resolved mean-zero space.

#include <optional>
#include <vector>

#include "lcs/problem.hpp"

namespace lcs {

/// log int exp(log_weight + u) evaluated with max subtraction.
double log_integral(const Field& log_weight, const Field& u);

struct LogIntegral {
  double value = 0.0;
  /// exp(log_weight + u - value): a density with integral 1.
  Field density;
};
LogIntegral log_integral_density(const Field& log_weight, const Field& u);

double J_full(const ProblemData& pd, const Field& u1, const Field& u2);
double J_fg(const ProblemData& pd, const Field& F, const Field& G);
double I_rho(const ProblemData& pd, const Field& F, const Field& G);
/// 2(-Lap G) + P(rho2 nu2 - rho1 nu1).
Field I_gradient(const ProblemData& pd, const Field& F, const Field& G);

/// G-Hessian of I at (F, G):
///   D_GG I [phi, phi] = 2 D(phi) + rho2 Var_{nu2}(phi) + rho1 Var_{nu1}(phi).
class InnerHessian {
 public:
  InnerHessian(const ProblemData& pd, const Field& F, const Field& G);
  Field apply(const Field& phi) const;
  std::vector<double> apply(const std::vector<double>& phi) const;
  double quadratic_form(const Field& phi) const;

 private:
  const ProblemData* pd_;
  Field nu1_, nu2_;
};

struct InnerOptions {
  /// Target H^{-1} norm of the G-gradient.
  double tolerance = 1e-10;
  int max_newton = 500;
  int max_cg = 300;
};

struct InnerSolveResult {
  Field G_tilde;
  double inner_value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int cg_iterations = 0;
  /// Set when the iteration stopped at the round-off floor above `tolerance`.
  bool at_roundoff_floor = false;
};

/// Unique minimiser of G -> I(F, G). Throws ConvergenceError when the Newton
/// iteration cap is reached or the iteration stalls above the round-off floor.
InnerSolveResult inner_minimize(const ProblemData& pd, const Field& F, const Field* init = nullptr,
                                const InnerOptions& opts = {});

/// 2(-Lap F) - P(rho2 nu2 + rho1 nu1) with nu_i evaluated at (F, G).
Field envelope_gradient(const ProblemData& pd, const Field& F, const Field& G_tilde);

struct ConstrainedValue {
  double value = 0.0;
  Field gradient;
  InnerSolveResult inner;
};

ConstrainedValue J_tilde(const ProblemData& pd, const Field& F, const Field* warm = nullptr,
                         const InnerOptions& opts = {});

/// log int hat_h e^{F+G} + log int hat_h e^{F-G} - 2 log int hat_h e^F, which
/// is non-negative by the Cauchy-Schwarz (Holder) inequality.
double holder_chain_check(const ProblemData& pd, const Field& F, const Field& G);

/// Defects of the two-sided bounds on J~ together with the constants that
/// bound them:
///
///   lower: D(F) - (rho1 + rho2) log int hat_h e^F - J~(F) <= lower_constant
///   upper: J~(F) - D(F) + 2 min(rho) log int hat_h e^F   <= upper_constant
///
/// lower_constant = rho1 max log h1 + rho2 max log h2;
/// upper_constant = -rmin (min log h1 + min log h2) - (rmax - rmin) int log h_max,
/// where h_max belongs to the larger mass.
struct EstimateDefects {
  double lower_defect = 0.0;
  double lower_constant = 0.0;
  double upper_defect = 0.0;
  double upper_constant = 0.0;
};
EstimateDefects estimate_defects(const ProblemData& pd, const Field& F, double J_tilde_value);

}  // namespace lcs
