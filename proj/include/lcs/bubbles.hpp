#pragma once

// Formal barycenters, bubble test fields and the asymptotic checks built on
// them.
//
//   phi_{lambda,sigma}(y) = log sum_i t_i (lambda / (1 + lambda^2 d(y, x_i)^2))^2 - log pi
//
// For sigma of order k, (1/2) D(phi) ~ 16 k pi log lambda and
// log int hat_h e^{phi - mean phi} ~ 2 log lambda as lambda grows.

#include <limits>
#include <optional>
#include <vector>

#include "lcs/functionals.hpp"

namespace lcs {

struct Atom {
  double t = 1.0;
  SurfacePoint x;
};

struct Barycenter {
  std::vector<Atom> atoms;
  int order = 1;
};

/// Validates weights (t_i >= 0, sum 1 within 1e-12, 1 <= |atoms| <= order) and
/// snaps atoms to nodes. Throws ConfigError.
Barycenter make_barycenter(const SurfaceGrid& grid, std::vector<Atom> atoms, int order);
/// Equal weights 1/|points|.
Barycenter equal_barycenter(const SurfaceGrid& grid, const std::vector<SurfacePoint>& points);

struct BubbleParams {
  double lambda = 1.0;
  Barycenter sigma;
};

/// Largest lambda whose bubble core the grid resolves: 0.2 / h, with h the
/// coarsest node spacing of the grid.
double lambda_max(const SurfaceGrid& grid);

/// phi_{lambda,sigma} before mean subtraction. Throws ResolutionError above
/// lambda_max and ConfigError for lambda < 1.
Field bubble_raw(const GridPtr& grid, const BubbleParams& params);
/// phi - mean(phi), projected onto the resolved mean-zero space.
Field bubble_field(const GridPtr& grid, const BubbleParams& params);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);
/// Slope over the upper half of the samples (x ascending), the asymptotic regime.
double fit_upper_half_slope(std::span<const double> x, std::span<const double> y);

struct AsymptoticsRow {
  double lambda = 0.0;
  double half_dirichlet = 0.0;
  double log_integral = 0.0;
  double J_tilde = std::numeric_limits<double>::quiet_NaN();
};

struct AsymptoticsReport {
  std::vector<AsymptoticsRow> rows;
  double s_dirichlet = 0.0;
  double s_logint = 0.0;
};

/// Requires every atom at least 10 node spacings from every vortex.
AsymptoticsReport energy_asymptotics(const ProblemData& pd, const Barycenter& sigma,
                                     const std::vector<double>& lambdas);

struct PhiMapResult {
  Field F;
  double J_tilde = 0.0;
  InnerSolveResult inner;
};

/// The test field Phi(sigma) and J~ on it.
PhiMapResult phi_map(const ProblemData& pd, const Barycenter& sigma, double lambda, const Field* warm = nullptr,
                     const InnerOptions& opts = {});

struct DescentReport {
  std::vector<AsymptoticsRow> rows;
  double slope = 0.0;
  /// 4 (8 k pi - min rho), the slope bound for masses above 8 k pi.
  double predicted = 0.0;
  /// Strict monotonicity over the upper half of the lambdas.
  bool decreasing = false;
  bool increasing = false;
};

DescentReport descent_rate(const ProblemData& pd, const Barycenter& sigma, const std::vector<double>& lambdas,
                           const InnerOptions& opts = {});

struct ConcentrationResult {
  bool found = false;
  std::vector<SurfacePoint> centers;
  std::vector<double> masses;
  double captured = 0.0;
};

/// Greedy covering by k balls of radius r of the normalised measure
/// hat_h e^F / int hat_h e^F. Found iff the captured mass is >= 1 - eps.
/// Requires r > 2 node spacings.
ConcentrationResult concentration_profile(const ProblemData& pd, const Field& F, int k, double r, double eps);

/// Mass that the normalised measure hat_h e^F assigns to B_r(x_i) per atom.
std::vector<double> atom_masses(const ProblemData& pd, const Field& F, const Barycenter& sigma, double r);

struct MTRow {
  double parameter = 0.0;
  double dirichlet = 0.0;
  double log_integral = 0.0;
  /// 2 log int hat_h e^F - D(F) / (8 pi)
  double deficit = 0.0;
  /// 2 log int hat_h e^F / D(F)
  double ratio = 0.0;
};

struct MTReport {
  std::vector<MTRow> rows;
  double max_deficit = 0.0;
  /// Slope of 2 log int hat_h e^F against D(F) over the upper half of the
  /// family: the limit of the ratio along a concentrating family.
  double asymptotic_ratio = 0.0;
};

struct FamilyMember {
  double parameter = 0.0;
  Field F;
};

MTReport mt_check(const Field& log_hat_h, const std::vector<FamilyMember>& family);
std::vector<FamilyMember> bubble_family(const GridPtr& grid, const Barycenter& sigma,
                                        const std::vector<double>& lambdas);

}  // namespace lcs
