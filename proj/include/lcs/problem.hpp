#pragma once

// Problem data for the purely mutual (off-diagonal coupling) singular
// Liouville system in mean-field form:
//
//   -Lap u1 = rho2 (h2 e^{u2} / int h2 e^{u2} - 1) - 4 pi sum_j alpha_j (delta_{p_j} - 1)
//   -Lap u2 = rho1 (h1 e^{u1} / int h1 e^{u1} - 1) - 4 pi sum_j alpha_j (delta_{p_j} - 1)
//
// Subtracting 4 pi sum_j alpha_j G_{p_j} from both unknowns moves the Dirac
// sources into the weights: h_i -> h_i * hat_h with
// hat_h = exp(-4 pi sum_j alpha_j G_{p_j}). Both unknowns then solve a
// regular system with the desingularised weights tilde_h_i.
//
// In the self-dual Chern-Simons reduction the coupling parameter equals
// 2 / kappa; only the mean-field masses rho_i appear here.

#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lcs/surface.hpp"

namespace lcs {

struct Vortex {
  SurfacePoint p;
  double alpha = 0.0;
};

struct RhoPair {
  double rho1 = 0.0;
  double rho2 = 0.0;
  friend bool operator==(const RhoPair&, const RhoPair&) = default;
};

/// Mean-zero Green function with -Lap G_p = delta_p - 1 in the spectral
/// discretisation, where delta_p is the band-limited delta at the node.
Field green_function(const GridPtr& grid, std::size_t node);
/// Snaps p to the nearest node first.
Field green_function(const GridPtr& grid, SurfacePoint p);

/// log hat_h = -4 pi sum_j alpha_j G_{p_j}. Vortices must already sit on nodes.
Field log_singular_weight(const GridPtr& grid, std::span<const Vortex> vortices);

class ProblemData {
 public:
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SurfaceGrid& grid() const noexcept { return *grid_; }
  RhoPair rho() const noexcept { return rho_; }
  const Field& h1() const noexcept { return h1_; }
  const Field& h2() const noexcept { return h2_; }
  const std::vector<Vortex>& vortices() const noexcept { return vortices_; }
  std::vector<double> alphas() const;

  const Field& hat_h() const noexcept { return hat_h_; }
  const Field& log_hat_h() const noexcept { return log_hat_h_; }
  const Field& tilde_h1() const noexcept { return tilde_h1_; }
  const Field& tilde_h2() const noexcept { return tilde_h2_; }
  /// log tilde_h_i; finite everywhere on the grid.
  const Field& log_tilde_h1() const noexcept { return log_tilde_h1_; }
  const Field& log_tilde_h2() const noexcept { return log_tilde_h2_; }

  /// Notes produced while building (vortex snapping, weight perturbations).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Same weights and vortices, new masses.
  ProblemData with_rho(RhoPair rho) const;
  /// Exchanges (rho1, h1) with (rho2, h2).
  ProblemData swapped() const;
  /// Multiplies both h_i by exp(perturbation); recorded in warnings().
  ProblemData with_perturbed_weights(const Field& log_factor, const std::string& note) const;

  friend ProblemData desingularize(const GridPtr&, RhoPair, const Field&, const Field&, std::vector<Vortex>);

 private:
  ProblemData() = default;
  void derive();

  GridPtr grid_;
  RhoPair rho_;
  Field h1_, h2_;
  std::vector<Vortex> vortices_;
  Field log_hat_h_, hat_h_;
  Field log_tilde_h1_, log_tilde_h2_, tilde_h1_, tilde_h2_;
  std::vector<std::string> warnings_;
};

/// Builds problem data. Throws ConfigError for non-positive rho or h, negative
/// alpha, or vortices off the surface. Vortices are snapped to nodes.
ProblemData desingularize(const GridPtr& grid, RhoPair rho, const Field& h1, const Field& h2,
                          std::vector<Vortex> vortices);

// --- critical parameter sets ---------------------------------------------

/// All n > 0 with 8 pi n <= bound and n = m + sum_{j in J} (1 + alpha_j),
/// m >= 0 integer, J a subset of the vortices. Sorted and de-duplicated.
std::vector<double> enumerate_sigma(std::span<const double> alphas, double bound);

inline constexpr double kDefaultLambdaTolerance = 1e-6 * 8.0 * std::numbers::pi;
inline constexpr double kContinuationMargin = 0.05 * 8.0 * std::numbers::pi;

struct LambdaMembership {
  enum class Status { InLambda, Region, Unknown };
  Status status = Status::Unknown;
  int k = -1;           // region index when status == Region
  double n = 0.0;       // the n_k hit when status == InLambda
  double margin = 0.0;  // min_k |rho1 rho2 / (rho1 + rho2) - 4 pi n_k|
};

/// Classifies rho against Lambda = { rho1 rho2 / (rho1 + rho2) = 4 pi n_k }
/// and, off Lambda, against the regimes rho_i > 8 k pi,
/// (rho1 + rho2) / 2 < 8 (k + 1) pi. Boundary cases report Unknown.
LambdaMembership lambda_membership(RhoPair rho, std::span<const double> alphas,
                                   double tol = kDefaultLambdaTolerance);

std::string describe(const LambdaMembership& m);

}  // namespace lcs
