#include "lcs/random.hpp"

#include <cmath>
#include <numbers>

namespace lcs {

double eigenvalue_cutoff(const SurfaceGrid& grid, int order) {
  const double k = order;
  if (grid.kind() == SurfaceKind::Torus) return 4.0 * std::numbers::pi * std::numbers::pi * k * k * (1.0 + 1e-12);
  return 4.0 * std::numbers::pi * k * (k + 1.0) * (1.0 + 1e-12);
}

Field random_field(const GridPtr& grid, Rng& rng, double amplitude, double max_eigenvalue) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto mu = grid->coefficient_eigenvalues();
  std::vector<double> c(grid->num_coefficients(), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k)
    if (mu[k] > 0.0 && mu[k] <= max_eigenvalue) c[k] = normal(rng) / std::sqrt(1.0 + mu[k]);
  Field f(grid, grid->synthesis(c));
  grid->remove_mean(f.values());
  const double s = f.sup_norm();
  if (s > 0.0) f *= amplitude / s;
  return f;
}

}  // namespace lcs
