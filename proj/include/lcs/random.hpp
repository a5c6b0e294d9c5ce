#pragma once

#include <cstdint>
#include <random>

#include "lcs/surface.hpp"

namespace lcs {

using Rng = std::mt19937_64;

/// Random mean-zero band-limited field: independent normal coefficients on
/// all modes with 0 < eigenvalue <= max_eigenvalue, rescaled so that the sup
/// norm equals `amplitude`.
Field random_field(const GridPtr& grid, Rng& rng, double amplitude, double max_eigenvalue);

/// Eigenvalue cut-off that keeps modes up to wavenumber (torus) or degree
/// (sphere) `order`.
double eigenvalue_cutoff(const SurfaceGrid& grid, int order);

}  // namespace lcs
