#pragma once

#include <memory>
#include <span>
#include <vector>

namespace lcs::detail {

/// Real orthogonal spectral basis of a grid. Coefficients are stored as a flat
/// real vector; each slot carries the -Laplacian eigenvalue of its mode and a
/// Parseval weight so that integral(u^2) = sum_k weight_k c_k^2 for resolved u.
class SpectralBackend {
 public:
  virtual ~SpectralBackend() = default;

  virtual std::size_t num_coefficients() const = 0;
  virtual void analysis(std::span<const double> values, std::span<double> coeffs) const = 0;
  virtual void synthesis(std::span<const double> coeffs, std::span<double> values) const = 0;
  virtual bool full_rank() const = 0;

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::span<const double> parseval_weights() const { return parseval_; }
  /// Slot holding the mean (constant mode).
  std::size_t mean_slot() const { return 0; }

 protected:
  std::vector<double> eigenvalues_;
  std::vector<double> parseval_;
};

std::unique_ptr<SpectralBackend> make_torus_backend(int n1, int n2);

struct SphereQuadrature {
  std::vector<double> cos_theta;  // descending, north pole first
  std::vector<double> weights;    // Gauss-Legendre weights, sum 2
};

SphereQuadrature gauss_legendre(int n);
std::unique_ptr<SpectralBackend> make_sphere_backend(int nlat, int nlon, const SphereQuadrature& q);

/// Fully normalised associated Legendre values Pbar_lm(x) for l <= lmax with
/// unit mean square over the unit-area sphere (times cos/sin m phi). Index
/// layout: triangular, m-major. Used by the sphere backend and tests.
std::size_t tri_index(int l, int m, int lmax);
std::vector<double> legendre_table(int lmax, double x);

}  // namespace lcs::detail
