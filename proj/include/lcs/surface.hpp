#pragma once

// Discrete compact surfaces of unit area with spectral Laplace-Beltrami
// operators. Two kinds are supported:
//
//   Torus   uniform n1 x n2 periodic grid on [0,1)^2, Fourier diagonalisation.
//   Sphere  n1 Gauss-Legendre colatitudes x n2 uniform longitudes on the round
//           sphere of radius 1/sqrt(4 pi); real spherical harmonics truncated
//           at degree n1 - 1.
//
// Node (i, j) has flat index i * n2 + j. Torus node (i, j) sits at
// (x, y) = (i / n1, j / n2); sphere node (i, j) at (theta_i, 2 pi j / n2),
// theta increasing from the north pole.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace lcs {

enum class SurfaceKind : std::uint8_t { Torus = 0, Sphere = 1 };

std::string_view to_string(SurfaceKind kind);
SurfaceKind surface_kind_from_string(std::string_view name);

/// Point on a surface: torus (x, y) in [0,1)^2, sphere (theta, phi).
struct SurfacePoint {
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const SurfacePoint&, const SurfacePoint&) = default;
};

namespace detail {
class SpectralBackend;
}

class SurfaceGrid {
 public:
  /// Throws ConfigError for resolutions below 8, odd resolutions, or a sphere
  /// whose longitude count cannot carry the full harmonic band (n2 < 2 n1).
  static std::shared_ptr<const SurfaceGrid> build(SurfaceKind kind, int n1, int n2);

  ~SurfaceGrid();
  SurfaceGrid(const SurfaceGrid&) = delete;
  SurfaceGrid& operator=(const SurfaceGrid&) = delete;

  SurfaceKind kind() const noexcept { return kind_; }
  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> weights() const noexcept { return weights_; }
  SurfacePoint node(std::size_t index) const noexcept { return nodes_[index]; }
  std::span<const SurfacePoint> nodes() const noexcept { return nodes_; }

  /// Largest distance between neighbouring nodes along a grid line.
  double spacing() const noexcept { return spacing_; }

  /// Smallest positive eigenvalue of -Laplacian on the discrete space.
  double first_eigenvalue() const noexcept;

  /// Geodesic distance (periodic minimum image on the torus, great circle on
  /// the sphere).
  double distance(SurfacePoint p, SurfacePoint q) const noexcept;
  std::size_t nearest_node(SurfacePoint p) const;
  /// Wraps torus coordinates into [0,1)^2 and sphere angles into their ranges.
  SurfacePoint canonical(SurfacePoint p) const;

  // Raw value-array operations. Field wraps these with grid checks.
  double integrate(std::span<const double> f) const;
  double inner(std::span<const double> f, std::span<const double> g) const;
  bool is_mean_zero(std::span<const double> f, double tol = 1e-9) const;
  void remove_mean(std::span<double> f) const;

  /// Projection onto the resolved (band-limited) space with the mean removed.
  /// On the torus every grid function is resolved, so this only removes the
  /// mean.
  std::vector<double> project(std::span<const double> f) const;
  /// Projection onto the resolved space keeping the mean.
  std::vector<double> band_limit(std::span<const double> f) const;
  /// True when every grid function is band-limited (torus).
  bool full_rank() const noexcept;

  /// Applies multiplier(mu) to every spectral coefficient, where mu is the
  /// -Laplacian eigenvalue of the coefficient's mode.
  std::vector<double> spectral_apply(std::span<const double> f,
                                     const std::function<double(double)>& multiplier) const;

  std::vector<double> neg_laplacian(std::span<const double> u) const;
  std::vector<double> inverse_neg_laplacian(std::span<const double> f) const;
  double dirichlet(std::span<const double> u) const;
  double gradient_pairing(std::span<const double> u, std::span<const double> v) const;
  /// H^{-1} dual norm sqrt(<f, (-Laplacian)^{-1} f>) of a mean-zero f.
  double dual_norm(std::span<const double> f) const;

  /// Spectral coefficient access, exposed for tests and the field dumps.
  std::size_t num_coefficients() const noexcept;
  std::vector<double> analysis(std::span<const double> f) const;
  std::vector<double> synthesis(std::span<const double> coeffs) const;
  std::span<const double> coefficient_eigenvalues() const noexcept;
  std::span<const double> coefficient_weights() const noexcept;

 private:
  SurfaceGrid(SurfaceKind kind, int n1, int n2);
  void check_size(std::span<const double> f) const;

  SurfaceKind kind_;
  int n1_;
  int n2_;
  double spacing_ = 0.0;
  std::vector<double> weights_;
  std::vector<SurfacePoint> nodes_;
  std::unique_ptr<detail::SpectralBackend> backend_;
};

using GridPtr = std::shared_ptr<const SurfaceGrid>;

/// Real scalar field sampled at the nodes of a grid. Mean-zero is not part of
/// the type; operations that need it check it.
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, double value);
  Field(GridPtr grid, std::vector<double> values);

  static Field from_function(GridPtr grid, const std::function<double(SurfacePoint)>& f);

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SurfaceGrid& grid() const { return *grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  double max() const;
  double min() const;
  double sup_norm() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  /// this += s * other
  Field& axpy(double s, const Field& other);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator-(Field a) { return a *= -1.0; }

 private:
  void check_same_grid(const Field& other) const;

  GridPtr grid_;
  std::vector<double> values_;
};

double integrate(const Field& f);
double mean(const Field& f);
Field project_mean_zero(const Field& f);
double dirichlet(const Field& u);
double gradient_pairing(const Field& u, const Field& v);
/// -Laplacian u.
Field neg_laplacian(const Field& u);
/// Mean-zero solution of -Laplacian u = f; f must be mean-zero.
Field inverse_neg_laplacian(const Field& f);
double inner(const Field& f, const Field& g);
double dual_norm(const Field& f);

}  // namespace lcs
