#include "lcs/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lcs/error.hpp"
#include "spectral_backend.hpp"

namespace lcs {
namespace {

constexpr double kPi = std::numbers::pi;

double sphere_radius() { return 1.0 / std::sqrt(4.0 * kPi); }

double wrap_unit(double t) {
  t -= std::floor(t);
  return t >= 1.0 ? 0.0 : t;
}

// Neumaier summation: quadrature sums over 10^5..10^6 nodes otherwise lose
// several digits, which shows up as a residual floor in the solvers.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

std::string_view to_string(SurfaceKind kind) {
  return kind == SurfaceKind::Torus ? "torus" : "sphere";
}

SurfaceKind surface_kind_from_string(std::string_view name) {
  if (name == "torus") return SurfaceKind::Torus;
  if (name == "sphere") return SurfaceKind::Sphere;
  throw ConfigError("unknown surface kind '" + std::string(name) + "' (expected torus or sphere)");
}

SurfaceGrid::SurfaceGrid(SurfaceKind kind, int n1, int n2) : kind_(kind), n1_(n1), n2_(n2) {}

SurfaceGrid::~SurfaceGrid() = default;

std::shared_ptr<const SurfaceGrid> SurfaceGrid::build(SurfaceKind kind, int n1, int n2) {
  if (n1 < 8 || n2 < 8)
    throw ConfigError("grid resolution must be at least 8 per direction, got " + std::to_string(n1) + "x" +
                      std::to_string(n2));
  if (n1 % 2 != 0 || n2 % 2 != 0)
    throw ConfigError("grid resolution must be even, got " + std::to_string(n1) + "x" + std::to_string(n2));
  if (kind == SurfaceKind::Sphere && n2 < 2 * n1)
    throw ConfigError("sphere grid needs at least 2 longitudes per latitude (n2 >= 2 n1)");

  std::shared_ptr<SurfaceGrid> g(new SurfaceGrid(kind, n1, n2));
  const std::size_t n = static_cast<std::size_t>(n1) * n2;
  g->weights_.resize(n);
  g->nodes_.resize(n);
  if (kind == SurfaceKind::Torus) {
    const double w = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * n2 + j;
        g->weights_[k] = w;
        g->nodes_[k] = {static_cast<double>(i) / n1, static_cast<double>(j) / n2};
      }
    g->spacing_ = 1.0 / std::min(n1, n2);
    g->backend_ = detail::make_torus_backend(n1, n2);
  } else {
    const auto q = detail::gauss_legendre(n1);
    for (int i = 0; i < n1; ++i) {
      const double theta = std::acos(q.cos_theta[i]);
      for (int j = 0; j < n2; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * n2 + j;
        g->weights_[k] = q.weights[i] / (2.0 * n2);
        g->nodes_[k] = {theta, 2.0 * kPi * j / n2};
      }
    }
    const double r = sphere_radius();
    g->spacing_ = std::max(kPi * r / n1, 2.0 * kPi * r / n2);
    g->backend_ = detail::make_sphere_backend(n1, n2, q);
  }
  return g;
}

double SurfaceGrid::first_eigenvalue() const noexcept {
  if (kind_ == SurfaceKind::Torus) return 4.0 * kPi * kPi;
  return 8.0 * kPi;  // l = 1 on the unit-area sphere: 4 pi l (l + 1)
}

double SurfaceGrid::distance(SurfacePoint p, SurfacePoint q) const noexcept {
  if (kind_ == SurfaceKind::Torus) {
    double dx = std::abs(p.a - q.a);
    double dy = std::abs(p.b - q.b);
    dx -= std::floor(dx);
    dy -= std::floor(dy);
    dx = std::min(dx, 1.0 - dx);
    dy = std::min(dy, 1.0 - dy);
    return std::hypot(dx, dy);
  }
  const double ux = std::sin(p.a) * std::cos(p.b), uy = std::sin(p.a) * std::sin(p.b), uz = std::cos(p.a);
  const double vx = std::sin(q.a) * std::cos(q.b), vy = std::sin(q.a) * std::sin(q.b), vz = std::cos(q.a);
  const double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
  const double angle = std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), ux * vx + uy * vy + uz * vz);
  return angle * sphere_radius();
}

SurfacePoint SurfaceGrid::canonical(SurfacePoint p) const {
  if (!std::isfinite(p.a) || !std::isfinite(p.b)) throw ConfigError("surface point has non-finite coordinates");
  if (kind_ == SurfaceKind::Torus) return {wrap_unit(p.a), wrap_unit(p.b)};
  if (p.a < 0.0 || p.a > kPi) throw ConfigError("sphere colatitude must lie in [0, pi]");
  double phi = std::fmod(p.b, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  return {p.a, phi};
}

std::size_t SurfaceGrid::nearest_node(SurfacePoint p) const {
  p = canonical(p);
  if (kind_ == SurfaceKind::Torus) {
    const int i = static_cast<int>(std::lround(p.a * n1_)) % n1_;
    const int j = static_cast<int>(std::lround(p.b * n2_)) % n2_;
    return static_cast<std::size_t>(i) * n2_ + j;
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const double d = distance(p, nodes_[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

void SurfaceGrid::check_size(std::span<const double> f) const {
  if (f.size() != size())
    throw ContractViolation("field has " + std::to_string(f.size()) + " values, grid has " +
                            std::to_string(size()) + " nodes");
}

double SurfaceGrid::integrate(std::span<const double> f) const {
  check_size(f);
  CompensatedSum s;
  for (std::size_t k = 0; k < f.size(); ++k) s.add(weights_[k] * f[k]);
  return s.value();
}

double SurfaceGrid::inner(std::span<const double> f, std::span<const double> g) const {
  check_size(f);
  check_size(g);
  CompensatedSum s;
  for (std::size_t k = 0; k < f.size(); ++k) s.add(weights_[k] * f[k] * g[k]);
  return s.value();
}

bool SurfaceGrid::is_mean_zero(std::span<const double> f, double tol) const {
  double scale = 1.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  return std::abs(integrate(f)) <= tol * scale;
}

void SurfaceGrid::remove_mean(std::span<double> f) const {
  const double m = integrate(f);
  for (double& v : f) v -= m;
}

bool SurfaceGrid::full_rank() const noexcept { return backend_->full_rank(); }

std::size_t SurfaceGrid::num_coefficients() const noexcept { return backend_->num_coefficients(); }

std::span<const double> SurfaceGrid::coefficient_eigenvalues() const noexcept {
  return backend_->eigenvalues();
}

std::span<const double> SurfaceGrid::coefficient_weights() const noexcept {
  return backend_->parseval_weights();
}

std::vector<double> SurfaceGrid::analysis(std::span<const double> f) const {
  check_size(f);
  std::vector<double> c(num_coefficients());
  backend_->analysis(f, c);
  return c;
}

std::vector<double> SurfaceGrid::synthesis(std::span<const double> coeffs) const {
  if (coeffs.size() != num_coefficients()) throw ContractViolation("coefficient vector has the wrong length");
  std::vector<double> v(size());
  backend_->synthesis(coeffs, v);
  return v;
}

std::vector<double> SurfaceGrid::spectral_apply(std::span<const double> f,
                                                const std::function<double(double)>& multiplier) const {
  auto c = analysis(f);
  const auto mu = backend_->eigenvalues();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= multiplier(mu[k]);
  return synthesis(c);
}

std::vector<double> SurfaceGrid::project(std::span<const double> f) const {
  if (full_rank()) {
    check_size(f);
    std::vector<double> v(f.begin(), f.end());
    remove_mean(v);
    return v;
  }
  auto c = analysis(f);
  c[0] = 0.0;
  c[1] = 0.0;
  auto v = synthesis(c);
  remove_mean(v);
  return v;
}

std::vector<double> SurfaceGrid::band_limit(std::span<const double> f) const {
  if (full_rank()) {
    check_size(f);
    return {f.begin(), f.end()};
  }
  return synthesis(analysis(f));
}

std::vector<double> SurfaceGrid::neg_laplacian(std::span<const double> u) const {
  auto v = spectral_apply(u, [](double mu) { return mu; });
  remove_mean(v);
  return v;
}

std::vector<double> SurfaceGrid::inverse_neg_laplacian(std::span<const double> f) const {
  check_size(f);
  if (!is_mean_zero(f))
    throw ContractViolation("inverse Laplacian applied to a field with nonzero mean " +
                            std::to_string(integrate(f)));
  auto v = spectral_apply(f, [](double mu) { return mu > 0.0 ? 1.0 / mu : 0.0; });
  remove_mean(v);
  return v;
}

double SurfaceGrid::gradient_pairing(std::span<const double> u, std::span<const double> v) const {
  check_size(u);
  check_size(v);
  if (!is_mean_zero(u) || !is_mean_zero(v))
    throw ContractViolation("Dirichlet pairing requires mean-zero fields");
  const auto cu = analysis(u);
  const auto cv = u.data() == v.data() ? cu : analysis(v);
  const auto mu = backend_->eigenvalues();
  const auto w = backend_->parseval_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < cu.size(); ++k) s += w[k] * mu[k] * cu[k] * cv[k];
  return s;
}

double SurfaceGrid::dirichlet(std::span<const double> u) const { return gradient_pairing(u, u); }

double SurfaceGrid::dual_norm(std::span<const double> f) const {
  check_size(f);
  const auto c = analysis(f);
  const auto mu = backend_->eigenvalues();
  const auto w = backend_->parseval_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k)
    if (mu[k] > 0.0) s += w[k] * c[k] * c[k] / mu[k];
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------

Field::Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

Field::Field(GridPtr grid, double value) : grid_(std::move(grid)), values_(grid_->size(), value) {}

Field::Field(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw ContractViolation("field size does not match grid");
}

Field Field::from_function(GridPtr grid, const std::function<double(SurfacePoint)>& f) {
  Field out(grid);
  const auto nodes = grid->nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) out.values_[k] = f(nodes[k]);
  return out;
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

void Field::check_same_grid(const Field& other) const {
  if (grid_ != other.grid_) throw ContractViolation("fields live on different grids");
}

Field& Field::operator+=(const Field& other) {
  check_same_grid(other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  check_same_grid(other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(double s, const Field& other) {
  check_same_grid(other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
  return *this;
}

double integrate(const Field& f) { return f.grid().integrate(f.values()); }
double mean(const Field& f) { return integrate(f); }

Field project_mean_zero(const Field& f) { return {f.grid_ptr(), f.grid().project(f.values())}; }

double dirichlet(const Field& u) { return u.grid().dirichlet(u.values()); }

double gradient_pairing(const Field& u, const Field& v) {
  if (u.grid_ptr() != v.grid_ptr()) throw ContractViolation("fields live on different grids");
  return u.grid().gradient_pairing(u.values(), v.values());
}

Field neg_laplacian(const Field& u) { return {u.grid_ptr(), u.grid().neg_laplacian(u.values())}; }

Field inverse_neg_laplacian(const Field& f) {
  return {f.grid_ptr(), f.grid().inverse_neg_laplacian(f.values())};
}

double inner(const Field& f, const Field& g) {
  if (f.grid_ptr() != g.grid_ptr()) throw ContractViolation("fields live on different grids");
  return f.grid().inner(f.values(), g.values());
}

double dual_norm(const Field& f) { return f.grid().dual_norm(f.values()); }

}  // namespace lcs
