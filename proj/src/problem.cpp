#include "lcs/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcs/error.hpp"

namespace lcs {
namespace {
constexpr double kPi = std::numbers::pi;
}

Field green_function(const GridPtr& grid, std::size_t node) {
  if (node >= grid->size()) throw ConfigError("green_function: pole node out of range");
  std::vector<double> rhs(grid->size(), -1.0);
  rhs[node] += 1.0 / grid->weights()[node];
  return {grid, grid->inverse_neg_laplacian(rhs)};
}

Field green_function(const GridPtr& grid, SurfacePoint p) { return green_function(grid, grid->nearest_node(p)); }

Field log_singular_weight(const GridPtr& grid, std::span<const Vortex> vortices) {
  Field out(grid);
  for (const auto& v : vortices) {
    if (v.alpha == 0.0) continue;
    out.axpy(-4.0 * kPi * v.alpha, green_function(grid, v.p));
  }
  return out;
}

std::vector<double> ProblemData::alphas() const {
  std::vector<double> a;
  a.reserve(vortices_.size());
  for (const auto& v : vortices_) a.push_back(v.alpha);
  return a;
}

void ProblemData::derive() {
  log_hat_h_ = log_singular_weight(grid_, vortices_);
  hat_h_ = log_hat_h_;
  for (double& v : hat_h_.values()) v = std::exp(v);
  log_tilde_h1_ = log_hat_h_;
  log_tilde_h2_ = log_hat_h_;
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    log_tilde_h1_[k] += std::log(h1_[k]);
    log_tilde_h2_[k] += std::log(h2_[k]);
  }
  tilde_h1_ = log_tilde_h1_;
  tilde_h2_ = log_tilde_h2_;
  for (double& v : tilde_h1_.values()) v = std::exp(v);
  for (double& v : tilde_h2_.values()) v = std::exp(v);
}

ProblemData desingularize(const GridPtr& grid, RhoPair rho, const Field& h1, const Field& h2,
                          std::vector<Vortex> vortices) {
  if (!(rho.rho1 > 0.0) || !(rho.rho2 > 0.0)) throw ConfigError("rho1 and rho2 must be positive");
  if (h1.grid_ptr() != grid || h2.grid_ptr() != grid) throw ContractViolation("weights live on another grid");
  for (const Field* h : {&h1, &h2})
    for (double v : h->values())
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("weights h1, h2 must be strictly positive");

  ProblemData pd;
  pd.grid_ = grid;
  pd.rho_ = rho;
  pd.h1_ = h1;
  pd.h2_ = h2;
  for (auto& v : vortices) {
    if (!(v.alpha >= 0.0)) throw ConfigError("vortex multiplicity alpha must be >= 0");
    const SurfacePoint canon = grid->canonical(v.p);
    const std::size_t node = grid->nearest_node(canon);
    const SurfacePoint snapped = grid->node(node);
    const double moved = grid->distance(canon, snapped);
    if (moved > 1e-12) {
      std::ostringstream os;
      os << "vortex at (" << v.p.a << ", " << v.p.b << ") snapped to node (" << snapped.a << ", " << snapped.b
         << "), moved by " << moved;
      pd.warnings_.push_back(os.str());
    }
    v.p = snapped;
  }
  pd.vortices_ = std::move(vortices);
  pd.derive();
  return pd;
}

ProblemData ProblemData::with_rho(RhoPair rho) const {
  if (!(rho.rho1 > 0.0) || !(rho.rho2 > 0.0)) throw ConfigError("rho1 and rho2 must be positive");
  ProblemData pd = *this;
  pd.rho_ = rho;
  return pd;
}

ProblemData ProblemData::swapped() const {
  ProblemData pd = *this;
  std::swap(pd.rho_.rho1, pd.rho_.rho2);
  std::swap(pd.h1_, pd.h2_);
  std::swap(pd.log_tilde_h1_, pd.log_tilde_h2_);
  std::swap(pd.tilde_h1_, pd.tilde_h2_);
  return pd;
}

ProblemData ProblemData::with_perturbed_weights(const Field& log_factor, const std::string& note) const {
  ProblemData pd = *this;
  for (std::size_t k = 0; k < grid_->size(); ++k) {
    pd.h1_[k] *= std::exp(log_factor[k]);
    pd.h2_[k] *= std::exp(log_factor[k]);
  }
  pd.derive();
  pd.warnings_.push_back(note);
  return pd;
}

// ---------------------------------------------------------------------------

std::vector<double> enumerate_sigma(std::span<const double> alphas, double bound) {
  if (!(bound > 0.0)) throw ConfigError("enumerate_sigma: bound must be positive");
  if (alphas.size() > 24) throw ConfigError("enumerate_sigma: too many vortices for subset enumeration");
  for (double a : alphas)
    if (!(a >= 0.0)) throw ConfigError("enumerate_sigma: alpha must be >= 0");
  const double nmax = bound / (8.0 * kPi) * (1.0 + 1e-12);
  std::vector<double> out;
  const std::size_t subsets = std::size_t{1} << alphas.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    double s = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j)
      if (mask >> j & 1u) s += 1.0 + alphas[j];
    for (int m = 0; m + s <= nmax; ++m)
      if (m + s > 0.0) out.push_back(m + s);
  }
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double v : out)
    if (unique.empty() || v - unique.back() > 1e-9 * std::max(1.0, v)) unique.push_back(v);
  return unique;
}

LambdaMembership lambda_membership(RhoPair rho, std::span<const double> alphas, double tol) {
  if (!(rho.rho1 > 0.0) || !(rho.rho2 > 0.0)) throw ConfigError("rho1 and rho2 must be positive");
  const double harmonic = rho.rho1 * rho.rho2 / (rho.rho1 + rho.rho2);
  const auto ns = enumerate_sigma(alphas, 8.0 * kPi * (harmonic / (4.0 * kPi) + 2.0));

  LambdaMembership out;
  out.margin = std::numeric_limits<double>::infinity();
  double nearest = 0.0;
  for (double n : ns) {
    const double d = std::abs(harmonic - 4.0 * kPi * n);
    if (d < out.margin) {
      out.margin = d;
      nearest = n;
    }
  }
  if (out.margin <= tol) {
    out.status = LambdaMembership::Status::InLambda;
    out.n = nearest;
    return out;
  }
  const double lo = std::min(rho.rho1, rho.rho2);
  const double mean = 0.5 * (rho.rho1 + rho.rho2);
  const int kmax = static_cast<int>(std::floor(lo / (8.0 * kPi))) + 1;
  for (int k = kmax; k >= 0; --k) {
    if (lo > 8.0 * k * kPi && mean < 8.0 * (k + 1) * kPi) {
      out.status = LambdaMembership::Status::Region;
      out.k = k;
      return out;
    }
  }
  out.status = LambdaMembership::Status::Unknown;
  return out;
}

std::string describe(const LambdaMembership& m) {
  std::ostringstream os;
  switch (m.status) {
    case LambdaMembership::Status::InLambda:
      os << "in critical set (rho1 rho2 / (rho1 + rho2) = 4 pi * " << m.n << ")";
      break;
    case LambdaMembership::Status::Region:
      os << "region k=" << m.k << " (margin " << m.margin << ")";
      break;
    case LambdaMembership::Status::Unknown:
      os << "outside the classified regimes (margin " << m.margin << ")";
      break;
  }
  return os.str();
}

}  // namespace lcs
