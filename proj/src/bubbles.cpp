#include "lcs/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lcs/error.hpp"

namespace lcs {
namespace {

constexpr double kPi = std::numbers::pi;

void check_away_from_vortices(const ProblemData& pd, const Barycenter& sigma) {
  const auto& g = pd.grid();
  for (const auto& a : sigma.atoms)
    for (const auto& v : pd.vortices()) {
      if (v.alpha == 0.0) continue;
      if (g.distance(a.x, v.p) < 10.0 * g.spacing()) {
        std::ostringstream os;
        os << "barycenter atom (" << a.x.a << ", " << a.x.b << ") is closer than 10 node spacings to a vortex";
        throw ConfigError(os.str());
      }
    }
}

std::vector<double> log_lambdas(const std::vector<double>& lambdas) {
  if (!std::is_sorted(lambdas.begin(), lambdas.end()) ||
      std::adjacent_find(lambdas.begin(), lambdas.end()) != lambdas.end())
    throw ConfigError("lambda list must be strictly increasing");
  std::vector<double> x;
  for (double l : lambdas) x.push_back(std::log(l));
  return x;
}

}  // namespace

Barycenter make_barycenter(const SurfaceGrid& grid, std::vector<Atom> atoms, int order) {
  if (order < 1) throw ConfigError("barycenter order must be >= 1");
  if (atoms.empty() || static_cast<int>(atoms.size()) > order)
    throw ConfigError("a barycenter of order k needs between 1 and k atoms");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.t >= 0.0)) throw ConfigError("barycenter weights must be non-negative");
    total += a.t;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("barycenter weights must sum to 1");
  for (auto& a : atoms) a.x = grid.node(grid.nearest_node(grid.canonical(a.x)));
  return {std::move(atoms), order};
}

Barycenter equal_barycenter(const SurfaceGrid& grid, const std::vector<SurfacePoint>& points) {
  std::vector<Atom> atoms;
  for (const auto& p : points) atoms.push_back({1.0 / double(points.size()), p});
  // Equal weights may miss 1 by an ulp; renormalise against the first atom.
  double rest = 0.0;
  for (std::size_t i = 1; i < atoms.size(); ++i) rest += atoms[i].t;
  if (!atoms.empty()) atoms[0].t = 1.0 - rest;
  return make_barycenter(grid, std::move(atoms), static_cast<int>(points.size()));
}

double lambda_max(const SurfaceGrid& grid) {
  double h;
  if (grid.kind() == SurfaceKind::Torus) {
    h = 1.0 / std::min(grid.n1(), grid.n2());
  } else {
    const double R = 1.0 / std::sqrt(4.0 * kPi);
    h = std::max(kPi * R / grid.n1(), 2.0 * kPi * R / grid.n2());
  }
  return 0.2 / h;
}

Field bubble_raw(const GridPtr& grid, const BubbleParams& params) {
  const double lam = params.lambda;
  if (!(lam >= 1.0)) throw ConfigError("bubble scale lambda must be >= 1");
  const double cap = lambda_max(*grid);
  if (lam > cap * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "bubble scale lambda = " << lam << " exceeds the resolution cap " << cap << " of this grid";
    throw ResolutionError(os.str());
  }
  if (params.sigma.atoms.empty()) throw ConfigError("bubble needs at least one atom");
  const double logpi = std::log(kPi);
  return Field::from_function(grid, [&](SurfacePoint y) {
    double s = 0.0;
    for (const auto& a : params.sigma.atoms) {
      const double d = grid->distance(y, a.x);
      const double core = lam / (1.0 + lam * lam * d * d);
      s += a.t * core * core;
    }
    return std::log(s) - logpi;
  });
}

Field bubble_field(const GridPtr& grid, const BubbleParams& params) {
  const Field raw = bubble_raw(grid, params);
  return {grid, grid->project(raw.values())};
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two samples");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

double fit_upper_half_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t first = n >= 4 ? n / 2 : 0;
  return fit_slope(x.subspan(first), y.subspan(first));
}

AsymptoticsReport energy_asymptotics(const ProblemData& pd, const Barycenter& sigma,
                                     const std::vector<double>& lambdas) {
  check_away_from_vortices(pd, sigma);
  const auto x = log_lambdas(lambdas);
  AsymptoticsReport out;
  std::vector<double> d, l;
  for (double lam : lambdas) {
    const Field phi = bubble_field(pd.grid_ptr(), {lam, sigma});
    AsymptoticsRow row;
    row.lambda = lam;
    row.half_dirichlet = 0.5 * dirichlet(phi);
    row.log_integral = log_integral(pd.log_hat_h(), phi);
    d.push_back(row.half_dirichlet);
    l.push_back(row.log_integral);
    out.rows.push_back(row);
  }
  out.s_dirichlet = fit_upper_half_slope(x, d);
  out.s_logint = fit_upper_half_slope(x, l);
  return out;
}

PhiMapResult phi_map(const ProblemData& pd, const Barycenter& sigma, double lambda, const Field* warm,
                     const InnerOptions& opts) {
  check_away_from_vortices(pd, sigma);
  PhiMapResult out;
  out.F = bubble_field(pd.grid_ptr(), {lambda, sigma});
  // J~ is symmetric under exchanging the two components; work with rho1 <= rho2.
  const bool swap = pd.rho().rho1 > pd.rho().rho2;
  const ProblemData& use = swap ? pd.swapped() : pd;
  Field warm_use;
  if (warm) warm_use = swap ? -*warm : *warm;
  auto c = J_tilde(use, out.F, warm ? &warm_use : nullptr, opts);
  out.J_tilde = c.value;
  out.inner = std::move(c.inner);
  if (swap) out.inner.G_tilde *= -1.0;
  return out;
}

DescentReport descent_rate(const ProblemData& pd, const Barycenter& sigma, const std::vector<double>& lambdas,
                           const InnerOptions& opts) {
  const auto x = log_lambdas(lambdas);
  DescentReport out;
  std::vector<double> j;
  for (double lam : lambdas) {
    const auto r = phi_map(pd, sigma, lam, nullptr, opts);
    AsymptoticsRow row;
    row.lambda = lam;
    row.half_dirichlet = 0.5 * dirichlet(r.F);
    row.log_integral = log_integral(pd.log_hat_h(), r.F);
    row.J_tilde = r.J_tilde;
    j.push_back(r.J_tilde);
    out.rows.push_back(row);
  }
  out.slope = fit_upper_half_slope(x, j);
  const double k = double(sigma.atoms.size());
  out.predicted = 4.0 * (8.0 * k * kPi - std::min(pd.rho().rho1, pd.rho().rho2));
  // Monotonicity is judged on the same upper half as the slope fit.
  const std::size_t first = j.size() >= 4 ? j.size() / 2 : 0;
  out.decreasing = out.increasing = j.size() - first >= 2;
  for (std::size_t i = first + 1; i < j.size(); ++i) {
    out.decreasing = out.decreasing && j[i] < j[i - 1];
    out.increasing = out.increasing && j[i] > j[i - 1];
  }
  return out;
}

ConcentrationResult concentration_profile(const ProblemData& pd, const Field& F, int k, double r, double eps) {
  const auto& g = pd.grid();
  if (!(r > 2.0 * g.spacing())) throw ConfigError("concentration radius must exceed two node spacings");
  if (k < 1) throw ConfigError("concentration search needs k >= 1");
  const auto dens = log_integral_density(pd.log_hat_h(), F);
  const auto w = g.weights();
  const std::size_t n = g.size();
  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i) mass[i] = w[i] * dens.density[i];

  // Nodes sorted by mass; the tail holding at most eps/1000 of the mass is ignored.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mass[a] > mass[b]; });
  std::size_t keep = 0;
  double acc = 0.0;
  while (keep < n && acc < 1.0 - 1e-3 * eps) acc += mass[order[keep++]];
  std::vector<std::size_t> support(order.begin(), order.begin() + keep);

  // Candidate centres: heaviest nodes plus a coarse lattice of nodes.
  std::vector<std::size_t> candidates(order.begin(), order.begin() + std::min<std::size_t>(64, n));
  const int lat = 24;
  for (int i = 0; i < lat; ++i)
    for (int j = 0; j < lat; ++j) {
      const std::size_t node =
          static_cast<std::size_t>(i * g.n1() / lat) * g.n2() + static_cast<std::size_t>(j * g.n2() / lat);
      candidates.push_back(node);
    }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<char> taken(n, 0);
  ConcentrationResult out;
  for (int ball = 0; ball < k; ++ball) {
    double best = -1.0;
    std::size_t best_c = 0;
    for (std::size_t c : candidates) {
      const SurfacePoint pc = g.node(c);
      double m = 0.0;
      for (std::size_t s : support)
        if (!taken[s] && g.distance(pc, g.node(s)) < r) m += mass[s];
      if (m > best) {
        best = m;
        best_c = c;
      }
    }
    if (best <= 0.0) break;
    const SurfacePoint pc = g.node(best_c);
    for (std::size_t s : support)
      if (g.distance(pc, g.node(s)) < r) taken[s] = 1;
    out.centers.push_back(pc);
    out.masses.push_back(best);
    out.captured += best;
  }
  out.found = out.captured >= 1.0 - eps;
  return out;
}

std::vector<double> atom_masses(const ProblemData& pd, const Field& F, const Barycenter& sigma, double r) {
  const auto& g = pd.grid();
  const auto dens = log_integral_density(pd.log_hat_h(), F);
  const auto w = g.weights();
  std::vector<double> out;
  for (const auto& a : sigma.atoms) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.distance(a.x, g.node(i)) < r) m += w[i] * dens.density[i];
    out.push_back(m);
  }
  return out;
}

MTReport mt_check(const Field& log_hat_h, const std::vector<FamilyMember>& family) {
  MTReport out;
  out.max_deficit = -std::numeric_limits<double>::infinity();
  std::vector<double> d, l2;
  for (const auto& m : family) {
    MTRow row;
    row.parameter = m.parameter;
    row.dirichlet = dirichlet(m.F);
    row.log_integral = log_integral(log_hat_h, m.F);
    row.deficit = 2.0 * row.log_integral - row.dirichlet / (8.0 * kPi);
    row.ratio = row.dirichlet > 0.0 ? 2.0 * row.log_integral / row.dirichlet : 0.0;
    out.max_deficit = std::max(out.max_deficit, row.deficit);
    d.push_back(row.dirichlet);
    l2.push_back(2.0 * row.log_integral);
    out.rows.push_back(row);
  }
  out.asymptotic_ratio =
      family.size() >= 2 ? fit_upper_half_slope(d, l2) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<FamilyMember> bubble_family(const GridPtr& grid, const Barycenter& sigma,
                                        const std::vector<double>& lambdas) {
  log_lambdas(lambdas);
  std::vector<FamilyMember> out;
  for (double lam : lambdas) out.push_back({lam, bubble_field(grid, {lam, sigma})});
  return out;
}

}  // namespace lcs
