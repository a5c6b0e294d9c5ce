#include "lcs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lcs/bubbles.hpp"
#include "lcs/error.hpp"
#include "lcs/krylov.hpp"
#include "lcs/random.hpp"

namespace lcs {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Field project(const Field& f) { return {f.grid_ptr(), f.grid().project(f.values())}; }

std::string rho_text(RhoPair r) {
  std::ostringstream os;
  os << "(" << r.rho1 / std::numbers::pi << " pi, " << r.rho2 / std::numbers::pi << " pi)";
  return os.str();
}

double rho_distance(RhoPair a, RhoPair b) { return std::hypot(a.rho1 - b.rho1, a.rho2 - b.rho2); }

double harmonic(RhoPair r) { return r.rho1 * r.rho2 / (r.rho1 + r.rho2); }

// Largest share of the normalised measure hat_h e^F carried by one node.
double peak_mass_fraction(const ProblemData& pd, const Field& F) {
  const auto d = log_integral_density(pd.log_hat_h(), F);
  const auto w = F.grid().weights();
  double peak = 0.0;
  for (std::size_t k = 0; k < F.size(); ++k) peak = std::max(peak, w[k] * d.density[k]);
  return peak;
}

}  // namespace

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Minimize:
      return "minimize";
    case SolveMethod::NewtonEL:
      return "newton";
    case SolveMethod::Continuation:
      return "continuation";
  }
  return "unknown";
}

std::pair<Field, Field> residual_fields(const ProblemData& pd, const Field& u1, const Field& u2) {
  const auto n2 = log_integral_density(pd.log_tilde_h2(), u2);
  const auto n1 = log_integral_density(pd.log_tilde_h1(), u1);
  Field r1 = neg_laplacian(u1) - project(pd.rho().rho2 * n2.density);
  Field r2 = neg_laplacian(u2) - project(pd.rho().rho1 * n1.density);
  // rho nu is O(rho) pointwise, so its projection keeps a mean of order
  // eps rho; near a solution that is large against the residual and lies
  // outside the range of the Jacobian.
  r1 -= Field(r1.grid_ptr(), mean(r1));
  r2 -= Field(r2.grid_ptr(), mean(r2));
  return {std::move(r1), std::move(r2)};
}

Residuals residual(const ProblemData& pd, const Field& u1, const Field& u2) {
  const auto [r1, r2] = residual_fields(pd, u1, u2);
  return {r1.sup_norm(), r2.sup_norm()};
}

void finalize_report(const ProblemData& pd, SolveReport& report, const InnerOptions& inner) {
  if (report.u1.empty()) {
    report.u1 = report.F - report.G;
    report.u2 = report.F + report.G;
  } else {
    report.F = 0.5 * (report.u1 + report.u2);
    report.G = 0.5 * (report.u2 - report.u1);
  }
  const Residuals r = residual(pd, report.u1, report.u2);
  report.residual_1 = r.r1;
  report.residual_2 = r.r2;
  report.rho = pd.rho();
  report.J_value = J_full(pd, report.u1, report.u2);
  try {
    report.J_tilde_value = J_tilde(pd, report.F, &report.G, inner).value;
  } catch (const ConvergenceError& e) {
    report.J_tilde_value = std::numeric_limits<double>::quiet_NaN();
    report.notes.push_back(std::string("J~ not evaluated: ") + e.what());
  }
  report.success = report.residual() <= report.tolerance;
}

// ---------------------------------------------------------------------------
// Constrained descent

SolveReport minimize_outer(const ProblemData& pd, const Field& F0, const OuterOptions& opts) {
  const GridPtr& grid = pd.grid_ptr();
  if (opts.check_regime) {
    const auto m = lambda_membership(pd.rho(), pd.alphas());
    if (m.status != LambdaMembership::Status::Region || m.k != 0)
      throw ConfigError("minimize_outer needs subcritical masses (region k=0); rho " + rho_text(pd.rho()) + " is " +
                        describe(m));
  }
  if (!grid->is_mean_zero(F0.values())) throw ContractViolation("minimize_outer: F0 must be mean-zero");

  const auto precond = [&](const Field& g) {
    return Field(grid, grid->spectral_apply(g.values(), [](double mu) { return mu > 0.0 ? 0.5 / mu : 0.0; }));
  };

  SolveReport report;
  report.method = SolveMethod::Minimize;
  report.tolerance = opts.accept_residual;
  Field F = project(F0);
  ConstrainedValue cur = J_tilde(pd, F, nullptr, opts.inner);
  double gn = dual_norm(cur.gradient);
  double alpha = 1.0;
  bool converged = false;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    report.trace.push_back({it, pd.rho(), cur.value, gn, alpha, ""});
    // The dual norm weights high frequencies down, so a small gradient does
    // not yet bound the sup-norm residual; keep descending until it does.
    const bool small_gradient = gn < opts.gradient_tolerance;
    if (small_gradient &&
        residual(pd, F - cur.inner.G_tilde, F + cur.inner.G_tilde).max() <= opts.accept_residual) {
      converged = true;
      break;
    }
    if (it == opts.max_iterations) break;
    const double peak = peak_mass_fraction(pd, F);
    if (peak >= opts.collapse_fraction || cur.value < opts.energy_floor) {
      std::ostringstream os;
      os << "unbounded descent: after " << it << " iterations J~ = " << cur.value << " and one node carries "
         << peak << " of the normalised mass; the masses " << rho_text(pd.rho())
         << " are outside the coercive regime";
      throw UnboundedDescentError(os.str());
    }

    const Field d = -precond(cur.gradient);
    const double slope = inner(cur.gradient, d);
    double t = alpha;
    bool accepted = false;
    ConstrainedValue next;
    Field Fn;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Fn = F;
      Fn.axpy(t, d);
      next = J_tilde(pd, Fn, &cur.inner.G_tilde, opts.inner);
      const bool armijo = next.value <= cur.value + 1e-4 * t * slope;
      const bool flat = std::abs(next.value - cur.value) <= 1e3 * kEps * (std::abs(cur.value) + 1.0) &&
                        dual_norm(next.gradient) < gn;
      if (armijo || flat) {
        accepted = true;
        break;
      }
    }
    if (!accepted && small_gradient) {
      report.notes.push_back("minimize_outer: descent stalled below the gradient tolerance");
      converged = true;
      break;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "minimize_outer: line search failed at gradient norm " << gn << " after " << it << " iterations";
      throw ConvergenceError(os.str());
    }
    const Field s = Fn - F;
    const Field y = next.gradient - cur.gradient;
    const double sy = inner(s, y);
    alpha = sy > 0.0 ? std::clamp(2.0 * dirichlet(s) / sy, 1e-6, 1e6) : 1.0;
    F = std::move(Fn);
    cur = std::move(next);
    gn = dual_norm(cur.gradient);
  }
  if (!converged) {
    std::ostringstream os;
    os << "minimize_outer: " << opts.max_iterations << " iterations without reaching gradient norm "
       << opts.gradient_tolerance << " (last " << gn << ")";
    throw ConvergenceError(os.str());
  }
  report.F = F;
  report.G = cur.inner.G_tilde;
  finalize_report(pd, report, opts.inner);
  return report;
}

// ---------------------------------------------------------------------------
// Newton on the system

namespace {

std::string floor_note(double floor) {
  std::ostringstream os;
  os << "newton_el: stopped at the round-off floor " << floor;
  return os.str();
}

}  // namespace

SolveReport newton_el(const ProblemData& pd, const Field& u1_init, const Field& u2_init, const NewtonOptions& opts) {
  const GridPtr& grid = pd.grid_ptr();
  if (!grid->is_mean_zero(u1_init.values()) || !grid->is_mean_zero(u2_init.values()))
    throw ContractViolation("newton_el: initial fields must be mean-zero");
  const std::size_t n = grid->size();
  const double r1 = pd.rho().rho1, r2 = pd.rho().rho2;

  SolveReport report;
  report.method = SolveMethod::NewtonEL;
  report.tolerance = opts.tolerance;
  Field u1 = project(u1_init), u2 = project(u2_init);

  const InnerProduct dot = [&](const Vec& a, const Vec& b) {
    return grid->inner(std::span(a).first(n), std::span(b).first(n)) +
           grid->inner(std::span(a).subspan(n), std::span(b).subspan(n));
  };
  const LinearOp precond = [&](const Vec& x) {
    const auto mult = [](double mu) { return mu > 0.0 ? 1.0 / (mu + 1.0) : 0.0; };
    Vec out = grid->spectral_apply(std::span(x).first(n), mult);
    const Vec b = grid->spectral_apply(std::span(x).subspan(n), mult);
    out.insert(out.end(), b.begin(), b.end());
    return out;
  };
  auto merit = [&](const std::pair<Field, Field>& r) { return std::sqrt(inner(r.first, r.first) + inner(r.second, r.second)); };

  // Rounding noise of relative size eps in an iterate of size |u| reaches the
  // residual amplified by the top Laplacian eigenvalue; below this level the
  // merit no longer decreases reliably.
  const auto mu = grid->coefficient_eigenvalues();
  const double mu_max = *std::max_element(mu.begin(), mu.end());
  double u_scale = std::max(u1.sup_norm(), u2.sup_norm());
  const auto noise_floor = [&] { return 10.0 * kEps * (mu_max * u_scale + r1 + r2); };

  auto res = residual_fields(pd, u1, u2);
  double m = merit(res);
  for (int it = 0;; ++it) {
    const double sup = std::max(res.first.sup_norm(), res.second.sup_norm());
    report.trace.push_back({it, pd.rho(), 0.0, sup, 0.0, ""});
    if (sup <= opts.tolerance) break;
    if (sup <= noise_floor() && it >= opts.max_iterations) {
      report.notes.push_back(floor_note(noise_floor()));
      break;
    }
    if (it >= opts.max_iterations) {
      std::ostringstream os;
      os << "newton_el: " << opts.max_iterations << " iterations without reaching residual " << opts.tolerance
         << " (last " << sup << ")";
      throw ConvergenceError(os.str());
    }
    const auto d1 = log_integral_density(pd.log_tilde_h1(), u1).density;
    const auto d2 = log_integral_density(pd.log_tilde_h2(), u2).density;
    const auto w = grid->weights();
    const LinearOp jac = [&](const Vec& v) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        m1 += w[k] * d1[k] * v[k];
        m2 += w[k] * d2[k] * v[n + k];
      }
      Vec a(n), b(n);
      for (std::size_t k = 0; k < n; ++k) {
        a[k] = r2 * d2[k] * (v[n + k] - m2);
        b[k] = r1 * d1[k] * (v[k] - m1);
      }
      a = grid->project(a);
      b = grid->project(b);
      const Vec l1 = grid->neg_laplacian(std::span(v).first(n));
      const Vec l2 = grid->neg_laplacian(std::span(v).subspan(n));
      Vec out(2 * n);
      for (std::size_t k = 0; k < n; ++k) {
        out[k] = l1[k] - a[k];
        out[n + k] = l2[k] - b[k];
      }
      return out;
    };
    Vec rhs(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      rhs[k] = -res.first[k];
      rhs[n + k] = -res.second[k];
    }
    const double eta = std::clamp(m, 1e-13, 1e-3);
    const auto gm = gmres(jac, rhs, precond, dot, eta, opts.max_krylov);
    if (gm.condition_estimate > opts.singular_condition || (!gm.converged && gm.relative_residual > 0.5)) {
      std::ostringstream os;
      os << "newton_el: singular Jacobian at rho " << rho_text(pd.rho()) << " (condition estimate "
         << gm.condition_estimate << ", GMRES relative residual " << gm.relative_residual << ")";
      throw SingularJacobianError(os.str(), gm.condition_estimate);
    }
    const Field s1(grid, Vec(gm.x.begin(), gm.x.begin() + n));
    const Field s2(grid, Vec(gm.x.begin() + n, gm.x.end()));
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Field v1 = u1, v2 = u2;
      v1.axpy(t, s1);
      v2.axpy(t, s2);
      std::pair<Field, Field> rt;
      try {
        rt = residual_fields(pd, v1, v2);
      } catch (const NumericalError&) {
        continue;
      }
      const double mt = merit(rt);
      if (mt <= (1.0 - 1e-4 * t) * m || (mt < m && m <= 1e3 * kEps * (r1 + r2))) {
        u1 = std::move(v1);
        u2 = std::move(v2);
        res = std::move(rt);
        m = mt;
        accepted = true;
        break;
      }
    }
    report.trace.back().step = accepted ? t : 0.0;
    u_scale = std::max({u_scale, u1.sup_norm(), u2.sup_norm()});
    if (!accepted && sup <= noise_floor()) {
      report.notes.push_back(floor_note(noise_floor()));
      break;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "newton_el: line search failed at residual " << sup << " (rho " << rho_text(pd.rho()) << ")";
      throw ConvergenceError(os.str());
    }
  }
  report.u1 = std::move(u1);
  report.u2 = std::move(u2);
  finalize_report(pd, report);
  return report;
}

// ---------------------------------------------------------------------------
// Continuation

void validate_path(const std::vector<RhoPair>& path, std::span<const double> alphas, const ContinuationOptions& opts) {
  if (path.empty()) throw ConfigError("continuation path is empty");
  for (const auto& p : path) {
    const auto m = lambda_membership(p, alphas);
    if (m.status == LambdaMembership::Status::InLambda)
      throw ConfigError("continuation path point " + rho_text(p) + " is in critical set");
    if (m.margin < opts.margin * (1.0 - 1e-9)) {
      std::ostringstream os;
      os << "continuation path point " << rho_text(p) << " is within " << m.margin << " of the critical set (margin "
         << opts.margin << " required)";
      throw ConfigError(os.str());
    }
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double len = rho_distance(path[i - 1], path[i]);
    if (len <= opts.max_step * (1.0 + 1e-9)) continue;
    // A longer step is allowed only to carry the branch through the margin
    // band around a critical curve; its length outside the band(s) is bounded
    // by max_step, taking H = rho1 rho2 / (rho1 + rho2) linear along the step.
    const double ha = harmonic(path[i - 1]), hb = harmonic(path[i]);
    int crossed = 0;
    for (double n : enumerate_sigma(alphas, 2.0 * std::max(ha, hb) + 8.0 * std::numbers::pi)) {
      const double c = 4.0 * std::numbers::pi * n;
      if (c > std::min(ha, hb) && c < std::max(ha, hb)) ++crossed;
    }
    const double outside = len * (1.0 - 2.0 * opts.margin * crossed / std::abs(hb - ha));
    if (crossed == 0 || outside > opts.max_step * 1.05) {
      std::ostringstream os;
      os << "continuation step " << rho_text(path[i - 1]) << " -> " << rho_text(path[i]) << " has length " << len
         << " > " << opts.max_step;
      throw ConfigError(os.str());
    }
  }
}

std::vector<RhoPair> admissible_segment(RhoPair from, RhoPair to, std::span<const double> alphas,
                                        const ContinuationOptions& opts) {
  auto at = [&](double t) { return RhoPair{from.rho1 + t * (to.rho1 - from.rho1), from.rho2 + t * (to.rho2 - from.rho2)}; };
  auto ok = [&](double t) {
    const auto m = lambda_membership(at(t), alphas);
    return m.status != LambdaMembership::Status::InLambda && m.margin >= opts.margin * (1.0 + 1e-9);
  };
  if (!ok(0.0) || !ok(1.0)) throw ConfigError("continuation endpoints must keep the margin from the critical set");
  auto edge = [&](double good, double bad) {
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (good + bad);
      (ok(mid) ? good : bad) = mid;
    }
    return good;
  };
  // Admissible sub-intervals of [0, 1].
  const int samples = 4000;
  std::vector<std::pair<double, double>> intervals;
  double open = 0.0;
  bool inside = true;
  for (int i = 1; i <= samples; ++i) {
    const double t = double(i) / samples;
    const bool here = ok(t);
    if (inside && !here) intervals.emplace_back(open, edge(double(i - 1) / samples, t));
    if (!inside && here) open = edge(t, double(i - 1) / samples);
    inside = here;
  }
  intervals.emplace_back(open, 1.0);

  const double len = rho_distance(from, to);
  std::vector<RhoPair> out;
  for (const auto& [a, b] : intervals) {
    const int steps = std::max(1, static_cast<int>(std::ceil(len * (b - a) / opts.max_step - 1e-9)));
    for (int i = 0; i <= steps; ++i) {
      if (b == a && i > 0) break;
      out.push_back(at(a + (b - a) * double(i) / steps));
    }
  }
  validate_path(out, alphas, opts);
  return out;
}

std::vector<SolveReport> continuation(const ProblemData& pd_start, const std::vector<RhoPair>& path,
                                      const Field& u1_init, const Field& u2_init, const ContinuationOptions& opts) {
  validate_path(path, pd_start.alphas(), opts);
  std::vector<SolveReport> out;
  struct Point {
    RhoPair rho;
    Field u1, u2;
  };
  std::vector<Point> history;

  auto predict = [&](RhoPair target) -> std::pair<Field, Field> {
    if (history.empty()) return {u1_init, u2_init};
    const Point& a = history.back();
    if (history.size() < 2) return {a.u1, a.u2};
    const Point& b = history[history.size() - 2];
    const double s = rho_distance(a.rho, target) / std::max(rho_distance(b.rho, a.rho), 1e-300);
    return {a.u1 + s * (a.u1 - b.u1), a.u2 + s * (a.u2 - b.u2)};
  };

  // Solves at `target`; on failure walks there in halved sub-steps from the last converged point.
  std::function<SolveReport(RhoPair, int)> solve_at = [&](RhoPair target, int depth) -> SolveReport {
    const ProblemData pd = pd_start.with_rho(target);
    auto [g1, g2] = predict(target);
    try {
      return newton_el(pd, g1, g2, opts.newton);
    } catch (const ConvergenceError&) {
      if (depth >= 5 || history.empty()) throw;
    }
    const RhoPair from = history.back().rho;
    // Split near the middle, but keep the intermediate point off the critical curves.
    std::optional<RhoPair> split;
    for (double f : {0.5, 0.4, 0.6, 0.3, 0.7}) {
      const RhoPair p{from.rho1 + f * (target.rho1 - from.rho1), from.rho2 + f * (target.rho2 - from.rho2)};
      const auto m = lambda_membership(p, pd_start.alphas());
      if (m.status != LambdaMembership::Status::InLambda && m.margin >= 0.25 * opts.margin) {
        split = p;
        break;
      }
    }
    if (!split) throw ConvergenceError("no sub-step point away from the critical set");
    const RhoPair mid = *split;
    SolveReport half = solve_at(mid, depth + 1);
    history.push_back({mid, half.u1, half.u2});
    SolveReport r = solve_at(target, depth + 1);
    history.pop_back();
    r.notes.push_back("reached through an intermediate point " + rho_text(mid));
    return r;
  };

  for (std::size_t i = 0; i < path.size(); ++i) {
    SolveReport r;
    try {
      r = solve_at(path[i], 0);
    } catch (const SingularJacobianError&) {
      throw;
    } catch (const ConvergenceError& e) {
      const RhoPair last = history.empty() ? path[0] : history.back().rho;
      throw BranchLostError("branch lost between " + rho_text(last) + " and " + rho_text(path[i]) + ": " + e.what(),
                            last.rho1, last.rho2);
    }
    r.method = SolveMethod::Continuation;
    r.trace.insert(r.trace.begin(), {static_cast<int>(i), path[i], r.J_tilde_value, r.residual(), 0.0,
                                     "continuation point " + std::to_string(i)});
    history.push_back({path[i], r.u1, r.u2});
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// k = 1 regime

namespace {

bool nonconstant_density(const SolveReport& r) {
  return r.u1.sup_norm() > 1e-8 || r.u2.sup_norm() > 1e-8;
}

SolveReport k1_attempt(const ProblemData& pd, const K1Options& opts, std::vector<std::string>& log);

SolveReport vortex_homotopy(const ProblemData& pd, const K1Options& opts) {
  const GridPtr& grid = pd.grid_ptr();
  const auto scaled = [&](double t) {
    std::vector<Vortex> v;
    if (t > 0.0) v = pd.vortices();
    for (auto& x : v) x.alpha *= t;
    return desingularize(grid, pd.rho(), pd.h1(), pd.h2(), std::move(v));
  };
  const ProblemData bare = scaled(0.0);
  const auto m = lambda_membership(bare.rho(), bare.alphas());
  if (m.status != LambdaMembership::Status::Region || m.k != 1)
    throw ConvergenceError("without vortices rho " + rho_text(pd.rho()) + " is " + describe(m));
  std::vector<std::string> sub;
  SolveReport r = k1_attempt(bare, opts, sub);
  std::vector<std::string> notes = r.notes;
  Field u1 = r.u1, u2 = r.u2;
  double t = 0.0, dt = 0.25;
  int steps = 0;
  while (t < 1.0) {
    const double next = std::min(1.0, t + dt);
    try {
      r = newton_el(next < 1.0 ? scaled(next) : pd, u1, u2, opts.continuation.newton);
      u1 = r.u1;
      u2 = r.u2;
      t = next;
      dt = std::min(2.0 * dt, 0.25);
      ++steps;
    } catch (const ConvergenceError& e) {
      dt *= 0.5;
      if (dt < 1.0 / 64.0) {
        std::ostringstream os;
        os << "stalled at vortex strength fraction " << t << ": " << e.what();
        throw ConvergenceError(os.str());
      }
    }
  }
  r.method = SolveMethod::Continuation;
  r.tolerance = opts.accept_residual;
  r.success = r.residual() <= opts.accept_residual;
  notes.push_back("vortex strengths switched on in " + std::to_string(steps) + " steps from the vortex-free solution");
  r.notes.insert(r.notes.begin(), notes.begin(), notes.end());
  if (!r.success) throw ConvergenceError("vortex homotopy ended above the acceptance residual");
  return r;
}

SolveReport k1_attempt(const ProblemData& pd, const K1Options& opts, std::vector<std::string>& log) {
  const GridPtr& grid = pd.grid_ptr();
  const RhoPair target = pd.rho();

  // Route 1: continuation from the subcritical region along the ray through rho.
  const double mean = 0.5 * (target.rho1 + target.rho2);
  const RhoPair start{target.rho1 * 6.0 * std::numbers::pi / mean, target.rho2 * 6.0 * std::numbers::pi / mean};
  try {
    const ProblemData pd0 = pd.with_rho(start);
    SolveReport base = minimize_outer(pd0, Field(grid), opts.outer);
    const auto path = admissible_segment(start, target, pd.alphas(), opts.continuation);
    auto branch = continuation(pd0, path, base.u1, base.u2, opts.continuation);
    SolveReport r = std::move(branch.back());
    r.tolerance = opts.accept_residual;
    r.success = r.residual() <= opts.accept_residual;
    for (std::size_t i = 0; i < branch.size(); ++i)
      r.trace.push_back({static_cast<int>(i), branch[i].rho, branch[i].J_tilde_value, branch[i].residual(), 0.0,
                         "branch point"});
    r.notes.push_back("continuation from " + rho_text(start) + " in " + std::to_string(path.size()) + " points");
    if (r.success) return r;
    log.push_back("continuation ended above the acceptance residual");
  } catch (const SingularJacobianError&) {
    throw;
  } catch (const ConvergenceError& e) {
    log.push_back(std::string("continuation failed: ") + e.what());
  }

  // Route 2: solve without the vortices, then switch them on gradually. A
  // branch concentrated away from the vortices does not feel the change.
  if (!pd.vortices().empty()) {
    try {
      return vortex_homotopy(pd, opts);
    } catch (const SingularJacobianError&) {
      throw;
    } catch (const ConvergenceError& e) {
      log.push_back(std::string("vortex homotopy failed: ") + e.what());
    }
  }

  // Route 3: Newton seeded with bubble test fields at the best nodes of tilde_h1 tilde_h2.
  std::vector<std::size_t> order(grid->size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const Field score = pd.log_tilde_h1() + pd.log_tilde_h2();
  std::partial_sort(order.begin(), order.begin() + 1, order.end(),
                    [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  std::vector<SurfacePoint> centers{grid->node(order[0]), grid->canonical({grid->node(order[0]).a + 0.5,
                                                                           grid->node(order[0]).b + 0.5})};
  for (const auto& c : centers) {
    for (double lam : opts.seed_lambdas) {
      if (lam > lambda_max(*grid)) continue;
      try {
        const Field F = bubble_field(grid, {lam, equal_barycenter(*grid, {c})});
        const auto in = inner_minimize(pd, F);
        SolveReport r = newton_el(pd, F - in.G_tilde, F + in.G_tilde, opts.continuation.newton);
        r.tolerance = opts.accept_residual;
        r.success = r.residual() <= opts.accept_residual;
        std::ostringstream os;
        os << "bubble seed at (" << c.a << ", " << c.b << ") with lambda " << lam;
        r.notes.push_back(os.str());
        if (r.success) return r;
      } catch (const SingularJacobianError&) {
        throw;
      } catch (const ConvergenceError& e) {
        log.push_back(std::string("bubble seed failed: ") + e.what());
      }
    }
  }
  throw ConvergenceError("no route produced a solution");
}

}  // namespace

ProblemData perturb_weights(const ProblemData& pd, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  const Field pert = random_field(pd.grid_ptr(), rng, amplitude, eigenvalue_cutoff(pd.grid(), 3));
  std::ostringstream os;
  os << "weights perturbed by a seed-" << seed << " low-frequency field of amplitude " << amplitude
     << " after a singular Jacobian";
  return pd.with_perturbed_weights(pert, os.str());
}

SolveReport find_k1_solution(const ProblemData& pd, const K1Options& opts) {
  const auto m = lambda_membership(pd.rho(), pd.alphas());
  if (m.status != LambdaMembership::Status::Region || m.k != 1)
    throw ConfigError("find_k1_solution needs rho in region k=1; rho " + rho_text(pd.rho()) + " is " + describe(m));
  if (pd.grid().kind() != SurfaceKind::Torus) throw ConfigError("find_k1_solution runs on the torus only");

  const GridPtr& grid = pd.grid_ptr();
  if (residual(pd, Field(grid), Field(grid)).max() <= opts.accept_residual) {
    SolveReport r;
    r.method = SolveMethod::NewtonEL;
    r.tolerance = opts.accept_residual;
    r.F = Field(grid);
    r.G = Field(grid);
    finalize_report(pd, r);
    r.notes.push_back("the constant pair (0, 0) solves the system");
    return r;
  }

  std::vector<std::string> log;
  ProblemData current = pd;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      SolveReport r = k1_attempt(current, opts, log);
      r.notes.insert(r.notes.end(), log.begin(), log.end());
      if (attempt > 0) {
        r.notes.insert(r.notes.end(), current.warnings().begin(), current.warnings().end());
        r.perturbed_problem = std::make_shared<const ProblemData>(current);
      }
      if (!nonconstant_density(r)) r.notes.push_back("solution has constant density");
      return r;
    } catch (const SingularJacobianError& e) {
      log.push_back(e.what());
      if (attempt > 0) break;
      current = perturb_weights(current, opts.perturbation_seed, opts.perturbation_amplitude);
    } catch (const ConvergenceError& e) {
      log.push_back(e.what());
      break;
    }
  }
  std::ostringstream os;
  os << "no k=1 solution found numerically for rho " << rho_text(pd.rho())
     << " (a numerical failure, not evidence against existence):";
  for (const auto& l : log) os << "\n  " << l;
  throw ConvergenceError(os.str());
}

}  // namespace lcs
