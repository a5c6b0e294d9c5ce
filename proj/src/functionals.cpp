#include "lcs/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lcs/error.hpp"
#include "lcs/krylov.hpp"

namespace lcs {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Field project(const Field& f) { return {f.grid_ptr(), f.grid().project(f.values())}; }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

// Everything the Newton iteration needs at one G.
struct InnerPoint {
  Field G;
  double value = 0.0;
  Field grad;
  double grad_norm = 0.0;
  Field nu1, nu2;
  double roundoff = 0.0;
};

InnerPoint evaluate_inner(const ProblemData& pd, const Field& F, Field G) {
  InnerPoint p;
  const auto l2 = log_integral_density(pd.log_tilde_h2(), F + G);
  const auto l1 = log_integral_density(pd.log_tilde_h1(), F - G);
  const RhoPair rho = pd.rho();
  p.value = dirichlet(G) + rho.rho2 * l2.value + rho.rho1 * l1.value;
  check_finite(p.value, "I_rho");
  Field lap2 = 2.0 * neg_laplacian(G);
  Field mass = rho.rho2 * l2.density - rho.rho1 * l1.density;
  const Field pm = project(mass);
  p.grad = lap2 + pm;
  p.grad_norm = dual_norm(p.grad);
  p.roundoff = 1e3 * kEps *
               (dual_norm(lap2) + rho.rho2 * dual_norm(project(l2.density)) + rho.rho1 * dual_norm(project(l1.density)));
  p.G = std::move(G);
  p.nu1 = l1.density;
  p.nu2 = l2.density;
  return p;
}

}  // namespace

double log_integral(const Field& log_weight, const Field& u) { return log_integral_density(log_weight, u).value; }

LogIntegral log_integral_density(const Field& log_weight, const Field& u) {
  const auto& g = u.grid();
  const std::size_t n = g.size();
  Field e = log_weight + u;
  const double m = e.max();
  if (!std::isfinite(m)) throw NumericalError("log integral: non-finite exponent");
  for (std::size_t k = 0; k < n; ++k) e[k] = std::exp(e[k] - m);
  const double s = g.integrate(e.values());
  LogIntegral out;
  out.value = m + std::log(s);
  for (std::size_t k = 0; k < n; ++k) e[k] /= s;
  out.density = std::move(e);
  return out;
}

double J_full(const ProblemData& pd, const Field& u1, const Field& u2) {
  const double v = gradient_pairing(u1, u2) - pd.rho().rho2 * log_integral(pd.log_tilde_h2(), u2) -
                   pd.rho().rho1 * log_integral(pd.log_tilde_h1(), u1);
  check_finite(v, "J");
  return v;
}

double I_rho(const ProblemData& pd, const Field& F, const Field& G) {
  const double v = dirichlet(G) + pd.rho().rho2 * log_integral(pd.log_tilde_h2(), F + G) +
                   pd.rho().rho1 * log_integral(pd.log_tilde_h1(), F - G);
  check_finite(v, "I_rho");
  return v;
}

double J_fg(const ProblemData& pd, const Field& F, const Field& G) { return dirichlet(F) - I_rho(pd, F, G); }

Field I_gradient(const ProblemData& pd, const Field& F, const Field& G) { return evaluate_inner(pd, F, G).grad; }

InnerHessian::InnerHessian(const ProblemData& pd, const Field& F, const Field& G)
    : pd_(&pd),
      nu1_(log_integral_density(pd.log_tilde_h1(), F - G).density),
      nu2_(log_integral_density(pd.log_tilde_h2(), F + G).density) {}

std::vector<double> InnerHessian::apply(const std::vector<double>& phi) const {
  const auto& g = nu1_.grid();
  const auto w = g.weights();
  const std::size_t n = g.size();
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    m1 += w[k] * nu1_[k] * phi[k];
    m2 += w[k] * nu2_[k] * phi[k];
  }
  const double r1 = pd_->rho().rho1, r2 = pd_->rho().rho2;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = r2 * nu2_[k] * (phi[k] - m2) + r1 * nu1_[k] * (phi[k] - m1);
  v = g.project(v);
  const auto lap = g.neg_laplacian(phi);
  for (std::size_t k = 0; k < n; ++k) v[k] += 2.0 * lap[k];
  return v;
}

Field InnerHessian::apply(const Field& phi) const {
  return {phi.grid_ptr(), apply(std::vector<double>(phi.values().begin(), phi.values().end()))};
}

double InnerHessian::quadratic_form(const Field& phi) const { return inner(phi, apply(phi)); }

InnerSolveResult inner_minimize(const ProblemData& pd, const Field& F, const Field* init, const InnerOptions& opts) {
  const GridPtr& grid = pd.grid_ptr();
  if (F.grid_ptr() != grid) throw ContractViolation("inner_minimize: F lives on another grid");
  if (!grid->is_mean_zero(F.values())) throw ContractViolation("inner_minimize: F must be mean-zero");
  Field G0 = init ? project(*init) : Field(grid);
  InnerPoint cur = evaluate_inner(pd, F, std::move(G0));

  const double shift = pd.rho().rho1 + pd.rho().rho2;
  const LinearOp precond = [&](const Vec& r) {
    return grid->spectral_apply(r, [shift](double mu) { return mu > 0.0 ? 1.0 / (2.0 * mu + shift) : 0.0; });
  };
  const InnerProduct dot = [&](const Vec& a, const Vec& b) { return grid->inner(a, b); };

  InnerSolveResult out;
  for (int it = 0;; ++it) {
    if (cur.grad_norm <= opts.tolerance) break;
    if (it >= opts.max_newton) {
      std::ostringstream os;
      os << "inner minimisation: " << opts.max_newton << " Newton steps without reaching gradient norm "
         << opts.tolerance << " (last " << cur.grad_norm << ")";
      throw ConvergenceError(os.str());
    }
    const InnerHessian hess(pd, F, cur.G);
    const LinearOp A = [&](const Vec& x) { return hess.apply(x); };
    Vec rhs(cur.grad.values().begin(), cur.grad.values().end());
    for (double& v : rhs) v = -v;
    const double eta = std::clamp(std::sqrt(cur.grad_norm), 1e-12, 0.25);
    auto cg = conjugate_gradient(A, rhs, precond, dot, eta, opts.max_cg);
    out.cg_iterations += cg.iterations;
    Field step(grid, std::move(cg.x));
    double slope = inner(cur.grad, step);
    if (!(slope < 0.0)) {
      step = Field(grid, precond(rhs));
      slope = inner(cur.grad, step);
    }

    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60 && !accepted; ++ls, t *= 0.5) {
      Field trial = cur.G;
      trial.axpy(t, step);
      InnerPoint next = evaluate_inner(pd, F, std::move(trial));
      const bool armijo = next.value <= cur.value + 1e-4 * t * slope;
      // Once value differences sink below round-off, progress is judged by the gradient.
      const bool flat = std::abs(next.value - cur.value) <= 1e3 * kEps * (std::abs(cur.value) + shift) &&
                        next.grad_norm < cur.grad_norm;
      if (armijo || flat) {
        cur = std::move(next);
        accepted = true;
      }
    }
    out.iterations = it + 1;
    if (!accepted) {
      if (cur.grad_norm <= std::max(opts.tolerance, cur.roundoff)) {
        out.at_roundoff_floor = true;
        break;
      }
      std::ostringstream os;
      os << "inner minimisation stalled at gradient norm " << cur.grad_norm << " after " << out.iterations
         << " Newton steps";
      throw ConvergenceError(os.str());
    }
  }
  out.G_tilde = std::move(cur.G);
  out.inner_value = cur.value;
  out.grad_norm = cur.grad_norm;
  return out;
}

Field envelope_gradient(const ProblemData& pd, const Field& F, const Field& G_tilde) {
  const auto l2 = log_integral_density(pd.log_tilde_h2(), F + G_tilde);
  const auto l1 = log_integral_density(pd.log_tilde_h1(), F - G_tilde);
  Field mass = pd.rho().rho2 * l2.density + pd.rho().rho1 * l1.density;
  return 2.0 * neg_laplacian(F) - project(mass);
}

ConstrainedValue J_tilde(const ProblemData& pd, const Field& F, const Field* warm, const InnerOptions& opts) {
  ConstrainedValue out;
  out.inner = inner_minimize(pd, F, warm, opts);
  out.value = dirichlet(F) - out.inner.inner_value;
  out.gradient = envelope_gradient(pd, F, out.inner.G_tilde);
  return out;
}

double holder_chain_check(const ProblemData& pd, const Field& F, const Field& G) {
  const Field& lh = pd.log_hat_h();
  return log_integral(lh, F + G) + log_integral(lh, F - G) - 2.0 * log_integral(lh, F);
}

EstimateDefects estimate_defects(const ProblemData& pd, const Field& F, double J_tilde_value) {
  const double r1 = pd.rho().rho1, r2 = pd.rho().rho2;
  const double rmin = std::min(r1, r2), rmax = std::max(r1, r2);
  Field log_h1 = pd.h1(), log_h2 = pd.h2();
  for (double& v : log_h1.values()) v = std::log(v);
  for (double& v : log_h2.values()) v = std::log(v);
  const double D = dirichlet(F);
  const double L = log_integral(pd.log_hat_h(), F);

  EstimateDefects out;
  out.lower_defect = D - (r1 + r2) * L - J_tilde_value;
  out.lower_constant = r1 * log_h1.max() + r2 * log_h2.max();
  out.upper_defect = J_tilde_value - D + 2.0 * rmin * L;
  const double int_log_hmax = integrate(r1 >= r2 ? log_h1 : log_h2);
  out.upper_constant = -rmin * (log_h1.min() + log_h2.min()) - (rmax - rmin) * int_log_hmax;
  return out;
}

}  // namespace lcs
