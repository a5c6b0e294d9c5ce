#include "lcs/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lcs {
namespace {

void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

KrylovResult conjugate_gradient(const LinearOp& A, const Vec& b, const LinearOp& precond, const InnerProduct& dot,
                                double rel_tol, int max_iter) {
  KrylovResult out;
  out.x.assign(b.size(), 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Vec r = b;
  Vec z = precond(r);
  Vec p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    const Vec Ap = A(p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      out.breakdown = true;
      break;
    }
    const double alpha = rz / pAp;
    axpy(alpha, p, out.x);
    axpy(-alpha, Ap, r);
    out.iterations = it;
    out.relative_residual = std::sqrt(dot(r, r)) / bnorm;
    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      break;
    }
    z = precond(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return out;
}

KrylovResult gmres(const LinearOp& A, const Vec& b, const LinearOp& precond, const InnerProduct& dot, double rel_tol,
                   int max_iter) {
  KrylovResult out;
  out.x.assign(b.size(), 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const int m = std::max(1, max_iter);
  std::vector<Vec> V;
  V.reserve(m + 1);
  V.push_back(b);
  for (double& v : V[0]) v /= bnorm;
  // H is stored column-wise, each column of length j + 2.
  std::vector<std::vector<double>> H;
  std::vector<double> cs, sn, g{bnorm};
  int k = 0;
  for (; k < m; ++k) {
    Vec w = A(precond(V[k]));
    std::vector<double> h(k + 2, 0.0);
    for (int i = 0; i <= k; ++i) {
      h[i] = dot(w, V[i]);
      axpy(-h[i], V[i], w);
    }
    // One re-orthogonalisation pass keeps the basis orthogonal in long runs.
    for (int i = 0; i <= k; ++i) {
      const double c = dot(w, V[i]);
      h[i] += c;
      axpy(-c, V[i], w);
    }
    h[k + 1] = std::sqrt(dot(w, w));
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double r = std::hypot(h[k], h[k + 1]);
    const double c = r == 0.0 ? 1.0 : h[k] / r;
    const double s = r == 0.0 ? 0.0 : h[k + 1] / r;
    cs.push_back(c);
    sn.push_back(s);
    h[k] = r;
    h[k + 1] = 0.0;
    g.push_back(-s * g[k]);
    g[k] *= c;
    const double beta = std::sqrt(dot(w, w));
    H.push_back(std::move(h));
    out.iterations = k + 1;
    out.relative_residual = std::abs(g[k + 1]) / bnorm;
    if (out.relative_residual <= rel_tol || beta == 0.0) {
      out.converged = out.relative_residual <= rel_tol;
      ++k;
      break;
    }
    for (double& v : w) v /= beta;
    V.push_back(std::move(w));
  }
  // Back substitution on the triangular factor.
  std::vector<double> y(k, 0.0);
  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (int i = k - 1; i >= 0; --i) {
    double s = g[i];
    for (int j = i + 1; j < k; ++j) s -= H[j][i] * y[j];
    const double d = H[i][i];
    dmax = std::max(dmax, std::abs(d));
    dmin = std::min(dmin, std::abs(d));
    y[i] = d == 0.0 ? 0.0 : s / d;
  }
  out.condition_estimate = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
  Vec My(b.size(), 0.0);
  for (int i = 0; i < k; ++i) axpy(y[i], V[i], My);
  out.x = precond(My);
  return out;
}

}  // namespace lcs
