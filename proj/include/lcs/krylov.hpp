#pragma once

// Preconditioned Krylov solvers on plain vectors with a caller-supplied inner
// product (the quadrature inner product for fields).

#include <functional>
#include <vector>

namespace lcs {

using Vec = std::vector<double>;
using LinearOp = std::function<Vec(const Vec&)>;
using InnerProduct = std::function<double(const Vec&, const Vec&)>;

struct KrylovResult {
  Vec x;
  int iterations = 0;
  /// Final residual norm relative to the norm of b.
  double relative_residual = 0.0;
  bool converged = false;
  /// CG met a direction with non-positive curvature.
  bool breakdown = false;
  /// GMRES only: ratio of extreme diagonal entries of the triangular factor
  /// of the Hessenberg matrix, a lower estimate of cond(A M).
  double condition_estimate = 1.0;
};

/// Preconditioned conjugate gradients for a self-adjoint positive operator.
KrylovResult conjugate_gradient(const LinearOp& A, const Vec& b, const LinearOp& precond, const InnerProduct& dot,
                                double rel_tol, int max_iter);

/// Right-preconditioned GMRES without restarts: solves A M y = b, returns x = M y.
KrylovResult gmres(const LinearOp& A, const Vec& b, const LinearOp& precond, const InnerProduct& dot, double rel_tol,
                   int max_iter);

}  // namespace lcs
