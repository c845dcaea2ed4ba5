"""Matrix-free preconditioned conjugate gradients.

Used for the symmetric positive definite systems produced by the implicit
time stepper and by the embedding-constant estimator.  All inner products
go through the deterministic pairwise reduction, so solves are
bit-reproducible.
"""

import math

import numpy as np

from parabolab.errors import SolverError
from parabolab.reductions import pairwise_sum


def conjugate_gradient(apply_op, b, diag, x0, tol, max_iters):
    """Solve ``apply_op(x) = b`` for SPD ``apply_op`` with Jacobi preconditioning.

    ``diag`` is the operator diagonal (or any SPD approximation of it),
    ``x0`` the initial guess.  Convergence criterion: two-norm of the
    residual relative to ``|b|_2 <= tol``.  Returns ``(x, rel_residual,
    iterations)``.  Raises :class:`SolverError` carrying the last relative
    residual if ``max_iters`` is exhausted, or if the operator reveals a
    non-positive curvature direction (not SPD).
    """
    b = np.asarray(b, dtype=np.float64)
    bnorm = math.sqrt(pairwise_sum(b * b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = np.array(x0, dtype=np.float64, copy=True)
    r = b - apply_op(x)
    rel = math.sqrt(pairwise_sum(r * r)) / bnorm
    if rel <= tol:
        return x, rel, 0
    z = r / diag
    p = z.copy()
    rz = pairwise_sum(r * z)
    for iteration in range(1, int(max_iters) + 1):
        Ap = apply_op(p)
        pAp = pairwise_sum(p * Ap)
        if pAp <= 0.0:
            raise SolverError(
                f"operator is not positive definite along a search direction (p^T A p = {pAp:.3e})",
                residual=rel)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rel = math.sqrt(pairwise_sum(r * r)) / bnorm
        if rel <= tol:
            return x, rel, iteration
        z = r / diag
        rz_next = pairwise_sum(r * z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise SolverError(
        f"conjugate gradients stalled at relative residual {rel:.3e} "
        f"after {int(max_iters)} iterations (tol {tol:.1e})",
        residual=rel)
