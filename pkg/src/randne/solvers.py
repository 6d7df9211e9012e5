"""The four solution paths for min ||b - A x||.

qr:   x = R^{-1} (Q'b) from the thin QR of A (accuracy baseline).
ne:   plain normal equations, Cholesky of A'A; expected to fail once
      kappa(A)^2 eps is O(1), i.e. kappa beyond ~1e8.
pne:  preconditioned normal equations, the two-step scheme
      (A_p'A_p) y = A_p'b, then R_s x = y.
hpne: half-preconditioned normal equations, the nonsymmetric system
      (A_p'A) x = A_p'b solved by LU with partial pivoting.

Solvers accept optional precomputed pieces (thin QR, A_p, Gram matrices,
norms) so a residual sweep can reuse seed-level work; passing nothing gives
the self-contained behavior.
"""

from dataclasses import dataclass

import numpy as np

from . import precondition
from .errors import NumericalError, ZeroSolution
from .linalg import (
    cholesky_solve,
    lu_solve,
    solve_upper_triangular,
    spectral_norm_est,
    thin_qr,
)

METHODS = ("qr", "ne", "pne", "hpne")


@dataclass(frozen=True)
class SolveReport:
    method: str
    x_hat: np.ndarray
    y_hat: np.ndarray | None
    rel_error: float  # ||x_hat - x*|| / ||x_hat||
    rel_residual: float  # ||b - A x_hat|| / (||A|| ||x_hat||)
    rel_residual_precond: float | None  # ||b - A_p y_hat|| / (||A_p|| ||y_hat||)


def _symmetrize(g):
    # scrub the rounding asymmetry of a computed Gram matrix
    return 0.5 * (g + g.T)


def _finish(method, p, x_hat, norm_a, y_hat=None, ap=None, norm_ap=None):
    x_hat = np.asarray(x_hat, dtype=float).ravel()
    if not np.all(np.isfinite(x_hat)):
        raise NumericalError("%s: non-finite solution" % method)
    nx = np.linalg.norm(x_hat)
    if nx == 0.0:
        raise ZeroSolution("%s: computed solution is exactly zero" % method)
    if norm_a is None:
        norm_a = spectral_norm_est(p.a)
    rel_error = float(np.linalg.norm(x_hat - p.x_star) / nx)
    rel_residual = float(np.linalg.norm(p.b - p.a @ x_hat) / (norm_a * nx))
    rel_residual_precond = None
    if y_hat is not None and ap is not None:
        ny = np.linalg.norm(y_hat)
        if ny == 0.0:
            raise ZeroSolution("%s: intermediate solution is exactly zero" % method)
        if norm_ap is None:
            norm_ap = spectral_norm_est(ap)
        rel_residual_precond = float(
            np.linalg.norm(p.b - ap @ y_hat) / (norm_ap * ny)
        )
    return SolveReport(
        method=method,
        x_hat=x_hat,
        y_hat=None if y_hat is None else np.asarray(y_hat, dtype=float).ravel(),
        rel_error=rel_error,
        rel_residual=rel_residual,
        rel_residual_precond=rel_residual_precond,
    )


def solve_qr(p, qr=None, norm_a=None):
    """Baseline: thin QR of A, then back substitution."""
    if qr is None:
        qr = thin_qr(p.a)
    x = solve_upper_triangular(qr.r, qr.q.T @ p.b)
    return _finish("qr", p, x, norm_a)


def solve_normal(p, gram=None, norm_a=None):
    """Plain normal equations; raises NotPositiveDefinite at large kappa."""
    if gram is None:
        gram = _symmetrize(p.a.T @ p.a)
    x = cholesky_solve(gram, p.a.T @ p.b)
    return _finish("ne", p, x, norm_a)


def solve_pne(p, pc, ap=None, gram=None, norm_a=None, norm_ap=None):
    """Two-step preconditioned normal equations (Cholesky + back solve)."""
    if ap is None:
        ap = precondition.apply(p.a, pc)
    if gram is None:
        gram = _symmetrize(ap.T @ ap)
    y = cholesky_solve(gram, ap.T @ p.b)
    x = solve_upper_triangular(pc.r_s, y)
    return _finish("pne", p, x, norm_a, y_hat=y, ap=ap, norm_ap=norm_ap)


def solve_hpne(p, pc, ap=None, gram=None, norm_a=None):
    """Half-preconditioned normal equations via LU with partial pivoting."""
    if ap is None:
        ap = precondition.apply(p.a, pc)
    if gram is None:
        gram = ap.T @ p.a
    x = lu_solve(gram, ap.T @ p.b)
    return _finish("hpne", p, x, norm_a)
