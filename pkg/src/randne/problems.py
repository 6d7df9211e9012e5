"""Synthetic least squares problems with exact known geometry.

A problem is built as A = Q1 * R from a Haar orthonormal basis Q1 and an
upper triangular R with prescribed condition number and unit spectral norm,
a random unit solution x*, and a residual of prescribed norm eta_r drawn
orthogonal to range(A).  Then b = A x* + residual makes x* the exact
minimizer with ||A|| = ||x*|| = 1, so absolute and relative quantities
coincide by construction.

ProblemFamily fixes everything drawn from the seed except the residual
*norm*, so a sweep over eta_r reuses one A (and one preconditioner) per
seed; generate() is the one-shot convenience wrapper.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import mtx
from .errors import DegenerateResidual, IOFailure
from .linalg import thin_qr
from .rng import make_rng

RESAMPLE_ATTEMPTS = 8


@dataclass(frozen=True)
class LeastSquaresProblem:
    a: np.ndarray  # m x n, ||a||_2 = 1, cond2(a) = kappa_target
    b: np.ndarray  # m
    x_star: np.ndarray  # n, unit norm, the exact minimizer
    residual: np.ndarray  # m, b - a @ x_star, orthogonal to range(a)
    kappa_target: float
    eta_r: float
    seed: int

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]


def haar_orthogonal(m, n, rng):
    """m x n matrix with orthonormal columns, Haar (rotation-invariant) law.

    QR of a standard Gaussian matrix; the sign fix on R's diagonal inside
    thin_qr is what makes the distribution exactly Haar.
    """
    if m < n or n < 1:
        raise ValueError("haar_orthogonal: need m >= n >= 1")
    g = rng.gen.standard_normal((m, n))
    return thin_qr(g).q


def triangular_with_cond(n, kappa, rng):
    """Upper triangular n x n matrix with sigma_1 = 1 and cond2 = kappa.

    Singular value profile: geometric, sigma_j = kappa**(-(j-1)/(n-1)).
    The extreme singular values are *decoupled*: the first column/row and
    last column carry exactly sigma_1 = 1 and sigma_n = 1/kappa (those
    columns are orthogonal to the rest by construction), while the interior
    profile lives in a dense (n-2)^2 block obtained by retriangularizing
    U diag(sigma) V' with Haar U, V.  Decoupling pins the condition number
    to kappa exactly in floating point, which the experiments at
    kappa = 1e8..1e12 rely on; a fully dense retriangularization would blur
    sigma_n by a few ulps of sigma_1 and lose all relative accuracy there.
    """
    if n < 1:
        raise ValueError("triangular_with_cond: n must be >= 1")
    if kappa < 1.0:
        raise ValueError("triangular_with_cond: kappa must be >= 1")
    if n == 1:
        if kappa != 1.0:
            raise ValueError("triangular_with_cond: n = 1 forces kappa = 1")
        return np.eye(1)
    if kappa == 1.0:
        # all singular values equal 1 and the sign fix forces +1 diagonal,
        # so the unique such triangular matrix is the identity
        return np.eye(n)
    r = np.zeros((n, n))
    r[0, 0] = 1.0
    r[n - 1, n - 1] = 1.0 / kappa
    k = n - 2
    if k > 0:
        exponents = -np.arange(1, k + 1) / (n - 1)
        sigma = kappa**exponents
        u = haar_orthogonal(k, k, rng)
        v = haar_orthogonal(k, k, rng)
        core = (u * sigma) @ v.T
        r[1 : n - 1, 1 : n - 1] = thin_qr(core).r
    return r


class ProblemFamily:
    """All seed-dependent parts of a problem, shared across an eta_r sweep."""

    def __init__(self, m, n, kappa, seed):
        if not m > n >= 1:
            raise ValueError("ProblemFamily: need m > n >= 1")
        if kappa < 1.0:
            raise ValueError("ProblemFamily: kappa must be >= 1")
        self.m = int(m)
        self.n = int(n)
        self.kappa = float(kappa)
        self.seed = int(seed)
        rng = make_rng(seed)
        self.q1 = haar_orthogonal(self.m, self.n, rng)
        self.r = triangular_with_cond(self.n, self.kappa, rng)
        self.a = self.q1 @ self.r
        x = rng.gen.standard_normal(self.n)
        self.x_star = x / np.linalg.norm(x)
        self.residual_direction = self._draw_orthogonal_direction(rng)

    def _draw_orthogonal_direction(self, rng):
        # project a Gaussian onto range(A)-perp without forming Q2:
        # (I - Q1 Q1') g, resampling in the (measure-zero) degenerate case
        for _ in range(RESAMPLE_ATTEMPTS):
            g = rng.gen.standard_normal(self.m)
            proj = g - self.q1 @ (self.q1.T @ g)
            norm = np.linalg.norm(proj)
            if norm > 1e-150:
                return proj / norm
        raise DegenerateResidual(
            "could not draw a direction orthogonal to range(a) in %d attempts"
            % RESAMPLE_ATTEMPTS
        )

    def problem(self, eta_r):
        if eta_r < 0.0:
            raise ValueError("eta_r must be >= 0")
        if eta_r == 0.0:
            residual = np.zeros(self.m)
        else:
            residual = eta_r * self.residual_direction
        b = self.a @ self.x_star + residual
        return LeastSquaresProblem(
            a=self.a,
            b=b,
            x_star=self.x_star,
            residual=residual,
            kappa_target=self.kappa,
            eta_r=float(eta_r),
            seed=self.seed,
        )


def generate(m, n, kappa, eta_r, seed):
    """One-shot problem construction (see ProblemFamily for sweeps)."""
    return ProblemFamily(m, n, kappa, seed).problem(eta_r)


def save_problem(p, directory):
    """Write a.mtx, b.mtx, xstar.mtx, residual.mtx and a JSON sidecar."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise IOFailure("save_problem: %s" % exc) from exc
    mtx.write_matrix(os.path.join(directory, "a.mtx"), p.a)
    mtx.write_matrix(os.path.join(directory, "b.mtx"), p.b)
    mtx.write_matrix(os.path.join(directory, "xstar.mtx"), p.x_star)
    mtx.write_matrix(os.path.join(directory, "residual.mtx"), p.residual)
    meta = {
        "m": p.m,
        "n": p.n,
        "kappa": p.kappa_target,
        "eta_r": p.eta_r,
        "seed": p.seed,
    }
    try:
        with open(os.path.join(directory, "problem.json"), "w") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IOFailure("save_problem: %s" % exc) from exc


def load_problem(directory):
    """Inverse of save_problem; bit-exact thanks to repr round-tripping."""
    path = os.path.join(directory, "problem.json")
    try:
        with open(path) as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise IOFailure("load_problem: %s" % exc) from exc
    except json.JSONDecodeError as exc:
        raise IOFailure("load_problem: %s: %s" % (path, exc)) from exc
    try:
        m, n = int(meta["m"]), int(meta["n"])
        kappa = float(meta["kappa"])
        eta_r = float(meta["eta_r"])
        seed = int(meta["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IOFailure("load_problem: %s: bad metadata (%s)" % (path, exc)) from exc
    a = mtx.read_matrix(os.path.join(directory, "a.mtx"))
    b = mtx.read_matrix(os.path.join(directory, "b.mtx")).ravel()
    x_star = mtx.read_matrix(os.path.join(directory, "xstar.mtx")).ravel()
    residual = mtx.read_matrix(os.path.join(directory, "residual.mtx")).ravel()
    if a.shape != (m, n) or b.shape != (m,) or x_star.shape != (n,):
        raise IOFailure("load_problem: %s: shapes disagree with metadata" % directory)
    if residual.shape != (m,):
        raise IOFailure("load_problem: %s: residual has wrong length" % directory)
    return LeastSquaresProblem(
        a=a,
        b=b,
        x_star=x_star,
        residual=residual,
        kappa_target=kappa,
        eta_r=eta_r,
        seed=seed,
    )
