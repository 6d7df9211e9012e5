"""Randomized smoothing transform and row sampling.

The sketch operator is S * F * D: a diagonal of random signs D, the
orthonormal DCT-2 F (which mixes every row into every other row), and a
uniform with-replacement row sampler S scaled by sqrt(m/c) so that
E[S'S] = I.  Also here: coherence of an orthonormal basis under a fresh
draw of F*D, and the sample-count formula that turns a target (epsilon,
delta) guarantee into a concrete c.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import NotOrthonormal


def dct2_apply(x):
    """Multiply by the orthonormal DCT-2 matrix along axis 0.

    The textbook DCT-2 entries sqrt(2/m)*cos(pi*(2j+1)*k/(2m)) give a first
    row of norm sqrt(2); the orthonormal convention rescales that row by
    1/sqrt(2), which is what makes the transform orthogonal.  The O(m log m)
    FFT-based path below is exactly that orthonormal matrix; the unit tests
    check it against a naive precomputed cosine table.
    """
    x = np.asarray(x, dtype=float)
    return scipy.fft.dct(x, type=2, axis=0, norm="ortho")


def random_sign_diagonal(m, rng):
    """m independent +-1 entries (the diagonal of D)."""
    if m < 1:
        raise ValueError("random_sign_diagonal: m must be >= 1")
    return rng.gen.integers(0, 2, size=m).astype(float) * 2.0 - 1.0


@dataclass(frozen=True)
class SampleSet:
    """c row indices drawn uniformly with replacement from range(m)."""

    m: int
    c: int
    indices: np.ndarray  # 0-based, duplicates allowed
    scale: float  # sqrt(m/c)


def sample_rows(m, c, rng):
    if m < 1 or c < 1:
        raise ValueError("sample_rows: need m >= 1 and c >= 1")
    indices = rng.gen.integers(0, m, size=c)
    return SampleSet(m=m, c=c, indices=indices, scale=math.sqrt(m / c))


def apply_sketch(a, d_signs, sample):
    """Deterministic core of the sketch: scale * (F @ (D @ a))[indices].

    Split out from smooth_and_sample so a stored (d_signs, sample) pair can
    be replayed exactly against other matrices (e.g. an orthonormal basis of
    the same column space).
    """
    a = np.asarray(a, dtype=float)
    fa = dct2_apply(d_signs[:, None] * a)
    return fa[sample.indices] * sample.scale


def smooth_and_sample(a, c, rng):
    """Draw D then S from rng and return the c x n sketch S*F*D*a."""
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    d = random_sign_diagonal(m, rng)
    sample = sample_rows(m, c, rng)
    return apply_sketch(a, d, sample)


def coherence(q, rng):
    """Coherence mu = max_i ||e_i' F D q||^2 for a fresh draw of F*D.

    q must have orthonormal columns; the result always lies in [n/m, 1]
    because the rows of an orthonormal-column matrix have squared norms
    summing to n.
    """
    q = np.asarray(q, dtype=float)
    m, n = q.shape
    gram_err = np.linalg.norm(q.T @ q - np.eye(n), 2)
    if gram_err > 1e-8:
        raise NotOrthonormal(
            "coherence: ||q'q - I|| = %.3e exceeds 1e-8" % gram_err
        )
    d = random_sign_diagonal(m, rng)
    fq = dct2_apply(d[:, None] * q)
    return float(np.max(np.einsum("ij,ij->i", fq, fq)))


def sample_count(m, n, mu, epsilon, delta):
    """Smallest c with 2*m*mu*(1+eps/3)*ln(n/delta)/eps^2 <= c, floored at n."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("sample_count: epsilon must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("sample_count: delta must lie in (0, 1)")
    if not (n / m) <= mu <= 1.0 + 1e-12:
        raise ValueError("sample_count: mu must lie in [n/m, 1]")
    c = 2.0 * m * mu * (1.0 + epsilon / 3.0) * math.log(n / delta) / epsilon**2
    return max(n, math.ceil(c))
