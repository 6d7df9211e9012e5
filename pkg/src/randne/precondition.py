"""Randomized triangular preconditioner.

Sketch c rows of the smoothed matrix, take the R factor of the sketch's thin
QR, and precondition A from the right: A_p = A R_s^{-1}.  When the sketch
captures the column geometry of A (which the sampling theory makes highly
likely at c = 3n), kappa(A_p) is a small constant regardless of kappa(A).
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import mtx
from .errors import IOFailure, RankDeficientSketch, SingularTriangular
from .linalg import EPS, SINGULAR_FLOOR, spectral_norm_est, thin_qr
from .rng import make_rng
from .sketch import SampleSet, apply_sketch, random_sign_diagonal, sample_rows


@dataclass(frozen=True)
class Preconditioner:
    r_s: np.ndarray  # n x n upper triangular sketch R factor
    c: int
    sample: SampleSet
    seed: int
    # Sign diagonal actually used by the sketch.  Kept in memory so identity
    # checks can replay the exact transform; not serialized (the JSON sidecar
    # stores the seed, and loading replays the draws to recover it).
    d_signs: np.ndarray | None = None


def build(a, c, rng):
    """Build the preconditioner from a fresh rng (Algorithm: sketch + QR).

    Draw order is sign diagonal first, then sample indices, matching
    smooth_and_sample, so the stored seed replays the exact sketch.
    """
    a = np.asarray(a, dtype=float)
    m, n = a.shape
    if c < n:
        raise ValueError("build: need c >= n")
    d = random_sign_diagonal(m, rng)
    sample = sample_rows(m, c, rng)
    a_s = apply_sketch(a, d, sample)
    r_s = thin_qr(a_s).r
    min_diag = np.abs(np.diagonal(r_s)).min()
    if min_diag <= n * EPS * spectral_norm_est(a_s):
        raise RankDeficientSketch(
            "sketch lost rank (min |R_s diag| = %.3e); resample with a new "
            "seed or a larger c" % min_diag
        )
    return Preconditioner(r_s=r_s, c=int(c), sample=sample, seed=rng.seed, d_signs=d)


def apply(a, p):
    """A_p = A R_s^{-1}, computed as the triangular solve R_s' X' = A'."""
    a = np.asarray(a, dtype=float)
    d = np.abs(np.diagonal(p.r_s))
    if d.size == 0 or d.min() < SINGULAR_FLOOR:
        raise SingularTriangular("apply: R_s diagonal entry below %.0e" % SINGULAR_FLOOR)
    return scipy.linalg.solve_triangular(p.r_s, a.T, trans="T", lower=False).T


def identity_preconditioner(n):
    """R_s = I, c = n: a degenerate preconditioner that leaves A unchanged."""
    sample = SampleSet(m=n, c=n, indices=np.arange(n), scale=1.0)
    return Preconditioner(r_s=np.eye(n), c=n, sample=sample, seed=0, d_signs=None)


def save_preconditioner(p, directory):
    """Write r_s.mtx plus a JSON sidecar {c, seed, indices}."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as exc:
        raise IOFailure("save_preconditioner: %s" % exc) from exc
    mtx.write_matrix(os.path.join(directory, "r_s.mtx"), p.r_s)
    meta = {
        "c": p.c,
        "seed": p.seed,
        "indices": [int(i) for i in p.sample.indices],
    }
    try:
        with open(os.path.join(directory, "precond.json"), "w") as fh:
            json.dump(meta, fh)
            fh.write("\n")
    except OSError as exc:
        raise IOFailure("save_preconditioner: %s" % exc) from exc


def load_preconditioner(directory, m):
    """Reload a preconditioner for a problem with m rows.

    Replays the stored seed to recover the sign diagonal; if the replayed
    sample indices disagree with the stored ones (the builder was handed a
    non-fresh rng), d_signs is left unset and replay-dependent checks will
    refuse to run rather than use a wrong transform.
    """
    path = os.path.join(directory, "precond.json")
    try:
        with open(path) as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise IOFailure("load_preconditioner: %s" % exc) from exc
    except json.JSONDecodeError as exc:
        raise IOFailure("load_preconditioner: %s: %s" % (path, exc)) from exc
    try:
        c = int(meta["c"])
        seed = int(meta["seed"])
        indices = np.array([int(i) for i in meta["indices"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise IOFailure(
            "load_preconditioner: %s: bad metadata (%s)" % (path, exc)
        ) from exc
    if indices.shape != (c,):
        raise IOFailure("load_preconditioner: %s: %d indices for c = %d"
                        % (path, indices.size, c))
    r_s = mtx.read_matrix(os.path.join(directory, "r_s.mtx"))
    sample = SampleSet(m=int(m), c=c, indices=indices, scale=float(np.sqrt(m / c)))
    replay = make_rng(seed)
    d = random_sign_diagonal(m, replay)
    replay_indices = sample_rows(m, c, replay).indices
    d_signs = d if np.array_equal(replay_indices, indices) else None
    return Preconditioner(r_s=r_s, c=c, sample=sample, seed=seed, d_signs=d_signs)
