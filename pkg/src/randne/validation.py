"""Independent oracles for the perturbation and probability results.

Two kinds of check live here.  The perturbation checks *inject* explicit
perturbations of known size into the solve models (perturbed preconditioner
and perturbed second matrix), solve the perturbed systems exactly, and
compare the true error of the perturbed solution against the corresponding
bound evaluated at that epsilon -- exercising both sides of the inequality
without relying on rounding behavior.  The Monte Carlo check draws many
independent sketches and counts how often the probabilistic singular value
and condition number intervals hold.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import precondition
from .bounds import bound_hpne, bound_pne, spectral_components
from .errors import HypothesisViolated, RankDeficientSketch
from .linalg import EPS, lu_solve, singular_values, solve_upper_triangular, thin_qr
from .sketch import apply_sketch, coherence, sample_count


@dataclass(frozen=True)
class PerturbTrial:
    trial_index: int
    actual_error: float
    bound_value: float
    dominated: bool
    nu: float


def _scaled_gaussian(shape, target_norm, rng):
    e = rng.gen.standard_normal(shape)
    if target_norm == 0.0:
        return np.zeros(shape)
    return e * (target_norm / singular_values(e)[0])


def _apply_right_inverse(a, m1):
    # a @ inv(m1) without forming the inverse: solve m1' x = a' by LU.
    # m1 = R_s + E_s is no longer triangular, hence the general solver.
    lu, piv = scipy.linalg.lu_factor(m1)
    return scipy.linalg.lu_solve((lu, piv), a.T, trans=1).T


def perturb_check_pne(p, pc, epsilon, trials, rng):
    """Injected-perturbation check of the two-step (PNE) bound.

    Per trial: draw E_s, E_p with spectral norms exactly epsilon * ||R_s||
    and epsilon * ||A_p||, form A_1 = A (R_s + E_s)^{-1} and
    A_2 = A_p + E_p, solve A_1' A_2 y = A_1' b then R_s x = y, and compare
    the true relative error of x against the PNE bound evaluated with this
    epsilon and this trial's nu.
    """
    ap = precondition.apply(p.a, pc)
    comps = spectral_components(p.a, ap, pc.r_s)
    if comps.kappa_rs * epsilon >= 1.0:
        raise HypothesisViolated(
            "kappa(R_s) * epsilon = %.3e >= 1" % (comps.kappa_rs * epsilon)
        )
    out = []
    for t in range(trials):
        trng = rng.spawn(t)
        e_s = _scaled_gaussian((p.n, p.n), epsilon * comps.norm_rs, trng)
        e_p = _scaled_gaussian((p.m, p.n), epsilon * comps.norm_ap, trng)
        a1 = _apply_right_inverse(p.a, pc.r_s + e_s)
        a2 = ap + e_p
        y = lu_solve(a1.T @ a2, a1.T @ p.b)
        x = solve_upper_triangular(pc.r_s, y)
        nx = np.linalg.norm(x)
        err = float(np.linalg.norm(p.x_star - x) / nx)
        nu = float(np.linalg.norm(pc.r_s @ x) / (comps.norm_rs * nx))
        rho_p = float(
            np.linalg.norm(p.b - ap @ y) / (comps.norm_ap * np.linalg.norm(y))
        )
        value = bound_pne(comps.kappa_rs, comps.kappa_ap, nu, rho_p, epsilon).value
        out.append(
            PerturbTrial(
                trial_index=t,
                actual_error=err,
                bound_value=value,
                dominated=bool(value >= err),
                nu=nu,
            )
        )
    return out


def perturb_check_hpne(p, pc, epsilon, trials, rng):
    """Injected-perturbation check of the half-preconditioned bound.

    Same shape as perturb_check_pne but with A_2 = A + E_A and the one-step
    system A_1' A_2 x = A_1' b; the bound is evaluated with the
    solve-independent nu = ||A_p|| ||A|| / ||A_p'A||.
    """
    ap = precondition.apply(p.a, pc)
    comps = spectral_components(p.a, ap, pc.r_s)
    if comps.kappa_rs * epsilon >= 1.0:
        raise HypothesisViolated(
            "kappa(R_s) * epsilon = %.3e >= 1" % (comps.kappa_rs * epsilon)
        )
    nu = comps.norm_ap * comps.norm_a / comps.norm_apta
    out = []
    for t in range(trials):
        trng = rng.spawn(t)
        e_s = _scaled_gaussian((p.n, p.n), epsilon * comps.norm_rs, trng)
        e_a = _scaled_gaussian((p.m, p.n), epsilon * comps.norm_a, trng)
        a1 = _apply_right_inverse(p.a, pc.r_s + e_s)
        a2 = p.a + e_a
        x = lu_solve(a1.T @ a2, a1.T @ p.b)
        nx = np.linalg.norm(x)
        err = float(np.linalg.norm(p.x_star - x) / nx)
        rho = float(np.linalg.norm(p.b - p.a @ x) / (comps.norm_a * nx))
        value = bound_hpne(comps.kappa_apta, nu, comps.kappa_rs, rho, epsilon).value
        out.append(
            PerturbTrial(
                trial_index=t,
                actual_error=err,
                bound_value=value,
                dominated=bool(value >= err),
                nu=float(nu),
            )
        )
    return out


def residual_identity_check(p, pc):
    """Discrepancy between the preconditioned and original residuals at x*.

    b - A_p (R_s x*) equals b - A x* exactly in real arithmetic; the return
    value is the relative discrepancy (absolute when eta_r = 0), which
    measures only the rounding of the triangular solve and the product.
    """
    ap = precondition.apply(p.a, pc)
    r_precond = p.b - ap @ (pc.r_s @ p.x_star)
    r_original = p.b - p.a @ p.x_star
    gap = float(np.linalg.norm(r_precond - r_original))
    if p.eta_r == 0.0:
        return gap
    return gap / float(np.linalg.norm(r_original))


def reciprocal_sv_check(a, pc):
    """Max deviation of sigma_i(S F D Q) * sigma_{n-i+1}(A_p) from 1.

    Q is the thin-QR basis of a; the sketch replays the exact sign diagonal
    and sample indices stored in the preconditioner.
    """
    if pc.d_signs is None:
        raise ValueError(
            "reciprocal_sv_check: preconditioner has no replayable sign "
            "diagonal (loaded from metadata that failed replay?)"
        )
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    q = thin_qr(a).q
    sfq = apply_sketch(q, pc.d_signs, pc.sample)
    sv_sketch = singular_values(sfq)
    if sv_sketch[-1] <= n * EPS * sv_sketch[0]:
        raise RankDeficientSketch("reciprocal_sv_check: sampled basis lost rank")
    sv_ap = singular_values(precondition.apply(a, pc))
    products = sv_sketch * sv_ap[::-1]
    return float(np.max(np.abs(products - 1.0)))


@dataclass(frozen=True)
class McCondReport:
    trials: int
    epsilon: float
    delta: float
    c_used: int
    coverage_sv: float  # all sigma_j(A_p) inside [1/sqrt(1+eps), 1/sqrt(1-eps)]
    coverage_krs: float  # kappa(R_s) inside the kappa(A)-sandwich
    coverage_kapap: float  # kappa(A_p'A_p) inside [(1-eps)/(1+eps), (1+eps)/(1-eps)]
    coverage_kapta: float  # kappa(A_p'A) inside the kappa(A)-sandwich


def prob_cond_mc(a, epsilon, delta, trials, rng, pilot_draws=3):
    """Monte Carlo coverage of the probabilistic condition number intervals.

    The sample count c comes from the displayed formula with the coherence
    estimated as the max over a few pilot draws of F*D (coherence depends on
    the random transform, so a single draw could understate it).  Each trial
    uses an independently spawned rng; a rank-deficient sketch counts as a
    violation of every interval.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("prob_cond_mc: epsilon must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("prob_cond_mc: delta must lie in (0, 1)")
    if trials < 1:
        raise ValueError("prob_cond_mc: trials must be >= 1")
    a = np.asarray(a, dtype=float)
    m, n = a.shape
    q = thin_qr(a).q
    sv_a = singular_values(a)
    kappa_a = sv_a[0] / sv_a[-1]
    mu = max(coherence(q, rng) for _ in range(pilot_draws))
    c = sample_count(m, n, mu, epsilon, delta)

    sv_lo = 1.0 / np.sqrt(1.0 + epsilon)
    sv_hi = 1.0 / np.sqrt(1.0 - epsilon)
    ratio = np.sqrt((1.0 + epsilon) / (1.0 - epsilon))
    krs_lo, krs_hi = kappa_a / ratio, kappa_a * ratio
    kapap_lo, kapap_hi = 1.0 / ratio**2, ratio**2

    hits = np.zeros(4, dtype=int)
    for t in range(trials):
        trng = rng.spawn(t)
        try:
            pc = precondition.build(a, c, trng)
        except RankDeficientSketch:
            continue  # counts against every coverage
        ap = precondition.apply(a, pc)
        sv_ap = singular_values(ap)
        sv_rs = singular_values(pc.r_s)
        sv_apta = singular_values(ap.T @ a)
        kappa_ap = sv_ap[0] / sv_ap[-1]
        kappa_rs = sv_rs[0] / sv_rs[-1]
        kappa_apta = sv_apta[0] / sv_apta[-1]
        # kappa(A_p'A_p) = kappa(A_p)^2 identically; computed from the
        # rectangular factor to keep relative accuracy
        kappa_gram = kappa_ap**2
        if sv_lo <= sv_ap[-1] and sv_ap[0] <= sv_hi:
            hits[0] += 1
        if krs_lo <= kappa_rs <= krs_hi:
            hits[1] += 1
        if kapap_lo <= kappa_gram <= kapap_hi:
            hits[2] += 1
        if krs_lo <= kappa_apta <= krs_hi:
            hits[3] += 1
    cov = hits / trials
    return McCondReport(
        trials=trials,
        epsilon=epsilon,
        delta=delta,
        c_used=c,
        coverage_sv=float(cov[0]),
        coverage_krs=float(cov[1]),
        coverage_kapap=float(cov[2]),
        coverage_kapta=float(cov[3]),
    )
