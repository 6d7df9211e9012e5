"""Perturbation-bound evaluation from measured quantities.

Each bound_* function is one closed-form bound; all of them take plain
floats so a stored CSV row can be re-evaluated offline, bit for bit, from
its component columns.  measure_components gathers those floats from a
solved problem: condition numbers and norms from singular values of the
rectangular factors (never from Gram matrices, which would square the
rounding error), and the nu / residual quotients from the computed
solutions.

The *_sym variants are the alternative symmetric-perturbation bounds; they
are reported with a qualitative character flag ("optimistic" ones ignore an
amplification term that real solvers incur, the "pessimistic" one charges
the full preconditioner perturbation to every term) and are never used as
acceptance gates.
"""

from dataclasses import dataclass

import numpy as np

from . import precondition
from .errors import EtaUndefined, NumericalError, ZeroSolution
from .linalg import EPS, singular_values

BOUND_NAMES = ("ls", "pne", "hpne", "ne", "pne_sym_ap", "pne_sym_rs", "hpne_sym")


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    nu: float | None
    eta: float | None
    kappa_terms: dict
    residual_term: float
    epsilon_used: float
    character: str | None = None  # "optimistic" / "pessimistic" for *_sym


def amplifier_eta(kappa_rs, eps):
    """eta = kappa(R_s) eps / (1 - kappa(R_s) eps); needs kappa(R_s) eps < 1."""
    k = kappa_rs * eps
    if k >= 1.0:
        raise EtaUndefined(
            "kappa(R_s) * eps = %.3e >= 1; the bound does not apply" % k
        )
    return k / (1.0 - k)


def bound_ls(kappa_a, eps, rel_residual):
    """kappa(A) eps (1 + kappa(A) rho): the plain least squares bound."""
    value = kappa_a * eps * (1.0 + kappa_a * rel_residual)
    return BoundReport(
        name="ls",
        value=value,
        nu=None,
        eta=None,
        kappa_terms={"kappa_a": kappa_a},
        residual_term=rel_residual,
        epsilon_used=eps,
    )


def bound_pne(kappa_rs, kappa_ap, nu, rel_residual_p, eps):
    """The two-step preconditioned bound.

    kappa(R_s) nu (kappa(A_p) eps + kappa(A_p)^2 eta (rho_p + eps)), with
    rho_p the residual quotient of the *preconditioned* problem and
    nu = ||R_s x_hat|| / (||R_s|| ||x_hat||) <= 1.
    """
    eta = amplifier_eta(kappa_rs, eps)
    value = kappa_rs * nu * (
        kappa_ap * eps + kappa_ap**2 * eta * (rel_residual_p + eps)
    )
    return BoundReport(
        name="pne",
        value=value,
        nu=nu,
        eta=eta,
        kappa_terms={"kappa_rs": kappa_rs, "kappa_ap": kappa_ap},
        residual_term=rel_residual_p,
        epsilon_used=eps,
    )


def bound_hpne(kappa_apta, nu, kappa_rs, rel_residual, eps):
    """The half-preconditioned bound.

    kappa(A_p'A) nu (eta rho + (1 + eta) eps), with rho the residual
    quotient of the original problem and nu = ||A_p|| ||A|| / ||A_p'A|| >= 1.
    """
    eta = amplifier_eta(kappa_rs, eps)
    value = kappa_apta * nu * (eta * rel_residual + (1.0 + eta) * eps)
    return BoundReport(
        name="hpne",
        value=value,
        nu=nu,
        eta=eta,
        kappa_terms={"kappa_apta": kappa_apta, "kappa_rs": kappa_rs},
        residual_term=rel_residual,
        epsilon_used=eps,
    )


def bound_ne(kappa_a, epsilon, rel_residual):
    """kappa(A)^2 eps (rho + 1 + eps): why plain normal equations die early."""
    value = kappa_a**2 * epsilon * (rel_residual + 1.0 + epsilon)
    return BoundReport(
        name="ne",
        value=value,
        nu=None,
        eta=None,
        kappa_terms={"kappa_a": kappa_a},
        residual_term=rel_residual,
        epsilon_used=epsilon,
    )


def bound_pne_sym_ap(kappa_rs, nu, kappa_ap, epsilon, rel_residual_p):
    """Symmetric variant perturbing only the preconditioned matrix."""
    value = kappa_rs * nu * kappa_ap**2 * epsilon * (rel_residual_p + 1.0 + epsilon)
    return BoundReport(
        name="pne_sym_ap",
        value=value,
        nu=nu,
        eta=None,
        kappa_terms={"kappa_rs": kappa_rs, "kappa_ap": kappa_ap},
        residual_term=rel_residual_p,
        epsilon_used=epsilon,
        character="optimistic",
    )


def bound_pne_sym_rs(kappa_rs, nu, kappa_ap, epsilon, rel_residual_p):
    """Symmetric variant charging the full preconditioner perturbation."""
    eta = amplifier_eta(kappa_rs, epsilon)
    value = kappa_rs * nu * kappa_ap**2 * eta * (rel_residual_p + 1.0 + eta)
    return BoundReport(
        name="pne_sym_rs",
        value=value,
        nu=nu,
        eta=eta,
        kappa_terms={"kappa_rs": kappa_rs, "kappa_ap": kappa_ap},
        residual_term=rel_residual_p,
        epsilon_used=epsilon,
        character="pessimistic",
    )


def bound_hpne_sym(kappa_apta, nu, epsilon, rel_residual):
    """Symmetric additive variant of the half-preconditioned bound."""
    value = kappa_apta * nu * epsilon * (rel_residual + 1.0 + epsilon)
    return BoundReport(
        name="hpne_sym",
        value=value,
        nu=nu,
        eta=None,
        kappa_terms={"kappa_apta": kappa_apta},
        residual_term=rel_residual,
        epsilon_used=epsilon,
        character="optimistic",
    )


@dataclass(frozen=True)
class SpectralComponents:
    """Per-(problem, preconditioner) spectra; independent of b and eta_r."""

    sv_a: np.ndarray
    sv_ap: np.ndarray
    sv_rs: np.ndarray
    sv_apta: np.ndarray

    @property
    def norm_a(self):
        return float(self.sv_a[0])

    @property
    def norm_ap(self):
        return float(self.sv_ap[0])

    @property
    def norm_rs(self):
        return float(self.sv_rs[0])

    @property
    def norm_apta(self):
        return float(self.sv_apta[0])

    @property
    def kappa_a(self):
        return float(self.sv_a[0] / self.sv_a[-1])

    @property
    def kappa_ap(self):
        return float(self.sv_ap[0] / self.sv_ap[-1])

    @property
    def kappa_rs(self):
        return float(self.sv_rs[0] / self.sv_rs[-1])

    @property
    def kappa_apta(self):
        return float(self.sv_apta[0] / self.sv_apta[-1])


def spectral_components(a, ap, r_s, apta=None):
    """Singular value sweeps for A, A_p, R_s, and A_p'A (the expensive part).

    Pass a precomputed product ``apta = ap.T @ a`` to avoid forming it twice
    when the caller also needs it for a solve.
    """
    if apta is None:
        apta = ap.T @ a
    return SpectralComponents(
        sv_a=singular_values(a),
        sv_ap=singular_values(ap),
        sv_rs=singular_values(r_s),
        sv_apta=singular_values(apta),
    )


@dataclass(frozen=True)
class BoundComponents:
    """Everything the bound formulas consume, as plain floats."""

    kappa_a: float
    kappa_ap: float
    kappa_rs: float
    kappa_apta: float
    nu_pne: float
    nu_hpne: float
    rel_residual: float
    rel_residual_precond: float | None
    eps: float = EPS


def measure_components(p, pc, report, comps=None, ap=None):
    """Gather bound inputs from a completed solve.

    The nu sign conditions (nu_pne <= 1, nu_hpne >= 1) are theorems about
    the exact quantities; they are asserted here on every call so a
    violation surfaces as a hard numerical failure, not a wrong CSV row.
    """
    x_hat = report.x_hat
    nx = np.linalg.norm(x_hat)
    if nx == 0.0:
        raise ZeroSolution("measure_components: ||x_hat|| = 0")
    if comps is None:
        if ap is None:
            ap = precondition.apply(p.a, pc)
        comps = spectral_components(p.a, ap, pc.r_s)
    nu_pne = float(np.linalg.norm(pc.r_s @ x_hat) / (comps.norm_rs * nx))
    nu_hpne = float(comps.norm_ap * comps.norm_a / comps.norm_apta)
    if nu_pne > 1.0 + 1e-12:
        raise NumericalError("nu_pne = %.15g exceeds 1" % nu_pne)
    if nu_hpne < 1.0 - 1e-12:
        raise NumericalError("nu_hpne = %.15g is below 1" % nu_hpne)
    return BoundComponents(
        kappa_a=comps.kappa_a,
        kappa_ap=comps.kappa_ap,
        kappa_rs=comps.kappa_rs,
        kappa_apta=comps.kappa_apta,
        nu_pne=nu_pne,
        nu_hpne=nu_hpne,
        rel_residual=report.rel_residual,
        rel_residual_precond=report.rel_residual_precond,
    )


def evaluate_bound(name, c):
    """Dispatch one named bound from a BoundComponents record."""
    if name == "ls":
        return bound_ls(c.kappa_a, c.eps, c.rel_residual)
    if name == "ne":
        return bound_ne(c.kappa_a, c.eps, c.rel_residual)
    if name == "pne":
        return bound_pne(c.kappa_rs, c.kappa_ap, c.nu_pne, c.rel_residual_precond, c.eps)
    if name == "pne_sym_ap":
        return bound_pne_sym_ap(
            c.kappa_rs, c.nu_pne, c.kappa_ap, c.eps, c.rel_residual_precond
        )
    if name == "pne_sym_rs":
        return bound_pne_sym_rs(
            c.kappa_rs, c.nu_pne, c.kappa_ap, c.eps, c.rel_residual_precond
        )
    if name == "hpne":
        return bound_hpne(c.kappa_apta, c.nu_hpne, c.kappa_rs, c.rel_residual, c.eps)
    if name == "hpne_sym":
        return bound_hpne_sym(c.kappa_apta, c.nu_hpne, c.eps, c.rel_residual)
    raise ValueError("unknown bound name %r" % name)
