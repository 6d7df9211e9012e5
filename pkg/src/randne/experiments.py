"""Residual sweeps: the experiment engine behind the CLI.

A sweep fixes (m, n, kappa) and a seed list, then for each seed generates
one problem family, builds one preconditioner (the sketch does not depend
on b, so it is reused across the whole residual grid), and walks eta_r over
a log-spaced grid running the selected methods and bounds.  Two CSV files
come out:

  solves.csv  -- one row per (seed, eta_r, method): the solve reports.
  bounds.csv  -- one row per (seed, eta_r): observed errors, every selected
                 bound, and all components needed to re-derive each bound
                 value offline, bit for bit.

Figures (error/bound curves against the residual norm) are rendered next to
the CSVs.  All floats are written with repr so that parsing a row back and
re-running a bound formula reproduces the stored value exactly; that
round-trip is what `verify_bounds_csv` checks.
"""

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import precondition, solvers
from .bounds import (
    BOUND_NAMES,
    BoundComponents,
    amplifier_eta,
    evaluate_bound,
    measure_components,
    spectral_components,
)
from .errors import ConfigError, IOFailure, NumericalError
from .linalg import EPS, thin_qr
from .problems import ProblemFamily
from .rng import derive_seed, make_rng

#: stream label mixed into the seed to decorrelate the preconditioner's
#: draws from the problem's own draws under the same user-facing seed
PRECONDITIONER_STREAM = 101

#: which solve report feeds each bound's residual quotient
BOUND_SOURCE = {
    "ls": "qr",
    "ne": "qr",
    "pne": "pne",
    "pne_sym_ap": "pne",
    "pne_sym_rs": "pne",
    "hpne": "hpne",
    "hpne_sym": "hpne",
}

SOLVE_COLUMNS = (
    "method",
    "eta_r",
    "rel_error",
    "rel_residual",
    "rel_residual_precond",
    "kappa_a",
    "kappa_ap",
    "seed",
    "error",
)

BOUND_COLUMNS = (
    "eta_r",
    "err_qr",
    "err_pne",
    "err_hpne",
    "bound_ls",
    "bound_pne",
    "bound_hpne",
    "bound_ne",
    "bound_pne_sym_ap",
    "bound_pne_sym_rs",
    "bound_hpne_sym",
    "nu_pne",
    "nu_hpne",
    "eta",
    "kappa_a",
    "kappa_ap",
    "kappa_rs",
    "kappa_apta",
    "seed",
    "res_qr",
    "res_pne_precond",
    "res_hpne",
    "error",
)


@dataclass(frozen=True)
class ResidualGrid:
    log_min: float = -16.0
    log_max: float = 0.0
    points: int = 33

    def values(self):
        return np.logspace(self.log_min, self.log_max, self.points)


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    n: int
    kappa: float
    seeds: tuple = (0,)
    c: int | None = None  # None means 3n
    grid: ResidualGrid = field(default_factory=ResidualGrid)
    eta_values: tuple | None = None  # explicit residual norms override grid
    methods: tuple = ("qr", "pne", "hpne")
    bounds: tuple = ("ls", "pne", "hpne")
    output_dir: str = "."
    jobs: int = 1

    def sample_amount(self):
        return 3 * self.n if self.c is None else self.c

    def residual_norms(self):
        if self.eta_values is not None:
            return np.asarray(self.eta_values, dtype=float)
        return self.grid.values()

    def validate(self):
        if not self.m > self.n >= 1:
            raise ConfigError("need m > n >= 1 (got m=%s, n=%s)" % (self.m, self.n))
        if self.kappa < 1.0:
            raise ConfigError("kappa must be >= 1")
        if self.sample_amount() < self.n:
            raise ConfigError("c must be >= n")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.eta_values is None and self.grid.points < 1:
            raise ConfigError("residual grid needs at least one point")
        if self.eta_values is None and self.grid.log_min > self.grid.log_max:
            raise ConfigError("residual grid has log_min > log_max")
        if self.eta_values is not None and any(e < 0 for e in self.eta_values):
            raise ConfigError("residual norms must be >= 0")
        bad = [x for x in self.methods if x not in solvers.METHODS]
        if bad or not self.methods:
            raise ConfigError("unknown methods %s (choose from %s)"
                              % (bad, "/".join(solvers.METHODS)))
        bad = [x for x in self.bounds if x not in BOUND_NAMES]
        if bad:
            raise ConfigError("unknown bounds %s (choose from %s)"
                              % (bad, "/".join(BOUND_NAMES)))
        for name in self.bounds:
            src = BOUND_SOURCE[name]
            if src not in self.methods:
                raise ConfigError(
                    "bound %r needs method %r in --methods" % (name, src)
                )
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self


def config_from_json(path):
    """Load an ExperimentConfig from a JSON file (flags override later)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IOFailure("config: %s" % exc) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s: %s" % (path, exc)) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config %s: expected a JSON object" % path)
    known = {
        "m", "n", "kappa", "seeds", "c", "residual_grid", "eta_values",
        "methods", "bounds", "output_dir", "jobs",
    }
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError("config %s: unknown keys %s" % (path, unknown))
    kwargs = {}
    try:
        for key in ("m", "n", "jobs"):
            if key in raw:
                kwargs[key] = int(raw[key])
        if "kappa" in raw:
            kwargs["kappa"] = float(raw["kappa"])
        if "c" in raw and raw["c"] is not None:
            kwargs["c"] = int(raw["c"])
        if "seeds" in raw:
            kwargs["seeds"] = tuple(int(s) for s in raw["seeds"])
        if "eta_values" in raw and raw["eta_values"] is not None:
            kwargs["eta_values"] = tuple(float(e) for e in raw["eta_values"])
        if "methods" in raw:
            kwargs["methods"] = tuple(raw["methods"])
        if "bounds" in raw:
            kwargs["bounds"] = tuple(raw["bounds"])
        if "output_dir" in raw:
            kwargs["output_dir"] = str(raw["output_dir"])
        if "residual_grid" in raw:
            g = raw["residual_grid"]
            kwargs["grid"] = ResidualGrid(
                log_min=float(g.get("log_min", -16.0)),
                log_max=float(g.get("log_max", 0.0)),
                points=int(g.get("points", 33)),
            )
    except (TypeError, ValueError) as exc:
        raise ConfigError("config %s: %s" % (path, exc)) from exc
    missing = [k for k in ("m", "n", "kappa") if k not in kwargs]
    if missing:
        raise ConfigError("config %s: missing keys %s" % (path, missing))
    return ExperimentConfig(**kwargs)


@dataclass
class SeedContext:
    """Everything reusable across the residual grid for one seed."""

    pc: object
    ap: np.ndarray
    comps: object  # SpectralComponents
    qr: object | None
    gram_ne: np.ndarray | None
    gram_pne: np.ndarray | None
    gram_hpne: np.ndarray | None
    family: ProblemFamily | None = None


def build_context(a, pc, methods):
    """Precompute the per-matrix pieces every grid point will reuse."""
    ap = precondition.apply(a, pc)
    apta = ap.T @ a
    comps = spectral_components(a, ap, pc.r_s, apta=apta)
    need = set(methods)
    return SeedContext(
        pc=pc,
        ap=ap,
        comps=comps,
        qr=thin_qr(a) if "qr" in need else None,
        gram_ne=_sym(a.T @ a) if "ne" in need else None,
        gram_pne=_sym(ap.T @ ap) if "pne" in need else None,
        gram_hpne=apta if "hpne" in need else None,
    )


def prepare_seed(config, seed):
    """Generate the family, build the preconditioner, precompute spectra."""
    family = ProblemFamily(config.m, config.n, config.kappa, seed)
    pc_rng = make_rng(derive_seed(seed, PRECONDITIONER_STREAM))
    pc = precondition.build(family.a, config.sample_amount(), pc_rng)
    ctx = build_context(family.a, pc, config.methods)
    ctx.family = family
    return ctx


def _sym(g):
    return 0.5 * (g + g.T)


def solve_point(ctx, p, methods):
    """Run the selected methods on one problem, reusing seed-level work.

    Returns (reports, errors): dicts keyed by method; a failed method lands
    in errors with its exception message and the sweep continues.
    """
    reports = {}
    errors = {}
    for method in solvers.METHODS:
        if method not in methods:
            continue
        try:
            if method == "qr":
                reports[method] = solvers.solve_qr(
                    p, qr=ctx.qr, norm_a=ctx.comps.norm_a
                )
            elif method == "ne":
                reports[method] = solvers.solve_normal(
                    p, gram=ctx.gram_ne, norm_a=ctx.comps.norm_a
                )
            elif method == "pne":
                reports[method] = solvers.solve_pne(
                    p, ctx.pc, ap=ctx.ap, gram=ctx.gram_pne,
                    norm_a=ctx.comps.norm_a, norm_ap=ctx.comps.norm_ap,
                )
            elif method == "hpne":
                reports[method] = solvers.solve_hpne(
                    p, ctx.pc, ap=ctx.ap, gram=ctx.gram_hpne,
                    norm_a=ctx.comps.norm_a,
                )
        except NumericalError as exc:
            errors[method] = "%s: %s" % (type(exc).__name__, exc)
    return reports, errors


def _fmt(x):
    return "" if x is None else repr(float(x))


def _solve_rows(methods, seed, eta_r, reports, errors):
    rows = []
    for method in solvers.METHODS:
        if method not in methods:
            continue
        rep = reports.get(method)
        row = {
            "method": method,
            "eta_r": repr(float(eta_r)),
            "rel_error": _fmt(rep.rel_error) if rep else "",
            "rel_residual": _fmt(rep.rel_residual) if rep else "",
            "rel_residual_precond": (
                _fmt(rep.rel_residual_precond) if rep else ""
            ),
            "kappa_a": "",
            "kappa_ap": "",
            "seed": str(seed),
            "error": errors.get(method, ""),
        }
        rows.append(row)
    return rows


def _bounds_row(config, ctx, p, seed, eta_r, reports, errors):
    row = {k: "" for k in BOUND_COLUMNS}
    row["eta_r"] = repr(float(eta_r))
    row["seed"] = str(seed)
    row["kappa_a"] = repr(ctx.comps.kappa_a)
    row["kappa_ap"] = repr(ctx.comps.kappa_ap)
    row["kappa_rs"] = repr(ctx.comps.kappa_rs)
    row["kappa_apta"] = repr(ctx.comps.kappa_apta)
    try:
        row["eta"] = repr(amplifier_eta(ctx.comps.kappa_rs, EPS))
    except NumericalError:
        pass
    for method, err_col, res_col in (
        ("qr", "err_qr", "res_qr"),
        ("pne", "err_pne", "res_pne_precond"),
        ("hpne", "err_hpne", "res_hpne"),
    ):
        rep = reports.get(method)
        if rep is None:
            continue
        row[err_col] = repr(rep.rel_error)
        if method == "pne":
            row[res_col] = repr(rep.rel_residual_precond)
        else:
            row[res_col] = repr(rep.rel_residual)
    components = {}
    for method in ("qr", "pne", "hpne"):
        rep = reports.get(method)
        if rep is not None:
            components[method] = measure_components(
                p, ctx.pc, rep, comps=ctx.comps
            )
    if "pne" in components:
        row["nu_pne"] = repr(components["pne"].nu_pne)
    if components:
        any_comp = next(iter(components.values()))
        row["nu_hpne"] = repr(any_comp.nu_hpne)
    notes = []
    for name in config.bounds:
        src = BOUND_SOURCE[name]
        comp = components.get(src)
        if comp is None:
            notes.append("%s unavailable (%s)" % (name, errors.get(src, "not run")))
            continue
        try:
            row["bound_" + name] = repr(evaluate_bound(name, comp).value)
        except NumericalError as exc:
            notes.append("%s: %s" % (name, exc))
    failed = ["%s (%s)" % (m, msg) for m, msg in sorted(errors.items())]
    row["error"] = "; ".join(failed + notes)
    return row


def sweep_seed(config, seed):
    """All solve rows and bound rows for one seed."""
    ctx = prepare_seed(config, seed)
    solve_rows = []
    bound_rows = []
    for eta_r in config.residual_norms():
        p = ctx.family.problem(float(eta_r))
        reports, errors = solve_point(ctx, p, config.methods)
        rows = _solve_rows(config.methods, seed, eta_r, reports, errors)
        for row in rows:
            row["kappa_a"] = repr(ctx.comps.kappa_a)
            row["kappa_ap"] = repr(ctx.comps.kappa_ap)
        solve_rows.extend(rows)
        bound_rows.append(
            _bounds_row(config, ctx, p, seed, eta_r, reports, errors)
        )
    return solve_rows, bound_rows


def run_sweep(config, render=True):
    """Execute the sweep, write solves.csv / bounds.csv / figures.

    Returns (solve_rows, bound_rows) as lists of dicts in deterministic
    (seed order, ascending eta_r, method order) row order.
    """
    config.validate()
    seeds = list(config.seeds)
    if config.jobs > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            per_seed = list(pool.map(lambda s: sweep_seed(config, s), seeds))
    else:
        per_seed = [sweep_seed(config, s) for s in seeds]
    solve_rows = []
    bound_rows = []
    for s_rows, b_rows in per_seed:
        solve_rows.extend(s_rows)
        bound_rows.extend(b_rows)
    outdir = config.output_dir
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        raise IOFailure("run_sweep: %s" % exc) from exc
    _write_csv(os.path.join(outdir, "solves.csv"), SOLVE_COLUMNS, solve_rows)
    _write_csv(os.path.join(outdir, "bounds.csv"), BOUND_COLUMNS, bound_rows)
    if render:
        render_sweep_figures(bound_rows, outdir, config)
    return solve_rows, bound_rows


def _write_csv(path, columns, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(columns),
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise IOFailure("writing %s: %s" % (path, exc)) from exc


def read_csv_rows(path):
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise IOFailure("reading %s: %s" % (path, exc)) from exc


def recompute_bound_row(row):
    """Re-derive every bound_* cell of a bounds.csv row from its components.

    Uses only values stored in the same row (plus the machine epsilon), so
    this is the offline reproducibility check: the returned dict must match
    the stored cells exactly, string for string.
    """
    out = {}
    sources = {}
    for src, res_col in (("qr", "res_qr"), ("pne", "res_pne_precond"),
                         ("hpne", "res_hpne")):
        if row.get(res_col):
            res = float(row[res_col])
            sources[src] = BoundComponents(
                kappa_a=float(row["kappa_a"]),
                kappa_ap=float(row["kappa_ap"]) if row.get("kappa_ap") else 0.0,
                kappa_rs=float(row["kappa_rs"]) if row.get("kappa_rs") else 0.0,
                kappa_apta=(
                    float(row["kappa_apta"]) if row.get("kappa_apta") else 0.0
                ),
                nu_pne=float(row["nu_pne"]) if row.get("nu_pne") else 0.0,
                nu_hpne=float(row["nu_hpne"]) if row.get("nu_hpne") else 1.0,
                rel_residual=res if src != "pne" else 0.0,
                rel_residual_precond=res if src == "pne" else None,
            )
    for name in BOUND_NAMES:
        col = "bound_" + name
        if not row.get(col):
            continue
        comp = sources.get(BOUND_SOURCE[name])
        if comp is None:
            continue
        out[col] = repr(evaluate_bound(name, comp).value)
    return out


def verify_bounds_csv(path):
    """Check that every stored bound value is reproducible from its row.

    Returns (rows_checked, values_checked, mismatches) where mismatches is a
    list of (row_number, column, stored, recomputed) tuples.
    """
    rows = read_csv_rows(path)
    mismatches = []
    values = 0
    for i, row in enumerate(rows):
        recomputed = recompute_bound_row(row)
        for col, value in recomputed.items():
            values += 1
            if row[col] != value:
                mismatches.append((i, col, row[col], value))
    return len(rows), values, mismatches


def _series(rows, col):
    pts = {}
    for row in rows:
        if not row.get(col):
            continue
        pts.setdefault(float(row["eta_r"]), []).append(float(row[col]))
    if not pts:
        return None, None
    etas = np.array(sorted(pts))
    med = np.array([np.median(pts[e]) for e in etas])
    return etas, med


def render_sweep_figures(bound_rows, outdir, config):
    """Render error/bound curves to PNG files alongside the CSV output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    main_cols = (
        ("err_qr", "qr error", "tab:blue", "s"),
        ("err_pne", "pne error", "tab:green", "o"),
        ("err_hpne", "hpne error", "tab:red", "x"),
        ("bound_ls", "ls bound", "tab:blue", None),
        ("bound_pne", "pne bound", "tab:green", None),
        ("bound_hpne", "hpne bound", "tab:red", None),
        ("bound_ne", "ne bound", "tab:gray", None),
    )
    sym_cols = (
        ("err_pne", "pne error", "tab:green", "o"),
        ("err_hpne", "hpne error", "tab:red", "x"),
        ("bound_pne_sym_ap", "pne sym (A_p) bound", "tab:olive", None),
        ("bound_pne_sym_rs", "pne sym (R_s) bound", "tab:purple", None),
        ("bound_hpne_sym", "hpne sym bound", "tab:brown", None),
    )
    for fname, cols in (
        ("errors_bounds.png", main_cols),
        ("symmetric_bounds.png", sym_cols),
    ):
        fig, ax = plt.subplots(figsize=(7.0, 5.0))
        plotted = False
        for col, label, color, marker in cols:
            etas, med = _series(bound_rows, col)
            if etas is None:
                continue
            style = dict(color=color, lw=1.4)
            if marker:
                style.update(marker=marker, ms=4, ls="-")
            else:
                style.update(ls="--")
            ax.loglog(etas, med, label=label, **style)
            plotted = True
        if not plotted:
            plt.close(fig)
            continue
        ax.set_xlabel("relative least squares residual")
        ax.set_ylabel("relative error / bound (median over seeds)")
        ax.set_title(
            "m=%d n=%d kappa=%.1e c=%d"
            % (config.m, config.n, config.kappa, config.sample_amount())
        )
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        try:
            fig.savefig(os.path.join(outdir, fname), dpi=130)
        except OSError as exc:
            plt.close(fig)
            raise IOFailure("rendering %s: %s" % (fname, exc)) from exc
        plt.close(fig)
