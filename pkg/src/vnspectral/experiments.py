"""Experiment runners.

Every runner takes an :class:`~vnspectral.config.ExperimentConfig` and
returns an :class:`ExperimentResult` whose verdicts each name the invariant
they test.  Randomness comes from ``numpy.random.SeedSequence(seed)``: run
``i`` of a sweep uses ``default_rng(SeedSequence(seed).spawn(n)[i])``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import covers
from .algebra import TracedAlgebra
from .callias import (
    IndexReport,
    Potential,
    SiteField,
    callias_block,
    check_callias_condition,
    domain_inequality_diagnostic,
    quadratic_form_residual,
    schrodinger,
    square_decomposition_residual,
    tau_index,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    build_algebra,
    build_cover,
    build_field,
    build_model,
    build_potential,
    fiber_rank,
)
from .hilbert_module import (
    AMatrix,
    block_eigvalsh,
    bounded_transform,
    counting_curve,
    eigenvalue_tol,
    is_tau_fredholm,
    off_diagonal_double,
)
from .lattice import Section, dirac

__all__ = [
    "Verdict",
    "ExperimentResult",
    "ExperimentError",
    "CURVE_COLUMNS",
    "INDEX_COLUMNS",
    "run_spectrum",
    "run_index",
    "run_counting_stabilization",
    "run_index_stability",
    "run_fredholm_characterization",
    "run_cover_correspondence",
    "run_domain_diagnostic",
    "piecewise_linear_bump",
    "RUNNERS",
]

CURVE_COLUMNS = ("lambda", "N_tau", "truncation_L", "block_id")
INDEX_COLUMNS = ("run_id", "perturbation", "t", "ind_tau", "dim_ker", "dim_coker", "gap", "mckean_singer",
                 "heat_time", "threshold", "discrepancy_bound", "ambiguous", "callias_verdict",
                 "exceptional_lo", "exceptional_hi")


class ExperimentError(RuntimeError):
    """A runner precondition failed (e.g. an endpoint is not of Callias type)."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(message)


@dataclass(frozen=True)
class Verdict:
    invariant: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"invariant": self.invariant, "passed": self.passed, "detail": self.detail}


@dataclass
class ExperimentResult:
    """Records, verdicts and tables of one run.  ``timings`` never enters ``results.json``."""

    experiment: str
    summary: dict[str, Any] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    curves: list[tuple] = field(default_factory=list)
    index_rows: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def check(self, invariant: str, passed: bool, detail: str = "") -> bool:
        self.verdicts.append(Verdict(invariant, bool(passed), detail))
        return bool(passed)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "verdict": "PASS" if self.passed else "FAIL",
            "verdicts": [v.to_dict() for v in self.verdicts],
            "failed": [v.invariant for v in self.verdicts if not v.passed],
            "summary": self.summary,
        }


class _Timer:
    def __init__(self, result: ExperimentResult, name: str):
        self.result, self.name = result, name

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.result.timings[self.name] = self.result.timings.get(self.name, 0.0) + time.perf_counter() - self.start


def _report_row(rep: IndexReport, run_id: int, perturbation, t, verdict=None) -> dict:
    lo = hi = ""
    if verdict is not None and verdict.exceptional_region is not None:
        lo, hi = verdict.exceptional_region
    return {
        "run_id": run_id, "perturbation": perturbation, "t": t, "ind_tau": rep.ind_tau, "dim_ker": rep.dim_ker,
        "dim_coker": rep.dim_coker, "gap": rep.gap_plus, "mckean_singer": rep.mckean_singer,
        "heat_time": rep.heat_time, "threshold": rep.threshold, "discrepancy_bound": rep.discrepancy_bound,
        "ambiguous": rep.ambiguous, "callias_verdict": "" if verdict is None else verdict.verdict,
        "exceptional_lo": lo, "exceptional_hi": hi,
    }


def _counting_rows(a: AMatrix, lambdas: np.ndarray, length) -> list[tuple]:
    """Total and (for several blocks) per-block counting curves."""
    rows = [(lam, n, length, "all") for lam, n in zip(lambdas, counting_curve(a, lambdas).values)]
    if len(a.algebra) > 1:
        tol = eigenvalue_tol(a)
        for i, (w, b) in enumerate(zip(a.algebra.weights, a.blocks)):
            counts = w * np.searchsorted(block_eigvalsh(b), lambdas + tol, side="right")
            rows += [(lam, float(n), length, str(i)) for lam, n in zip(lambdas, counts)]
    return rows


def _callias_setup(cfg: ExperimentConfig, half_length: float | None = None):
    model = build_model(cfg, half_length)
    algebra, _ = build_algebra(cfg)
    r = fiber_rank(cfg)
    d = dirac(model, algebra, r)
    f = build_field(cfg, "endomorphism", "f", model, algebra, r)
    return model, algebra, d, f


# --------------------------------------------------------------------------
# spectrum and single index
# --------------------------------------------------------------------------

def run_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    """Counting curve of ``H_V = D*D + V`` with quadratic-form and positivity checks."""
    res = ExperimentResult("spectrum")
    with _Timer(res, "assemble"):
        model = build_model(cfg)
        algebra, _ = build_algebra(cfg)
        r = fiber_rank(cfg)
        d = dirac(model, algebra, r)
        v = build_potential(cfg, model, algebra, r)
        h = schrodinger(d, v)
    lambdas = cfg.lambda_grid(0.0, 10.0)
    with _Timer(res, "counting"):
        rows = _counting_rows(h.hat(), lambdas, "")
        res.curves += rows
    totals = np.array([row[1] for row in rows if row[3] == "all"])
    res.check("counting monotone in lambda", np.all(np.diff(totals) >= 0))
    n_sections = cfg.get_int("sweep", "sections", 4)
    tol = cfg.get_positive("tolerances", "residual", 1e-10)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(n_sections)]
    with _Timer(res, "quadratic_form"):
        worst = max((quadratic_form_residual(d, v, Section.random(model, algebra, r, g)) for g in rngs),
                    default=0.0)
    res.check("quadratic form <H_V s, s> = |Ds|^2 + <Vs, s>", worst <= tol, f"max residual {worst:.3g}")
    vmin = float(v.field.min_eigenvalues().min())
    if vmin >= 0:
        probe = -10.0 * eigenvalue_tol(h.hat())
        neg = counting_curve(h.hat(), [probe]).values[0]
        res.check("V >= 0 implies N_tau(lambda < 0) = 0", neg == 0, f"N_tau({probe:.3g}) = {neg}")
    res.summary = {"sites": model.N, "h": model.h, "min_potential": vmin, "quadratic_form_residual": worst,
                   "lambda_grid": [float(lambdas[0]), float(lambdas[-1]), int(lambdas.size)]}
    return res


def run_index(cfg: ExperimentConfig) -> ExperimentResult:
    """tau-index of ``D + F`` with Callias check, McKean-Singer agreement and square decomposition."""
    res = ExperimentResult("index")
    with _Timer(res, "assemble"):
        model, algebra, d, f = _callias_setup(cfg)
    eps = cfg.get_positive("tolerances", "epsilon", 0.5)
    tol_ker = cfg.get_positive("tolerances", "tol_ker", 1e-8)
    tol_index = cfg.get_positive("tolerances", "index", 1e-6)
    with _Timer(res, "callias_check"):
        verdict = check_callias_condition(d, f, eps)
    res.check("Callias condition holds outside the compact region", verdict.holds,
              f"verdict {verdict.verdict}, exceptional sites {verdict.exceptional_region}")
    block = callias_block(d, f)
    with _Timer(res, "tau_index"):
        rep = tau_index(block, tol_ker)
    res.index_rows.append(_report_row(rep, 0, "", "", verdict))
    res.check("kernel gap unambiguous", not rep.ambiguous and rep.gap_plus is not None,
              f"gap {rep.gap_plus}, threshold {rep.threshold:.3g}")
    res.check("index agrees with McKean-Singer supertrace", abs(rep.ind_tau - rep.mckean_singer) <= tol_index,
              f"ind {rep.ind_tau}, supertrace {rep.mckean_singer!r} at t={rep.heat_time:.6g}")
    if algebra == TracedAlgebra.scalars():
        res.check("integrality over the scalars", abs(rep.ind_tau - round(rep.ind_tau)) <= 1e-8)
    with _Timer(res, "square_decomposition"):
        sq = square_decomposition_residual(d, f)
    res.check("square decomposition residual", sq <= 1e-10, f"relative residual {sq:.3g}")
    if cfg.has("sweep", "lambda_points"):
        with _Timer(res, "counting"):
            res.curves += _counting_rows(block.hat().H @ block.hat(), cfg.lambda_grid(0.0, 4.0), "")
    res.summary = {"ind_tau": rep.ind_tau, "report": rep.to_dict(), "callias_verdict": verdict.verdict,
                   "exceptional_region": list(verdict.exceptional_region or ()),
                   "square_decomposition_residual": sq, "sites": model.N, "algebra": list(algebra.blocks)}
    return res


# --------------------------------------------------------------------------
# Counting stabilization
# --------------------------------------------------------------------------

def run_counting_stabilization(cfg: ExperimentConfig) -> ExperimentResult:
    """``N_tau(lam; H_V)`` over growing truncations with the floor region fixed.

    Below the floor ``C`` the counts must become constant over the last three
    truncations; above it they must grow.
    """
    res = ExperimentResult("counting")
    lengths = sorted(cfg.get_floats("sweep", "lengths"))
    probes = cfg.get_floats("sweep", "lambdas")
    tol = cfg.get_positive("tolerances", "stabilize", 1e-8)
    c = cfg.get_float("potential", "floor", float("nan"))
    if not cfg.has("potential", "floor"):
        raise ConfigError("potential.floor", "counting stabilization needs a floor certificate")
    grid = cfg.lambda_grid(min(probes) - 1.0, max(probes) + 1.0)
    table = {lam: [] for lam in probes}
    for length in lengths:
        with _Timer(res, "assemble"):
            model = build_model(cfg, length)
            algebra, _ = build_algebra(cfg)
            r = fiber_rank(cfg)
            v = build_potential(cfg, model, algebra, r, require_floor=True)
            h = schrodinger(dirac(model, algebra, r), v).hat()
        with _Timer(res, "counting"):
            vals = counting_curve(h, probes).values
            for lam, n in zip(sorted(probes), vals):
                table[lam].append(float(n))
            res.curves += _counting_rows(h, grid, length)
    for lam in probes:
        seq = table[lam]
        if lam < c:
            tail = seq[-3:]
            res.check(f"stabilization below the floor (lambda={lam:g})",
                      len(seq) >= 3 and max(tail) - min(tail) <= tol, f"N_tau over L={lengths}: {seq}")
        else:
            res.check(f"growth above the floor (lambda={lam:g})", bool(np.all(np.diff(seq) > 0)),
                      f"N_tau over L={lengths}: {seq}")
    res.summary = {"floor": c, "lengths": lengths, "counts": {f"{lam:g}": table[lam] for lam in probes}}
    return res


# --------------------------------------------------------------------------
# Index stability
# --------------------------------------------------------------------------

def piecewise_linear_bump(rng: np.random.Generator, support: float, amplitude: float, knots: int):
    """Seeded piecewise-linear function supported in ``[-support, support]``.

    Interior knots are uniform on the support, values uniform in
    ``[-amplitude, amplitude]``; the ends are pinned to zero.
    """
    xs = np.sort(rng.uniform(-support, support, knots))
    ys = rng.uniform(-amplitude, amplitude, knots)
    xs = np.concatenate([[-support], xs, [support]])
    ys = np.concatenate([[0.0], ys, [0.0]])
    return lambda x: np.interp(x, xs, ys, left=0.0, right=0.0)


def run_index_stability(cfg: ExperimentConfig) -> ExperimentResult:
    """Index along ``F_t = F_0 + t (F_1 - F_0)`` for seeded compactly supported ``F_1 - F_0``."""
    res = ExperimentResult("stability")
    with _Timer(res, "assemble"):
        model, algebra, d, f0 = _callias_setup(cfg)
    ts = cfg.get_floats("sweep", "ts", [0.0, 0.5, 1.0])
    n_pert = cfg.get_int("sweep", "perturbations", 20)
    amplitude = cfg.get_positive("sweep", "amplitude", 3.0)
    support = cfg.get_positive("sweep", "support", 5.0)
    knots = cfg.get_int("sweep", "knots", 6)
    eps = cfg.get_positive("tolerances", "epsilon", 0.1)
    tol_index = cfg.get_positive("tolerances", "index", 1e-6)
    tol_ker = cfg.get_positive("tolerances", "tol_ker", 1e-8)
    lo, hi = model.compact_region
    x = model.x
    if hi <= lo or x[lo] > -support or x[hi - 1] < support:
        raise ConfigError("sweep.support", "perturbation support must lie inside the compact region")

    with _Timer(res, "callias_check"):
        base_verdict = check_callias_condition(d, f0, eps)
    if not base_verdict.holds:
        raise ExperimentError("endpoint Callias condition", "F_0 is not of Callias type for this epsilon")
    with _Timer(res, "tau_index"):
        base = tau_index(callias_block(d, f0), tol_ker)
    res.index_rows.append(_report_row(base, 0, "", 0.0, base_verdict))
    expected = base.ind_tau
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_pert)
    indices, callias_ok, worst = [], True, 0.0
    run_id = 1
    for p, seed in enumerate(seeds):
        bump = piecewise_linear_bump(np.random.default_rng(seed), support, amplitude, knots)
        delta = SiteField.scalar(model, bump, algebra, f0.r)
        end = check_callias_condition(d, f0 + delta, eps)
        if not end.holds:
            raise ExperimentError("endpoint Callias condition", f"F_1 of perturbation {p} is not of Callias type")
        for t in ts:
            if t == 0.0:
                rep, verdict = base, base_verdict
            else:
                ft = f0 + delta * t
                with _Timer(res, "callias_check"):
                    verdict = end if t == 1.0 else check_callias_condition(d, ft, eps)
                with _Timer(res, "tau_index"):
                    rep = tau_index(callias_block(d, ft), tol_ker)
            callias_ok &= verdict.holds
            worst = max(worst, abs(rep.ind_tau - expected))
            indices.append(rep.ind_tau)
            res.index_rows.append(_report_row(rep, run_id, p, t, verdict))
            run_id += 1
    res.check("index constant along homotopies and perturbations", worst <= tol_index,
              f"reference {expected}, max deviation {worst:.3g} over {len(indices)} operators")
    res.check("every sampled operator is of Callias type", callias_ok, f"epsilon {eps}")
    res.summary = {"reference_index": expected, "max_deviation": worst, "operators": len(indices),
                   "perturbations": n_pert, "ts": ts, "epsilon": eps}
    return res


# --------------------------------------------------------------------------
# Fredholm characterization
# --------------------------------------------------------------------------

def _phi_identity(t: AMatrix, lambdas) -> float:
    """Largest ``|N(lam; calT^2) - N(lam/(1+lam); Phi(calT)^2)|`` with ``calT = [[0, T*], [T, 0]]``."""
    big = off_diagonal_double(t)
    sq = big @ big
    phi = bounded_transform(big)
    phi_sq = phi @ phi
    lam = np.asarray(lambdas, dtype=float)
    lhs = counting_curve(sq, lam).values
    rhs = counting_curve(phi_sq, lam / (1.0 + lam)).values
    return float(np.abs(lhs - rhs).max())


def run_fredholm_characterization(cfg: ExperimentConfig) -> ExperimentResult:
    """Gap above the kernel across truncations, for a Callias ``F`` and a decaying control."""
    res = ExperimentResult("fredholm")
    lengths = sorted(cfg.get_floats("sweep", "lengths"))
    probe = cfg.get_positive("sweep", "lambda_probe", 0.25)
    gap_floor = cfg.get_positive("tolerances", "gap", 0.5)
    tol_ker = cfg.get_positive("tolerances", "tol_ker", 1e-8)
    grid = cfg.lambda_grid(0.0, 4.0)
    witnesses = {"callias": [], "control": []}
    for length in lengths:
        with _Timer(res, "assemble"):
            model, algebra, d, f = _callias_setup(cfg, length)
            r = fiber_rank(cfg)
            fc = build_field(cfg, "endomorphism", "f_control", model, algebra, r)
        for name, fld in (("callias", f), ("control", fc)):
            t = callias_block(d, fld).hat()
            with _Timer(res, "witness"):
                w = is_tau_fredholm(t, probe, tol_ker)
            witnesses[name].append({"L": length, "dim_kernel": w.dim_kernel, "gap": w.gap,
                                    "N_star_t": w.n_star_t, "N_t_star": w.n_t_star})
            if name == "callias":
                with _Timer(res, "counting"):
                    res.curves += _counting_rows(t.H @ t, grid, length)
    cal, ctl = witnesses["callias"], witnesses["control"]
    dims = [w["dim_kernel"] for w in cal]
    res.check("Callias family: kernel tau-dimension constant in L", max(dims) - min(dims) <= 1e-12, f"{dims}")
    gaps = [w["gap"] or 0.0 for w in cal]
    res.check("Callias family: gap above the kernel persists", min(gaps) >= gap_floor,
              f"gaps {gaps}, floor {gap_floor}")
    cgaps = [w["gap"] or 0.0 for w in ctl]
    res.check("control family: gap collapses as L grows", bool(np.all(np.diff(cgaps) < 0)) and cgaps[-1] < gap_floor,
              f"gaps {cgaps}")
    lambdas = cfg.get_floats("sweep", "lambdas", [0.1, 1.0, 10.0])
    with _Timer(res, "phi_identity"):
        model, algebra, d, f = _callias_setup(cfg, lengths[0])
        dev = _phi_identity(callias_block(d, f).hat(), lambdas)
    res.check("N(lam; T^2) = N(lam/(1+lam); Phi(T)^2)", dev <= 1e-10,
              f"max deviation {dev} at L={lengths[0]}, lambdas {lambdas}")
    res.summary = {"lambda_probe": probe, "callias": cal, "control": ctl, "phi_identity_deviation": dev}
    return res


# --------------------------------------------------------------------------
# Covers
# --------------------------------------------------------------------------

def _arc_length_oracle(lam: float, weight: float) -> float:
    """``|{theta: 2w - 2w cos(theta) <= lam}| / 2 pi``."""
    c = np.clip(1.0 - lam / (2.0 * weight), -1.0, 1.0)
    return float(np.arccos(c) / np.pi)


def run_cover_correspondence(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult("cover")
    with _Timer(res, "assemble"):
        spec, op, model = build_cover(cfg)
    tol = cfg.get_positive("tolerances", "correspondence", 1e-10)
    kind = cfg.raw("cover", "operator", "laplacian").strip()
    if spec.finite:
        spread = float(np.abs(op.matrix()).sum(axis=1).max())
        if kind == "callias":
            # counting needs a self-adjoint operator: compare on D_F* D_F
            lam = cfg.lambda_grid(0.0, spread ** 2 + 0.1)
            with _Timer(res, "counting"):
                scaled, counts = _gram_counts(spec, op, lam)
        else:
            lam = cfg.lambda_grid(-0.1, spread + 0.1)
            with _Timer(res, "counting"):
                cmp = covers.compare_counting(spec, op, lam)
            scaled, counts = cmp.bundle_scaled, cmp.lift_counts
            dist = covers.spectral_distance(spec, op)
            res.check("bundle and lift have the same distinct eigenvalues", dist <= tol, f"distance {dist:.3g}")
        dev = float(np.abs(scaled - counts).max())
        res.check("|Gamma| N_tau(bundle) = lifted eigenvalue count", dev <= tol,
                  f"max deviation {dev} over {lam.size} lambdas")
        res.curves += [(l, n / spec.deck.order, "", "all") for l, n in zip(lam, scaled)]
        lifted = covers.lift_operator(spec, op)
        resid = covers.deck_equivariance_residual(spec, lifted)
        res.check("lift commutes with the deck action", resid <= 1e-12, f"residual {resid:.3g}")
        with _Timer(res, "index"):
            ic = covers.compare_index(spec, op)
        res.check("bundle tau-index = lifted index / |Gamma|", ic.deviation <= 1e-8,
                  f"bundle {ic.bundle.ind_tau}, lift {ic.lift.ind_tau}, |Gamma| {ic.order}")
        res.index_rows.append(_report_row(ic.bundle, 0, "bundle", ""))
        res.index_rows.append(_report_row(ic.lift, 1, "lift", ""))
        res.summary = {"deck_order": spec.deck.order, "sites": spec.n_sites, "closed": spec.closed,
                       "cocycle": list(spec.cocycle), "operator": kind, "bundle_index": ic.bundle.ind_tau,
                       "lift_index": ic.lift.ind_tau, "equivariance_residual": resid}
        return res

    family = covers.bloch_decompose(spec, op)
    ms = sorted(int(m) for m in cfg.get_floats("sweep", "quadrature", [64, 256, 1024]))
    probes = cfg.get_floats("sweep", "lambdas", [1.0])
    refinement = []
    with _Timer(res, "quadrature"):
        for m in ms:
            refinement.append({"M": m, "values": [float(v) for v in family.counting_curve(probes, m)]})
    summary: dict[str, Any] = {"quadrature": refinement, "lambdas": probes}
    oracle_ok = kind == "laplacian" and spec.n_sites == 1 and abs(spec.cocycle[0]) == 1
    if oracle_ok:
        weight = float(-op.up[0, 0, 0].real)
        exact = [_arc_length_oracle(l, weight) for l in probes]
        errors = [max(abs(v - e) for v, e in zip(row["values"], exact)) for row in refinement]
        res.check("Bloch counting within 2/M of the arc-length oracle",
                  all(err <= 2.0 / m for err, m in zip(errors, ms)), f"errors {errors} for M={ms}")
        summary.update(oracle=exact, errors=errors)
    if len(ms) >= 2:
        steps = [max(abs(a - b) for a, b in zip(r1["values"], r0["values"]))
                 for r0, r1 in zip(refinement, refinement[1:])]
        res.check("quadrature refinement differences shrink", all(s <= 2.0 / m for s, m in zip(steps, ms)),
                  f"|N^(M') - N^(M)| = {steps}")
        summary["refinement_steps"] = steps
    if kind == "callias":
        ind = family.index(ms[-1])
        res.check("Bloch quadrature index within 2/M of an integer", abs(ind - round(ind)) <= 2.0 / ms[-1],
                  f"index {ind} at M={ms[-1]}")
        summary["bloch_index"] = ind
    grid = cfg.lambda_grid(-0.5, float(np.abs(family(0.0)).sum(axis=1).max()) + 0.5)
    res.curves += [(l, n, "", "all") for l, n in zip(grid, family.counting_curve(grid, ms[-1]))]
    res.summary = summary
    return res


def _gram_counts(spec, op: covers.NeighbourOperator, lambdas) -> tuple[np.ndarray, np.ndarray]:
    """``|Gamma| N_tau(lam; B* B)`` for the bundle and the lifted count of ``L* L``."""
    bundle = covers.bundle_operator(spec, op)
    lifted = covers.lift_operator(spec, op)
    gb = bundle.H @ bundle
    scaled = spec.deck.order * counting_curve(gb, lambdas).values
    tol = eigenvalue_tol(gb)
    counts = np.searchsorted(np.linalg.eigvalsh(lifted.conj().T @ lifted), np.asarray(lambdas) + tol, side="right")
    return scaled, counts.astype(float)


# --------------------------------------------------------------------------
# Domain inequality diagnostic
# --------------------------------------------------------------------------

def run_domain_diagnostic(cfg: ExperimentConfig) -> ExperimentResult:
    """Ratios of the domain inequality on the lowest eigenvectors of ``H_V``; reported, not asserted."""
    res = ExperimentResult("diagnostic")
    with _Timer(res, "assemble"):
        model = build_model(cfg)
        algebra, _ = build_algebra(cfg)
        if algebra != TracedAlgebra.scalars():
            raise ConfigError("algebra", "the diagnostic runs over the scalars")
        r = fiber_rank(cfg)
        d = dirac(model, algebra, r)
        v = build_potential(cfg, model, algebra, r)
        if v.q is None:
            raise ConfigError("potential.q", "the diagnostic needs a control function q")
        h = schrodinger(d, v).hat()
    count = cfg.get_int("sweep", "eigenvectors", 20)
    with _Timer(res, "eigensolve"):
        vals, vecs = np.linalg.eigh(h.blocks[0])
    records = []
    with _Timer(res, "diagnostic"):
        for j in range(min(count, vals.size)):
            s = Section.from_hat(model, algebra, r, [vecs[:, j:j + 1]])
            out = domain_inequality_diagnostic(d, v, s)
            records.append({"eigenvalue": float(vals[j]), "lhs": out.lhs, "rhs": out.rhs, "ratio": out.ratio})
    ratios = [rec["ratio"] for rec in records]
    res.check("diagnostic ratios are finite", bool(np.all(np.isfinite(ratios))), f"max ratio {max(ratios):.6g}")
    res.summary = {"lipschitz": v.lipschitz_constant(), "completeness_length": v.completeness_length(),
                   "max_ratio": max(ratios), "records": records}
    return res


RUNNERS = {
    "spectrum": run_spectrum,
    "index": run_index,
    "stability": run_index_stability,
    "counting": run_counting_stabilization,
    "cover": run_cover_correspondence,
    "fredholm": run_fredholm_characterization,
    "diagnostic": run_domain_diagnostic,
}
