"""Schrödinger operators ``H_V = D*D + V`` and Callias operators ``D + F`` on a chain.

Fiber maps (potentials ``V`` and endomorphisms ``F``) are stored as
:class:`SiteField` objects: for every algebra block ``i`` an array of shape
``(N, r n_i, r n_i)`` holding the flattened fiber map at each site.

The tau-index of a truncated Callias operator
---------------------------------------------
A square truncation ``D_F`` of a Callias operator has
``dim ker = dim coker`` for any singular-value threshold, because ``D_F``
and ``D_F*`` share their singular values.  What distinguishes the genuine
kernel of the operator on the whole line from truncation artifacts is where
the near-zero singular vectors live: a genuine kernel vector is
concentrated in the bulk, while the partner created by the Dirichlet cut
sits in the collar next to an end of the chain.  :func:`tau_index` therefore
counts near-kernel directions of ``D_F`` and ``D_F*`` whose mass is mostly
in the bulk.  On operators without a boundary (plain :class:`AMatrix`
input, or ``collar=0``) this is the ordinary thresholded kernel count.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _banded
from .algebra import TracedAlgebra
from .hilbert_module import AMatrix, DEFAULT_TOL_KER, near_kernel
from .lattice import (
    LatticeModel,
    LatticeOperator,
    Section,
    assemble_calD,
    formal_adjoint,
    graded_operator,
)

__all__ = [
    "SiteField",
    "Potential",
    "CalliasEndomorphism",
    "CalliasVerdict",
    "IndexReport",
    "DiagnosticResult",
    "schrodinger",
    "quadratic_form_residual",
    "callias_operator",
    "callias_block",
    "anticommutator",
    "square_decomposition_residual",
    "check_callias_condition",
    "tau_index",
    "localized_index",
    "localized_supertrace",
    "mckean_singer_supertrace",
    "domain_inequality_diagnostic",
    "restriction_map",
    "plateau_cutoff",
]

FIELD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SiteField:
    """A site-diagonal A-linear fiber map ``x -> V(x)`` on ``A^r``."""

    model: LatticeModel
    algebra: TracedAlgebra
    r: int
    values: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        vals = tuple(np.array(v, dtype=complex) for v in self.values)
        for v, n in zip(vals, self.algebra.dims):
            if v.shape != (self.model.N, self.r * n, self.r * n):
                raise ValueError(f"field block shape {v.shape} != ({self.model.N}, {self.r * n}, {self.r * n})")
            v.setflags(write=False)
        if len(vals) != len(self.algebra):
            raise ValueError("one value array per algebra block required")
        object.__setattr__(self, "values", vals)

    # -- generators -------------------------------------------------------
    @classmethod
    def scalar(cls, model, fn: Callable[[np.ndarray], np.ndarray], algebra=None, r: int = 1) -> "SiteField":
        """``f(x) Id``."""
        algebra = algebra or TracedAlgebra.scalars()
        f = np.broadcast_to(np.asarray(fn(model.x), dtype=complex), (model.N,))
        return cls(model, algebra, r,
                   tuple(f[:, None, None] * np.eye(r * n)[None] for n in algebra.dims))

    @classmethod
    def blockwise(cls, model, algebra, fns: Sequence[Callable], r: int = 1) -> "SiteField":
        """Block ``i`` of the algebra carries ``f_i(x) Id``."""
        if len(fns) != len(algebra):
            raise ValueError("need one function per algebra block")
        vals = []
        for fn, n in zip(fns, algebra.dims):
            f = np.broadcast_to(np.asarray(fn(model.x), dtype=complex), (model.N,))
            vals.append(f[:, None, None] * np.eye(r * n)[None])
        return cls(model, algebra, r, tuple(vals))

    @classmethod
    def fiber_diag(cls, model, fns: Sequence[Callable], algebra=None) -> "SiteField":
        """``diag(f_1(x), ..., f_r(x))`` with each entry a scalar of ``A``."""
        algebra = algebra or TracedAlgebra.scalars()
        r = len(fns)
        diag = np.stack([np.broadcast_to(np.asarray(fn(model.x), dtype=complex), (model.N,)) for fn in fns], 1)
        vals = []
        for n in algebra.dims:
            d = np.repeat(diag, n, axis=1)
            vals.append(np.einsum("ij,jk->ijk", d, np.eye(r * n)))
        return cls(model, algebra, r, tuple(vals))

    @classmethod
    def from_function(cls, model, algebra, r, fn: Callable[[float], Sequence[np.ndarray]]) -> "SiteField":
        """``fn(x)`` returns the list of per-block ``(r n_i, r n_i)`` matrices at ``x``."""
        per_site = [fn(x) for x in model.x]
        return cls(model, algebra, r, tuple(np.stack([p[i] for p in per_site]) for i in range(len(algebra))))

    # -- algebra ----------------------------------------------------------
    def __add__(self, other: "SiteField") -> "SiteField":
        return SiteField(self.model, self.algebra, self.r, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: "SiteField") -> "SiteField":
        return SiteField(self.model, self.algebra, self.r, tuple(a - b for a, b in zip(self.values, other.values)))

    def __mul__(self, c) -> "SiteField":
        return SiteField(self.model, self.algebra, self.r, tuple(c * a for a in self.values))

    __rmul__ = __mul__

    @property
    def H(self) -> "SiteField":
        return SiteField(self.model, self.algebra, self.r,
                         tuple(np.conj(np.swapaxes(v, 1, 2)) for v in self.values))

    def compose(self, other: "SiteField") -> "SiteField":
        return SiteField(self.model, self.algebra, self.r, tuple(a @ b for a, b in zip(self.values, other.values)))

    def is_self_adjoint(self, tol: float = FIELD_TOL) -> bool:
        return all(np.abs(v - np.conj(np.swapaxes(v, 1, 2))).max(initial=0.0) <= tol for v in self.values)

    def min_eigenvalues(self) -> np.ndarray:
        """Smallest eigenvalue of the (self-adjoint part of the) fiber map at each site."""
        out = np.full(self.model.N, np.inf)
        for v in self.values:
            herm = 0.5 * (v + np.conj(np.swapaxes(v, 1, 2)))
            out = np.minimum(out, np.linalg.eigvalsh(herm)[:, 0])
        return out

    def site_norms(self) -> np.ndarray:
        out = np.zeros(self.model.N)
        for v in self.values:
            out = np.maximum(out, np.linalg.norm(v, 2, axis=(1, 2)))
        return out

    def operator(self) -> LatticeOperator:
        """The multiplication operator, as a site-diagonal :class:`LatticeOperator`."""
        n_sites, r = self.model.N, self.r
        blocks = []
        for v, n in zip(self.values, self.algebra.dims):
            m = r * n
            flat = np.zeros((n_sites * m, n_sites * m), dtype=complex)
            for j in range(n_sites):
                flat[j * m:(j + 1) * m, j * m:(j + 1) * m] = v[j]
            blocks.append(flat)
        # module index is site * r + fiber, algebra block inner: matches (site, fiber, n) ordering
        return LatticeOperator(self.model, r, AMatrix(self.algebra, n_sites * r, tuple(blocks)), 0)


@dataclass(frozen=True, eq=False)
class Potential:
    """A self-adjoint potential with optional floor certificate and control function ``q``."""

    field: SiteField
    floor: tuple[float, tuple[int, int]] | None = None
    q: np.ndarray | None = None

    def __post_init__(self):
        if not self.field.is_self_adjoint():
            raise ValueError("potential is not self-adjoint")
        if self.floor is not None:
            c, (lo, hi) = self.floor
            outside = np.ones(self.field.model.N, dtype=bool)
            outside[lo:hi] = False
            low = self.field.min_eigenvalues()[outside]
            if low.size and low.min() < c - FIELD_TOL:
                raise ValueError(f"floor certificate violated: min V outside K is {low.min():.6g} < {c}")
        if self.q is not None:
            q = np.asarray(self.q, dtype=float)
            if q.shape != (self.field.model.N,) or np.any(q < 1.0):
                raise ValueError("q must be a per-site function with q >= 1")
            object.__setattr__(self, "q", q)

    @property
    def model(self) -> LatticeModel:
        return self.field.model

    def lipschitz_constant(self) -> float:
        """Lipschitz constant of ``q^{-1/2}`` for the discrete path metric."""
        if self.q is None:
            raise ValueError("no control function q attached")
        return float(np.max(np.abs(np.diff(self.q ** -0.5)) / self.model.edge_lengths))

    def completeness_length(self) -> float:
        """``sum h sqrt(metric / q)``: the chain length in the rescaled metric."""
        if self.q is None:
            raise ValueError("no control function q attached")
        return float(np.sum(self.model.h * np.sqrt(self.model.metric_scale / self.q)))


@dataclass(frozen=True, eq=False)
class CalliasEndomorphism:
    """``F: E+ -> E-`` with ``calF = [[0, F*], [F, 0]]``."""

    F: SiteField

    def curly_f(self) -> LatticeOperator:
        f = self.F.operator()
        fs = self.F.H.operator()
        zero = AMatrix.zeros(f.algebra, f.action.k)
        action = graded_operator(zero, fs.action, f.action, zero)
        return LatticeOperator(f.model, f.r, action, 0, graded=True)

    def curly_f_squared(self) -> tuple[SiteField, SiteField]:
        """Fiberwise ``calF^2 = diag(F* F, F F*)``."""
        return self.F.H.compose(self.F), self.F.compose(self.F.H)


def _check_shapes(d: LatticeOperator, f: SiteField):
    if d.graded:
        raise ValueError("expected the ungraded operator D: E+ -> E-")
    if f.model is not d.model or f.r != d.r or f.algebra != d.algebra:
        raise ValueError("fiber map and operator live on different bundles")


def schrodinger(d: LatticeOperator, v: Potential | SiteField) -> LatticeOperator:
    """``H_V = D* D + V``."""
    fld = v.field if isinstance(v, Potential) else v
    _check_shapes(d, fld)
    if not fld.is_self_adjoint():
        raise ValueError("potential is not self-adjoint")
    return formal_adjoint(d) @ d + fld.operator()


def quadratic_form_residual(d: LatticeOperator, v: Potential | SiteField, s: Section) -> float:
    """``|(H_V s, s) - ||D s||^2 - (V s, s)|``, relative to ``||s||^2 (1 + ||H_V||)``."""
    fld = v.field if isinstance(v, Potential) else v
    h = schrodinger(d, fld)
    lhs = h.apply(s).inner(s)
    ds = d.apply(s)
    rhs = ds.inner(ds) + fld.operator().apply(s).inner(s)
    return abs(lhs - rhs) / (s.inner(s).real * (1.0 + h.norm()) + 1e-300)


def callias_block(d: LatticeOperator, f: CalliasEndomorphism | SiteField) -> LatticeOperator:
    """``D_F = D + F``."""
    fld = f.F if isinstance(f, CalliasEndomorphism) else f
    _check_shapes(d, fld)
    return d + fld.operator()


def callias_operator(d: LatticeOperator, f: CalliasEndomorphism | SiteField) -> LatticeOperator:
    """``calD_F = calD + calF = [[0, D* + F*], [D + F, 0]]``."""
    end = f if isinstance(f, CalliasEndomorphism) else CalliasEndomorphism(f)
    _check_shapes(d, end.F)
    return assemble_calD(d) + end.curly_f()


def anticommutator(d: LatticeOperator, f: CalliasEndomorphism | SiteField) -> LatticeOperator:
    end = f if isinstance(f, CalliasEndomorphism) else CalliasEndomorphism(f)
    cd, cf = assemble_calD(d), end.curly_f()
    return cd @ cf + cf @ cd


def square_decomposition_residual(d: LatticeOperator, f: CalliasEndomorphism | SiteField) -> float:
    """``||calD_F^2 - (calD^2 + {calD, calF} + calF^2)|| / ||calD_F||^2``."""
    end = f if isinstance(f, CalliasEndomorphism) else CalliasEndomorphism(f)
    cd, cf = assemble_calD(d), end.curly_f()
    full = callias_operator(d, end)
    diff = full @ full - (cd @ cd + anticommutator(d, end) + cf @ cf)
    return diff.norm() / max(full.norm() ** 2, 1e-300)


# --------------------------------------------------------------------------
# Callias condition
# --------------------------------------------------------------------------

@dataclass
class CalliasVerdict:
    verdict: str  # "holds", "fails" or "not Callias type"
    epsilon: float
    exceptional_region: tuple[int, int] | None  # half-open site interval, None if empty
    compact_region: tuple[int, int]
    margins: np.ndarray = field(repr=False)
    boundary_sites: tuple[int, ...]
    symbol_residual: float

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def _site_blocks(op: LatticeOperator, offset: int) -> list[np.ndarray]:
    """Per-block arrays ``(N - |offset|, m, m)`` of the site sub-blocks ``T[j, j + offset]``."""
    n_sites, r = op.model.N, op.r
    out = []
    for b, n in zip(op.action.blocks, op.algebra.dims):
        m = r * n
        rows = np.arange(max(0, -offset), min(n_sites, n_sites - offset))
        out.append(b.reshape(n_sites, m, n_sites, m)[rows, :, rows + offset, :])
    return out


def _absorbed_anticommutator(d: LatticeOperator, fld: SiteField) -> tuple[np.ndarray, np.ndarray]:
    """Per-site norms of the multiplication part of ``{calD, calF}`` on E+ and E-.

    Every edge term is moved onto the row's own site (the action on a locally
    constant section), which leaves the discrete derivative of ``F``.
    """
    fo, fso = fld.operator(), fld.H.operator()
    ds = formal_adjoint(d)
    plus = ds @ fo + fso @ d   # D* F + F* D on E+
    minus = d @ fso + fo @ ds  # D F* + F D* on E-
    norms = []
    for op in (plus, minus):
        total = None
        for off in (-2, -1, 0, 1, 2):
            parts = _site_blocks(op, off)
            padded = []
            for p in parts:
                full = np.zeros((op.model.N,) + p.shape[1:], dtype=complex)
                full[max(0, -off):max(0, -off) + p.shape[0]] = p
                padded.append(full)
            total = padded if total is None else [t + p for t, p in zip(total, padded)]
        site_norm = np.zeros(op.model.N)
        for t in total:
            site_norm = np.maximum(site_norm, np.linalg.norm(t, 2, axis=(1, 2)))
        norms.append(site_norm)
    return norms[0], norms[1]


def check_callias_condition(d: LatticeOperator, f: CalliasEndomorphism | SiteField, epsilon: float,
                            compact_region: tuple[int, int] | None = None,
                            symbol_tol: float = 1e-10) -> CalliasVerdict:
    """Check ``calF^2(x) >= ||{calD, calF}(x)|| + eps`` away from a compact region.

    The first and last sites carry the Dirichlet cut and are reported but
    excluded.  The verdict is ``holds`` iff the symbol anticommutes with
    ``calF`` and every interior site where the margin falls below ``eps``
    lies inside the compact region.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    end = f if isinstance(f, CalliasEndomorphism) else CalliasEndomorphism(f)
    fld = end.F
    _check_shapes(d, fld)
    model = d.model
    region = model.compact_region if compact_region is None else compact_region

    # symbol of D at site j is its hopping block B_j = D[j, j+1]; need B*F = F*B and B F* = F B*
    hop = _site_blocks(d, 1)
    residual = 0.0
    for b, fv in zip(hop, fld.values):
        fj = fv[:-1]
        bh, fh = np.conj(np.swapaxes(b, 1, 2)), np.conj(np.swapaxes(fj, 1, 2))
        scale = 1.0 + np.abs(b).max() * (1.0 + np.abs(fj).max())
        residual = max(residual,
                       np.abs(bh @ fj - fh @ b).max(initial=0.0) / scale,
                       np.abs(b @ fh - fj @ bh).max(initial=0.0) / scale)
    boundary = (0, model.N - 1)
    fsq_plus, fsq_minus = end.curly_f_squared()
    floor = np.minimum(fsq_plus.min_eigenvalues(), fsq_minus.min_eigenvalues())
    n_plus, n_minus = _absorbed_anticommutator(d, fld)
    margins = floor - np.maximum(n_plus, n_minus)

    if residual > symbol_tol:
        return CalliasVerdict("not Callias type", epsilon, None, region, margins, boundary, residual)
    interior = np.ones(model.N, dtype=bool)
    interior[list(boundary)] = False
    failing = np.flatnonzero(interior & ~(margins >= epsilon))
    if failing.size == 0:
        return CalliasVerdict("holds", epsilon, None, region, margins, boundary, residual)
    exceptional = (int(failing[0]), int(failing[-1]) + 1)
    ok = region[0] <= exceptional[0] and exceptional[1] <= region[1]
    return CalliasVerdict("holds" if ok else "fails", epsilon, exceptional, region, margins, boundary, residual)


# --------------------------------------------------------------------------
# tau-index
# --------------------------------------------------------------------------

@dataclass
class IndexReport:
    ind_tau: float
    dim_ker: float
    dim_coker: float
    gap_plus: float | None
    gap_minus: float | None
    mckean_singer: float
    heat_time: float
    threshold: float
    discrepancy_bound: float
    ambiguous: bool
    raw_dim_ker: float
    raw_dim_coker: float
    collar: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _bulk_weights(t, collar: float | None) -> tuple[AMatrix, list[np.ndarray] | None, float | None]:
    """Orthonormal-frame matrix and, for lattice operators, per-block bulk indicators."""
    if isinstance(t, AMatrix):
        return t, None, None
    model = t.model
    if collar is None:
        collar = 0.25 * float(model.edge_lengths.sum())
    if collar <= 0:
        return t.hat(), None, 0.0
    mask = np.repeat(model.bulk_mask(collar), t.r).astype(float)
    if t.graded:
        mask = np.tile(mask, 2)
    return t.hat(), [np.repeat(mask, n) for n in t.algebra.dims], collar


def _localized_count(vecs: np.ndarray, chi: np.ndarray | None) -> tuple[int, float]:
    """Number of bulk directions in ``span(vecs)`` and the localization leakage."""
    if vecs.shape[1] == 0:
        return 0, 0.0
    if chi is None:
        return vecs.shape[1], 0.0
    g = np.linalg.eigvalsh(vecs.conj().T @ (chi[:, None] * vecs))
    return int(np.count_nonzero(g > 0.5)), float(np.minimum(g, 1.0 - g).clip(0).sum())


HEAT_CUTOFF = 40.0


def localized_supertrace(a: AMatrix, masks: Sequence[np.ndarray] | None, heat_time: float) -> float:
    """``Tr_tau(chi e^{-t B* B}) - Tr_tau(chi e^{-t B B*})`` for per-block diagonal masks ``chi``."""
    if not heat_time > 0:
        raise ValueError("heat time must be positive")
    total = 0.0
    for i, (w, b) in enumerate(zip(a.algebra.weights, a.blocks)):
        chi = None if masks is None else masks[i]
        bh = b.conj().T
        for sign, gram in ((1.0, _banded.matmul(bh, b)), (-1.0, _banded.matmul(b, bh))):
            gram = 0.5 * (gram + gram.conj().T)
            if _banded.use_banded(gram):
                # e^{-40} is far below every tolerance in play
                hi = HEAT_CUTOFF / heat_time
                vals, vecs = _banded.eigh_in(gram, -1e-8 * (1.0 + hi), hi)
            else:
                vals, vecs = np.linalg.eigh(gram)
            heat = np.exp(-heat_time * np.clip(vals, 0, None))
            mass = np.ones_like(vals) if chi is None else np.einsum("ij,i,ij->j", vecs.conj(), chi, vecs).real
            total += sign * w * float(np.sum(heat * mass))
    return total


def mckean_singer_supertrace(t, heat_time: float, collar: float | None = None) -> float:
    """``Tr_tau(chi e^{-t D_F* D_F}) - Tr_tau(chi e^{-t D_F D_F*})``.

    ``chi`` is the bulk indicator for lattice operators (see :func:`tau_index`)
    and the identity for plain :class:`AMatrix` input, in which case the value
    is exactly the difference of module ranks, i.e. zero.
    """
    a, chis, _ = _bulk_weights(t, collar)
    return localized_supertrace(a, chis, heat_time)


def localized_index(a: AMatrix, masks: Sequence[np.ndarray] | None = None,
                    tol_ker: float = DEFAULT_TOL_KER, heat_time: float | None = None,
                    collar: float | None = None) -> IndexReport:
    """Index of ``a`` counting only near-kernel directions mostly inside ``masks``.

    ``masks[i]`` is a 0/1 diagonal on flattened block ``i``; ``None`` counts
    every near-kernel direction.  ``collar`` is only recorded in the report.
    """
    if not tol_ker > 0:
        raise ValueError("tol_ker must be positive")
    thr = tol_ker * a.norm()
    dim_ker = dim_coker = raw_ker = raw_coker = 0.0
    leakage = 0.0
    near_total = 0
    above, ambiguous = [], False
    for i, (w, b) in enumerate(zip(a.algebra.weights, a.blocks)):
        nkr = near_kernel(b, thr)
        count = nkr.right.shape[1]
        near_total += count
        chi = None if masks is None else masks[i]
        nk, lk = _localized_count(nkr.right, chi)
        nc, lc = _localized_count(nkr.left, chi)
        dim_ker += w * nk
        dim_coker += w * nc
        raw_ker += w * count
        raw_coker += w * nkr.left.shape[1]
        leakage += w * (lk + lc)
        if nkr.gap is not None:
            above.append(nkr.gap)
        ambiguous = ambiguous or nkr.ambiguous
    gap = float(min(above)) if above else None
    if heat_time is None:
        heat_time = 12.0 * np.log(10.0) / gap ** 2 if gap else 1.0
    ms = localized_supertrace(a, masks, heat_time)
    total_dim = sum(b.shape[0] for b in a.blocks)
    tail = total_dim * np.exp(-heat_time * gap ** 2) if gap else 0.0
    bound = leakage + heat_time * thr ** 2 * near_total + tail + 1e-12 * total_dim
    return IndexReport(
        ind_tau=dim_ker - dim_coker,
        dim_ker=dim_ker,
        dim_coker=dim_coker,
        gap_plus=gap,
        gap_minus=gap,
        mckean_singer=ms,
        heat_time=float(heat_time),
        threshold=float(thr),
        discrepancy_bound=float(bound),
        ambiguous=ambiguous,
        raw_dim_ker=raw_ker,
        raw_dim_coker=raw_coker,
        collar=collar,
    )


def tau_index(t, tol_ker: float = DEFAULT_TOL_KER, collar: float | None = None,
              heat_time: float | None = None) -> IndexReport:
    """``ind_tau = dim_tau ker D_F - dim_tau ker D_F*`` with a McKean-Singer cross-check.

    ``t`` is the ungraded block ``D_F`` (a :class:`LatticeOperator`) or any
    :class:`AMatrix`.  Near-kernel directions are singular vectors with
    ``sigma <= tol_ker * ||D_F||``; for lattice operators only those with
    more than half their mass outside the end collars are counted.
    """
    a, chis, collar_used = _bulk_weights(t, collar)
    return localized_index(a, chis, tol_ker, heat_time, collar_used)


# --------------------------------------------------------------------------
# Diagnostics around the finiteness argument
# --------------------------------------------------------------------------

@dataclass
class DiagnosticResult:
    lhs: float
    rhs: float
    ratio: float
    lipschitz: float


def domain_inequality_diagnostic(d: LatticeOperator, v: Potential, s: Section) -> DiagnosticResult:
    """Evaluate ``||q^{-1/2} D s||^2`` against ``2((1 + 2L^2)||s||^2 + ||s|| ||H_V s||)``.

    Diagnostic only: the ratio ``lhs / rhs`` is reported, not asserted.
    """
    if v.q is None:
        raise ValueError("potential carries no q-certificate")
    if np.any(v.field.min_eigenvalues() < -v.q - FIELD_TOL):
        raise ValueError("V >= -q Id is violated")
    lip = v.lipschitz_constant()
    ds = d.apply(s).scale_sites(v.q ** -0.5)
    lhs = ds.inner(ds).real
    h = schrodinger(d, v)
    ns = s.norm()
    rhs = 2.0 * ((1.0 + 2.0 * lip ** 2) * ns ** 2 + ns * h.apply(s).norm())
    ratio = lhs / rhs if rhs > 0 else 0.0
    return DiagnosticResult(float(lhs), float(rhs), float(ratio), lip)


def plateau_cutoff(v: Potential | SiteField, lam1: float, c: float) -> np.ndarray:
    """``phi = 1`` where ``V < lam1``, ``0`` where ``V >= c``, linear in ``min V`` between."""
    if not lam1 < c:
        raise ValueError("need lam1 < C")
    fld = v.field if isinstance(v, Potential) else v
    low = fld.min_eigenvalues()
    return np.clip((c - low) / (c - lam1), 0.0, 1.0)


def restriction_map(s: Section, phi: np.ndarray) -> Section:
    """``rho(s) = phi s``."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (s.model.N,):
        raise ValueError("cutoff must have one value per site")
    return s.scale_sites(phi)
