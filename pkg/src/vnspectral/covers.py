"""Galois covers of a chain or cycle and their bundle description.

A cover is encoded by an edge cocycle: edge ``j`` joins base sites ``j`` and
``j + 1`` (mod ``N`` on a cycle) and carries a deck-group label ``g_j``.  A
section of the cover is a function ``psi(gamma, j)``; the lifted operator
couples ``(gamma, j)`` to ``(gamma g_j, j + 1)``.  Lifted coordinates are
ordered sheet-major: ``(gamma * N + j) * r + fiber``.

Writing ``(R_g u)(gamma) = u(gamma g)``, the lift is
``sum_g R_g (x) C_g``, where ``C_g`` collects the base couplings labelled
``g``.  Replacing ``R_g`` by its image in the group von Neumann algebra gives
the bundle operator.  For the deck group ``Z`` the same substitution with
``R_w -> e^{i theta w}`` gives the Bloch family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import FiniteGroup, GroupAlgebra, TracedAlgebra, group_algebra
from .callias import IndexReport, localized_index
from .hilbert_module import AMatrix, DEFAULT_TOL_KER, counting_curve, eigenvalue_tol
from .lattice import LatticeModel, LatticeOperator

__all__ = [
    "Z",
    "CoverSpec",
    "NeighbourOperator",
    "cycle_laplacian",
    "cycle_callias",
    "lift_operator",
    "deck_permutations",
    "deck_equivariance_residual",
    "bundle_operator",
    "BlochFamily",
    "bloch_decompose",
    "CountingComparison",
    "compare_counting",
    "spectral_distance",
    "IndexComparison",
    "compare_index",
    "DEFAULT_QUADRATURE",
]

Z = "Z"
DEFAULT_QUADRATURE = 256
EQUIVARIANCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CoverSpec:
    """A cover of an ``N``-site cycle (``closed``) or path, given by an edge cocycle.

    ``deck`` is a :class:`FiniteGroup` (labels are element indices) or the
    string ``"Z"`` (labels are integer windings).
    """

    n_sites: int
    deck: FiniteGroup | str
    cocycle: tuple[int, ...]
    closed: bool = True
    model: LatticeModel | None = field(default=None, repr=False)

    def __post_init__(self):
        cocycle = tuple(int(c) for c in self.cocycle)
        object.__setattr__(self, "cocycle", cocycle)
        if self.n_sites < 1:
            raise ValueError("a cover needs at least one base site")
        if len(cocycle) != self.n_edges:
            raise ValueError(f"cocycle has {len(cocycle)} labels for {self.n_edges} edges")
        if self.model is not None and self.model.N != self.n_sites:
            raise ValueError("model size does not match n_sites")
        if isinstance(self.deck, FiniteGroup):
            bad = [c for c in cocycle if not 0 <= c < self.deck.order]
            if bad:
                raise ValueError(f"cocycle labels {bad} are not elements of a group of order {self.deck.order}")
        elif self.deck != Z:
            raise ValueError(f"deck must be a FiniteGroup or 'Z', got {self.deck!r}")

    @property
    def n_edges(self) -> int:
        return self.n_sites if self.closed else self.n_sites - 1

    @property
    def finite(self) -> bool:
        return isinstance(self.deck, FiniteGroup)

    def edges(self) -> list[tuple[int, int, int]]:
        """``(j, j + 1 mod N, label)`` for every edge."""
        return [(j, (j + 1) % self.n_sites, c) for j, c in enumerate(self.cocycle)]

    @classmethod
    def trivial(cls, n_sites: int, deck: FiniteGroup | str, closed: bool = True, model=None) -> "CoverSpec":
        n_edges = n_sites if closed else n_sites - 1
        zero = deck.identity_index if isinstance(deck, FiniteGroup) else 0
        return cls(n_sites, deck, (zero,) * n_edges, closed, model)


@dataclass(frozen=True, eq=False)
class NeighbourOperator:
    """Nearest-neighbour operator on a cycle or path with ``r x r`` site blocks.

    ``diag[j]`` acts at site ``j``; on edge ``j`` joining ``j`` and ``j'``,
    ``up[j]`` is the ``(j, j')`` block and ``down[j]`` the ``(j', j)`` block.
    """

    diag: np.ndarray
    up: np.ndarray
    down: np.ndarray
    closed: bool = True

    def __post_init__(self):
        for name in ("diag", "up", "down"):
            a = np.array(getattr(self, name), dtype=complex)
            if a.ndim != 3 or a.shape[1] != a.shape[2]:
                raise ValueError(f"{name} must have shape (count, r, r)")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        n_edges = self.n_sites if self.closed else self.n_sites - 1
        if self.up.shape != (n_edges, self.r, self.r) or self.down.shape != self.up.shape:
            raise ValueError(f"expected {n_edges} edge blocks of size {self.r}")

    @property
    def n_sites(self) -> int:
        return self.diag.shape[0]

    @property
    def r(self) -> int:
        return self.diag.shape[1]

    @classmethod
    def from_lattice_operator(cls, op: LatticeOperator) -> "NeighbourOperator":
        """Path operator from a scalar-algebra lattice operator (orthonormal frame)."""
        if op.algebra != TracedAlgebra.scalars() or op.graded:
            raise ValueError("only ungraded operators over the scalars can be lifted")
        n, r = op.model.N, op.r
        m = op.hat().blocks[0]
        sites = np.arange(n * r) // r
        rows, cols = np.nonzero(m)
        if rows.size and np.abs(sites[rows] - sites[cols]).max() > 1:
            raise ValueError("cocycle/operator locality mismatch: operator is not nearest-neighbour")
        blocks = m.reshape(n, r, n, r)
        diag = np.stack([blocks[j, :, j, :] for j in range(n)])
        up = np.stack([blocks[j, :, j + 1, :] for j in range(n - 1)]) if n > 1 else np.zeros((0, r, r))
        down = np.stack([blocks[j + 1, :, j, :] for j in range(n - 1)]) if n > 1 else np.zeros((0, r, r))
        return cls(diag, up, down, closed=False)

    def couplings(self) -> list[tuple[int, int, int, bool, np.ndarray]]:
        """``(row site, col site, edge, forward, block)``; edge ``-1`` marks on-site terms."""
        out = [(j, j, -1, True, self.diag[j]) for j in range(self.n_sites)]
        for e in range(self.up.shape[0]):
            a, b = e, (e + 1) % self.n_sites
            out.append((a, b, e, True, self.up[e]))
            out.append((b, a, e, False, self.down[e]))
        return out

    def matrix(self) -> np.ndarray:
        """The base operator as an ordinary ``(N r) x (N r)`` matrix."""
        return _assemble(self, lambda e, forward: None)[None]

    @property
    def H(self) -> "NeighbourOperator":
        return NeighbourOperator(self.diag.conj().transpose(0, 2, 1), self.down.conj().transpose(0, 2, 1),
                                 self.up.conj().transpose(0, 2, 1), self.closed)


def _assemble(op: NeighbourOperator, label) -> dict:
    """Group couplings into coefficient matrices keyed by ``label(edge, forward)``."""
    n, r = op.n_sites, op.r
    out: dict = {}
    for row, col, e, forward, block in op.couplings():
        key = label(e, forward)
        m = out.setdefault(key, np.zeros((n * r, n * r), dtype=complex))
        m[row * r:(row + 1) * r, col * r:(col + 1) * r] += block
    return out


def cycle_laplacian(n_sites: int, weights: Sequence[float] | float = 1.0, r: int = 1) -> NeighbourOperator:
    """Graph Laplacian ``sum_e w_e (delta_j - delta_j')^2`` on an ``n_sites`` cycle."""
    w = np.broadcast_to(np.asarray(weights, dtype=float), (n_sites,))
    eye = np.eye(r)
    deg = w + np.roll(w, 1)
    return NeighbourOperator(deg[:, None, None] * eye, -w[:, None, None] * eye, -w[:, None, None] * eye)


def cycle_callias(n_sites: int, h: float, f_values: np.ndarray) -> NeighbourOperator:
    """Periodic forward difference plus an on-site scalar ``F``."""
    f = np.asarray(f_values, dtype=float).reshape(n_sites)
    c = 1.0 / h
    return NeighbourOperator((f - c)[:, None, None], np.full((n_sites, 1, 1), c), np.zeros((n_sites, 1, 1)))


def _check_pair(spec: CoverSpec, op) -> NeighbourOperator:
    if isinstance(op, LatticeOperator):
        op = NeighbourOperator.from_lattice_operator(op)
    if op.n_sites != spec.n_sites or op.closed != spec.closed:
        raise ValueError("cocycle/operator locality mismatch: base shapes differ")
    return op


def _finite_pieces(spec: CoverSpec, op: NeighbourOperator) -> dict[int, np.ndarray]:
    """Coefficient matrices ``C_g`` keyed by group element."""
    g = spec.deck
    labels = spec.cocycle

    def label(e, forward):
        if e < 0:
            return g.identity_index
        return labels[e] if forward else g.inverse(labels[e])

    return _assemble(op, label)


def lift_operator(spec: CoverSpec, op: NeighbourOperator) -> np.ndarray:
    """The ordinary operator on the ``|Gamma|``-sheeted cover, sheet-major.

    Deck equivariance is checked before returning.
    """
    if not spec.finite:
        raise ValueError("lift_operator needs a finite deck group; use bloch_decompose for Z")
    op = _check_pair(spec, op)
    out = sum(np.kron(spec.deck.right_regular(g), c) for g, c in _finite_pieces(spec, op).items())
    residual = deck_equivariance_residual(spec, out)
    if residual > EQUIVARIANCE_TOL:
        raise RuntimeError(f"lift is not deck-equivariant (residual {residual:.3g})")
    return out


def deck_permutations(spec: CoverSpec, r: int) -> list[np.ndarray]:
    """Index permutations of the left deck action ``psi(gamma, j) -> psi(delta^{-1} gamma, j)``."""
    g = spec.deck
    block = spec.n_sites * r
    local = np.arange(block)
    perms = []
    for delta in range(g.order):
        sheets = g.mult_table[g.inverse(delta)]
        perms.append((sheets[:, None] * block + local[None, :]).ravel())
    return perms


def deck_equivariance_residual(spec: CoverSpec, lifted: np.ndarray) -> float:
    r = lifted.shape[0] // (spec.n_sites * spec.deck.order)
    return max(float(np.abs(lifted[np.ix_(p, p)] - lifted).max(initial=0.0)) for p in deck_permutations(spec, r))


def bundle_operator(spec: CoverSpec, op: NeighbourOperator, ga: GroupAlgebra | None = None) -> AMatrix:
    """The same data as an operator on ``A^{N r}`` over the group von Neumann algebra."""
    if not spec.finite:
        raise ValueError("bundle_operator needs a finite deck group")
    op = _check_pair(spec, op)
    ga = group_algebra(spec.deck) if ga is None else ga
    pieces = _finite_pieces(spec, op)
    blocks = []
    for i, n in enumerate(ga.algebra.dims):
        blocks.append(sum(np.kron(c, ga.element(g).block_data[i]) for g, c in pieces.items()))
    return AMatrix(ga.algebra, op.n_sites * op.r, tuple(blocks))


# --------------------------------------------------------------------------
# Deck group Z
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlochFamily:
    """``T(theta) = sum_w C_w e^{i theta w}`` for finitely many windings ``w``."""

    coefficients: dict[int, np.ndarray]
    mask: np.ndarray | None = None

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("empty Fourier support")
        shapes = {c.shape for c in self.coefficients.values()}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise ValueError("Fourier coefficients must be square matrices of one shape")

    @property
    def size(self) -> int:
        return next(iter(self.coefficients.values())).shape[0]

    @cached_property
    def hermitian(self) -> bool:
        """``T(theta)`` Hermitian for all theta, i.e. ``C_{-w} = C_w^*``."""
        return all(np.allclose(c, self.coefficients.get(-w, np.zeros_like(c)).conj().T, atol=1e-12, rtol=0)
                   for w, c in self.coefficients.items())

    def __call__(self, theta: float) -> np.ndarray:
        return sum(c * np.exp(1j * theta * w) for w, c in self.coefficients.items())

    @staticmethod
    def nodes(m: int) -> np.ndarray:
        """Uniform quadrature nodes ``2 pi k / M``."""
        if m < 1:
            raise ValueError("quadrature size must be positive")
        return 2.0 * np.pi * np.arange(m) / m

    def _require_hermitian(self):
        if not self.hermitian:
            raise ValueError("counting needs a Hermitian family")

    def counting_curve(self, lambdas: Sequence[float], m: int = DEFAULT_QUADRATURE) -> np.ndarray:
        """``N_tau(lam) = (1/M) sum_k #{eig T(theta_k) <= lam}`` on a grid."""
        self._require_hermitian()
        lambdas = np.asarray(lambdas, dtype=float)
        total = np.zeros_like(lambdas)
        for theta in self.nodes(m):
            t = self(theta)
            tol = 1e-9 * (1.0 + np.linalg.norm(t, 2))
            vals = np.linalg.eigvalsh(0.5 * (t + t.conj().T))
            total += np.searchsorted(vals, lambdas + tol, side="right")
        return total / m

    def counting(self, lam: float, m: int = DEFAULT_QUADRATURE) -> float:
        return float(self.counting_curve([lam], m)[0])

    def index(self, m: int = DEFAULT_QUADRATURE, tol_ker: float = DEFAULT_TOL_KER) -> float:
        """Quadrature average of the (bulk-localized) index of ``T(theta)``."""
        scalars = TracedAlgebra.scalars()
        masks = None if self.mask is None else [self.mask]
        vals = [localized_index(AMatrix(scalars, self.size, (self(theta),)), masks, tol_ker).ind_tau
                for theta in self.nodes(m)]
        return float(np.mean(vals))


def bloch_decompose(spec: CoverSpec, op: NeighbourOperator, mask: np.ndarray | None = None) -> BlochFamily:
    """Substitute ``e^{i theta w}`` for the deck generators of a ``Z``-cover."""
    if spec.deck != Z:
        raise ValueError("bloch_decompose needs deck group Z")
    if not spec.closed:
        raise ValueError("bloch_decompose needs a cycle base")
    op = _check_pair(spec, op)
    labels = spec.cocycle

    def label(e, forward):
        if e < 0:
            return 0
        return labels[e] if forward else -labels[e]

    return BlochFamily(_assemble(op, label), mask)


# --------------------------------------------------------------------------
# Cross-checks between the two pictures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CountingComparison:
    lambdas: np.ndarray
    bundle_scaled: np.ndarray  # |Gamma| N_tau(lam; bundle)
    lift_counts: np.ndarray
    max_deviation: float


def compare_counting(spec: CoverSpec, op: NeighbourOperator, lambdas: Sequence[float],
                     ga: GroupAlgebra | None = None) -> CountingComparison:
    """``|Gamma| N_tau(lam; bundle)`` against the lifted eigenvalue count."""
    order = spec.deck.order
    bundle = bundle_operator(spec, op, ga)
    lifted = lift_operator(spec, op)
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    scaled = order * counting_curve(bundle, lambdas).values
    tol = eigenvalue_tol(bundle)
    counts = np.searchsorted(np.linalg.eigvalsh(0.5 * (lifted + lifted.conj().T)), lambdas + tol, side="right")
    return CountingComparison(lambdas, scaled, counts.astype(float), float(np.abs(scaled - counts).max(initial=0.0)))


def _distinct(vals: np.ndarray, tol: float) -> np.ndarray:
    vals = np.sort(vals)
    keep = np.concatenate([[True], np.diff(vals) > tol]) if vals.size else vals.astype(bool)
    return vals[keep]


def spectral_distance(spec: CoverSpec, op: NeighbourOperator, ga: GroupAlgebra | None = None,
                      tol: float = 1e-10) -> float:
    """Hausdorff distance between the distinct eigenvalues of bundle and lift."""
    bundle = bundle_operator(spec, op, ga)
    lifted = lift_operator(spec, op)
    a = _distinct(np.concatenate([np.linalg.eigvalsh(0.5 * (b + b.conj().T)) for b in bundle.blocks]), tol)
    b = _distinct(np.linalg.eigvalsh(0.5 * (lifted + lifted.conj().T)), tol)
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class IndexComparison:
    bundle: IndexReport
    lift: IndexReport
    order: int

    @property
    def deviation(self) -> float:
        return abs(self.bundle.ind_tau - self.lift.ind_tau / self.order)


def compare_index(spec: CoverSpec, op: NeighbourOperator, collar: float | None = None,
                  ga: GroupAlgebra | None = None, tol_ker: float = DEFAULT_TOL_KER) -> IndexComparison:
    """Bundle tau-index against lifted index / ``|Gamma|``.

    On a path base with a model, near-kernel directions are localized away
    from collars of width ``collar`` (default a quarter of the length) at
    both ends, exactly as for :func:`tau_index`; cycles have no boundary.
    """
    op = _check_pair(spec, op)
    bundle = bundle_operator(spec, op, ga)
    lifted = lift_operator(spec, op)
    order = spec.deck.order
    site_mask = None
    if not spec.closed and spec.model is not None:
        if collar is None:
            collar = 0.25 * float(spec.model.edge_lengths.sum())
        if collar > 0:
            site_mask = np.repeat(spec.model.bulk_mask(collar), op.r).astype(float)
    bmasks = None if site_mask is None else [np.repeat(site_mask, n) for n in bundle.algebra.dims]
    lmask = None if site_mask is None else [np.tile(site_mask, order)]
    rep_b = localized_index(bundle, bmasks, tol_ker, collar=collar)
    rep_l = localized_index(AMatrix(TracedAlgebra.scalars(), lifted.shape[0], (lifted,)), lmask, tol_ker,
                            collar=collar)
    return IndexComparison(rep_b, rep_l, order)
