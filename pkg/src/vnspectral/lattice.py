"""Discretized one-dimensional model manifolds.

Sections over a chain of ``N`` sites take values in the free module
``A^r``; operators are stored as :class:`AMatrix` objects of rank ``N r``
(or ``2 N r`` for graded operators on ``E+ (+) E-``) with module index
``grade * N * r + site * r + fiber``.

Operators are kept in the *natural frame*, acting on the site values
``s(x_j)``.  The L^2 inner product carries the measure weights
``mu_j``, so spectral computations go through :meth:`LatticeOperator.hat`,
the unitarily equivalent matrix ``M^{1/2} T M^{-1/2}`` in an orthonormal
frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algebra import TracedAlgebra
from .hilbert_module import AMatrix

__all__ = [
    "LatticeModel",
    "LatticeOperator",
    "Section",
    "dirac",
    "formal_adjoint",
    "assemble_calD",
    "cutoff_sequence",
    "multiplication_commutator",
    "site_multiplication",
    "bandwidth_of",
]


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """A chain of sites with measure weights, metric weights and a compact region.

    ``compact_region`` is a half-open site interval ``(start, stop)``.
    """

    N: int
    h: float
    mu: np.ndarray = field(default=None, repr=False)
    metric_scale: np.ndarray = field(default=None, repr=False)
    compact_region: tuple[int, int] = None
    origin: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("a lattice model needs at least two sites")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        for name in ("mu", "metric_scale"):
            arr = getattr(self, name)
            arr = np.ones(self.N) if arr is None else np.array(arr, dtype=float)
            if arr.shape != (self.N,):
                raise ValueError(f"{name} must have one entry per site")
            if not np.all(arr > 0):
                raise ValueError(f"{name} must be positive")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        region = self.compact_region
        if region is None:
            region = (self.N // 4, self.N - self.N // 4)
        region = (int(region[0]), int(region[1]))
        if not 0 <= region[0] <= region[1] <= self.N:
            raise ValueError(f"compact region {region} not inside [0, {self.N})")
        object.__setattr__(self, "compact_region", region)

    # -- generators -----------------------------------------------------
    @classmethod
    def interval(cls, a: float, b: float, h: float, compact: tuple[float, float] | None = None,
                 mu: str | Callable | None = None, metric: str | Callable | None = None) -> "LatticeModel":
        """Sites ``a, a+h, ..., b`` with an optional compact region ``[c0, c1]`` in x-units."""
        n = int(round((b - a) / h)) + 1
        x = a + h * np.arange(n)
        region = None
        if compact is not None:
            inside = np.flatnonzero((x >= compact[0] - 1e-12) & (x <= compact[1] + 1e-12))
            region = (int(inside[0]), int(inside[-1]) + 1) if inside.size else (0, 0)
        return cls(n, h, _weights(mu, x), _weights(metric, x), region, a)

    @classmethod
    def uniform(cls, N: int, h: float = 1.0, origin: float = 0.0,
                compact_region: tuple[int, int] | None = None) -> "LatticeModel":
        return cls(N, h, None, None, compact_region, origin)

    # -- geometry ---------------------------------------------------------
    @property
    def x(self) -> np.ndarray:
        return self.origin + self.h * np.arange(self.N)

    @property
    def edge_coefficients(self) -> np.ndarray:
        """Forward-difference coefficients ``1 / (h sqrt(g_edge))``, one per row of D.

        Interior edges use the geometric mean of the two site metric
        weights; the last row (Dirichlet truncation) uses the last site.
        """
        g = np.empty(self.N)
        g[:-1] = np.sqrt(self.metric_scale[:-1] * self.metric_scale[1:])
        g[-1] = self.metric_scale[-1]
        return 1.0 / (self.h * np.sqrt(g))

    @property
    def edge_lengths(self) -> np.ndarray:
        """Path-metric lengths of the ``N - 1`` interior edges."""
        return 1.0 / self.edge_coefficients[:-1]

    def path_distance(self, site: int) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum(self.edge_lengths)])
        return np.abs(cum - cum[site])

    def end_distance(self) -> np.ndarray:
        """Path distance from each site to the nearer end of the chain."""
        return np.minimum(self.path_distance(0), self.path_distance(self.N - 1))

    def bulk_mask(self, collar: float | None = None) -> np.ndarray:
        """Sites farther than ``collar`` (path metric) from both ends.

        The default collar is a quarter of the chain length.
        """
        if collar is None:
            collar = 0.25 * self.edge_lengths.sum()
        return self.end_distance() > collar

    def outside_compact(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.compact_region[0]:self.compact_region[1]] = False
        return mask

    def truncated(self, half_length: float) -> "LatticeModel":
        """Sub-chain ``|x - center| <= half_length`` around the compact region's center."""
        lo, hi = self.compact_region
        center = 0.5 * (self.x[lo] + self.x[max(hi - 1, lo)])
        keep = np.flatnonzero(np.abs(self.x - center) <= half_length + 1e-12)
        a, b = keep[0], keep[-1] + 1
        region = (max(lo - a, 0), min(hi - a, b - a))
        return LatticeModel(b - a, self.h, self.mu[a:b], self.metric_scale[a:b], region, float(self.x[a]))


def _weights(spec, x: np.ndarray) -> np.ndarray | None:
    if spec is None or spec == "uniform":
        return None
    if callable(spec):
        return np.asarray(spec(x), dtype=float)
    if spec == "gaussian-bump":
        return 1.0 + 0.5 * np.exp(-x ** 2)
    if isinstance(spec, str):
        raise ValueError(f"unknown weight generator {spec!r}")
    return np.asarray(spec, dtype=float)


@dataclass(frozen=True, eq=False)
class LatticeOperator:
    """An A-linear operator on sections of ``A^r`` (or of ``E+ (+) E-``) over a chain."""

    model: LatticeModel
    r: int
    action: AMatrix
    bandwidth: int
    graded: bool = False
    symbol_bound: float | None = None

    def __post_init__(self):
        expected = (2 if self.graded else 1) * self.model.N * self.r
        if self.action.k != expected:
            raise ValueError(f"operator rank {self.action.k} does not match {expected}")

    @property
    def algebra(self) -> TracedAlgebra:
        return self.action.algebra

    def module_weights(self) -> np.ndarray:
        """Measure weight of each module index."""
        w = np.repeat(self.model.mu, self.r)
        return np.tile(w, 2) if self.graded else w

    def _scaled(self, power: float) -> list[np.ndarray]:
        w = self.module_weights() ** power
        return [np.repeat(w, n) for n in self.algebra.dims]

    def hat(self) -> AMatrix:
        """``M^{1/2} T M^{-1/2}``: the same operator in an orthonormal frame."""
        up, down = self._scaled(0.5), self._scaled(-0.5)
        blocks = [u[:, None] * b * d[None, :] for u, b, d in zip(up, self.action.blocks, down)]
        return AMatrix(self.algebra, self.action.k, tuple(blocks))

    def with_action(self, action: AMatrix, bandwidth: int | None = None) -> "LatticeOperator":
        return replace(self, action=action, bandwidth=self.bandwidth if bandwidth is None else bandwidth,
                       symbol_bound=None)

    def _compatible(self, other: "LatticeOperator"):
        if other.model is not self.model or other.r != self.r or other.graded != self.graded:
            raise ValueError("operators act on different section spaces")

    def __add__(self, other):
        if not isinstance(other, LatticeOperator):
            return NotImplemented
        self._compatible(other)
        return self.with_action(self.action + other.action, max(self.bandwidth, other.bandwidth))

    def __sub__(self, other):
        if not isinstance(other, LatticeOperator):
            return NotImplemented
        self._compatible(other)
        return self.with_action(self.action - other.action, max(self.bandwidth, other.bandwidth))

    def __matmul__(self, other):
        if not isinstance(other, LatticeOperator):
            return NotImplemented
        self._compatible(other)
        return self.with_action(self.action @ other.action, self.bandwidth + other.bandwidth)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return self.with_action(c * self.action)

    __rmul__ = __mul__

    def apply(self, s: "Section") -> "Section":
        if s.model is not self.model or s.r != self.r or s.graded != self.graded:
            raise ValueError("section does not live on this operator's bundle")
        return replace(s, data=tuple(self.action.apply(s.data)))

    def norm(self) -> float:
        return self.hat().norm()


def bandwidth_of(op: LatticeOperator, tol: float = 0.0) -> int:
    """Largest site offset carrying a nonzero entry."""
    n_sites, r = op.model.N, op.r
    width = 0
    for b, n in zip(op.action.blocks, op.algebra.dims):
        rows, cols = np.nonzero(np.abs(b) > tol)
        if rows.size:
            site_r = (rows // (n * r)) % n_sites
            site_c = (cols // (n * r)) % n_sites
            width = max(width, int(np.abs(site_r - site_c).max()))
    return width


@dataclass(frozen=True, eq=False)
class Section:
    """A section of ``A^r`` over the chain, one ``(k n_i, n_i)`` array per algebra block."""

    model: LatticeModel
    algebra: TracedAlgebra
    r: int
    data: tuple[np.ndarray, ...] = field(repr=False)
    graded: bool = False

    @property
    def k(self) -> int:
        return (2 if self.graded else 1) * self.model.N * self.r

    def __post_init__(self):
        data = tuple(np.array(d, dtype=complex) for d in self.data)
        for d, n in zip(data, self.algebra.dims):
            if d.shape != (self.k * n, n):
                raise ValueError(f"section block shape {d.shape} != ({self.k * n}, {n})")
        object.__setattr__(self, "data", data)

    @classmethod
    def random(cls, model, algebra, r, rng, graded=False) -> "Section":
        k = (2 if graded else 1) * model.N * r
        data = [rng.standard_normal((k * n, n)) + 1j * rng.standard_normal((k * n, n)) for n in algebra.dims]
        return cls(model, algebra, r, tuple(data), graded)

    @classmethod
    def zeros(cls, model, algebra, r, graded=False) -> "Section":
        k = (2 if graded else 1) * model.N * r
        return cls(model, algebra, r, tuple(np.zeros((k * n, n)) for n in algebra.dims), graded)

    @classmethod
    def from_hat(cls, model, algebra, r, vectors: Sequence[np.ndarray], graded=False) -> "Section":
        """Build a section from orthonormal-frame data (divides by ``sqrt(mu)``)."""
        w = np.repeat(model.mu, r)
        w = np.tile(w, 2) if graded else w
        data = [v / np.sqrt(np.repeat(w, n))[:, None] for v, n in zip(vectors, algebra.dims)]
        return cls(model, algebra, r, tuple(data), graded)

    def _site_weights(self) -> list[np.ndarray]:
        w = np.repeat(self.model.mu, self.r)
        w = np.tile(w, 2) if self.graded else w
        return [np.repeat(w, n) for n in self.algebra.dims]

    def inner(self, other: "Section") -> complex:
        """``(s1, s2) = sum_j mu_j <s1(x_j), s2(x_j)>_tau``."""
        total = 0.0
        for w, mu, a, b in zip(self.algebra.weights, self._site_weights(), self.data, other.data):
            total += w * np.vdot(b, mu[:, None] * a)
        return complex(total)

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def scale_sites(self, values: np.ndarray) -> "Section":
        """Pointwise multiplication by a real per-site function."""
        v = np.repeat(np.asarray(values, dtype=float), self.r)
        v = np.tile(v, 2) if self.graded else v
        data = [np.repeat(v, n)[:, None] * d for d, n in zip(self.data, self.algebra.dims)]
        return replace(self, data=tuple(data))

    def __add__(self, other):
        return replace(self, data=tuple(a + b for a, b in zip(self.data, other.data)))

    def __sub__(self, other):
        return replace(self, data=tuple(a - b for a, b in zip(self.data, other.data)))

    def __mul__(self, c):
        return replace(self, data=tuple(c * a for a in self.data))

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------

def _scalar_operator(model, algebra, r, site_matrix, bandwidth, graded=False, symbol_bound=None):
    action = AMatrix.scalar_matrix(algebra, np.kron(site_matrix, np.eye(r)))
    return LatticeOperator(model, r, action, bandwidth, graded, symbol_bound)


def site_multiplication(model: LatticeModel, algebra: TracedAlgebra, r: int,
                        values: np.ndarray) -> LatticeOperator:
    """Multiplication by a real per-site scalar function."""
    return _scalar_operator(model, algebra, r, np.diag(np.asarray(values, dtype=float)), 0)


def dirac(model: LatticeModel, algebra: TracedAlgebra | None = None, r: int = 1,
          boundary: str = "dirichlet") -> LatticeOperator:
    """Forward difference ``(Ds)_j = c_j (s_{j+1} - s_j)``, ``s_N = 0``.

    Acts identically on the fiber ``A^r``.  ``symbol_bound`` is the largest
    edge coefficient ``c_j``.
    """
    if boundary != "dirichlet":
        raise ValueError("only Dirichlet truncation is supported")
    algebra = algebra or TracedAlgebra.scalars()
    c = model.edge_coefficients
    m = np.diag(-c) + np.diag(c[:-1], 1)
    return _scalar_operator(model, algebra, r, m, 1, symbol_bound=float(c.max()))


def formal_adjoint(t: LatticeOperator) -> LatticeOperator:
    """Adjoint for the mu-weighted inner product: ``M^{-1} T^H M``."""
    up, down = t._scaled(-1.0), t._scaled(1.0)
    blocks = [u[:, None] * b.conj().T * d[None, :] for u, b, d in zip(up, t.action.blocks, down)]
    return replace(t, action=AMatrix(t.algebra, t.action.k, tuple(blocks)))


def graded_operator(pp: AMatrix, pm: AMatrix, mp: AMatrix, mm: AMatrix) -> AMatrix:
    """Assemble ``[[pp, pm], [mp, mm]]`` on ``E+ (+) E-``."""
    blocks = [np.block([[a, b], [c, d]]) for a, b, c, d in zip(pp.blocks, pm.blocks, mp.blocks, mm.blocks)]
    return AMatrix(pp.algebra, 2 * pp.k, tuple(blocks))


def graded_parts(t: AMatrix) -> tuple[AMatrix, AMatrix, AMatrix, AMatrix]:
    half = t.k // 2
    parts = [[], [], [], []]
    for b, n in zip(t.blocks, t.algebra.dims):
        m = half * n
        parts[0].append(b[:m, :m])
        parts[1].append(b[:m, m:])
        parts[2].append(b[m:, :m])
        parts[3].append(b[m:, m:])
    return tuple(AMatrix(t.algebra, half, tuple(p)) for p in parts)


def assemble_calD(d: LatticeOperator) -> LatticeOperator:
    """``[[0, D*], [D, 0]]`` on ``E+ (+) E-``."""
    if d.graded:
        raise ValueError("expected an ungraded operator E+ -> E-")
    ds = formal_adjoint(d).action
    zero = AMatrix.zeros(d.algebra, d.action.k)
    action = graded_operator(zero, ds, d.action, zero)
    return LatticeOperator(d.model, d.r, action, d.bandwidth, True, d.symbol_bound)


def cutoff_sequence(model: LatticeModel, k: int) -> np.ndarray:
    """Cutoff ``phi_k = clip(2 - dist / k, 0, 1)`` around the compact region's center.

    ``0 <= phi_k <= 1``, the metric gradient ``|phi(x_{j+1}) - phi(x_j)| c_j``
    is at most ``1/k``, and the plateau ``dist <= k`` grows with ``k``.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    lo, hi = model.compact_region
    center = (lo + max(hi - 1, lo)) // 2
    dist = model.path_distance(center)
    reach = min(dist[0], dist[-1])
    if reach < 2 * k:
        raise ValueError(f"cutoff ramp for k={k} does not fit: needs distance {2 * k}, model offers {reach:.6g}")
    return np.clip(2.0 - dist / k, 0.0, 1.0)


def metric_gradient(model: LatticeModel, phi: np.ndarray) -> np.ndarray:
    """Per-edge ``|phi(x_{j+1}) - phi(x_j)| / edge_length``."""
    return np.abs(np.diff(phi)) * model.edge_coefficients[:-1]


def multiplication_commutator(t: LatticeOperator, phi: np.ndarray) -> LatticeOperator:
    """``[T, phi] = T M_phi - M_phi T`` for a nearest-neighbour operator ``T``."""
    if t.bandwidth > 1:
        raise ValueError(f"operator bandwidth {t.bandwidth} > 1: commutator is not a bundle map")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (t.model.N,):
        raise ValueError("phi must have one value per site")
    v = np.repeat(phi, t.r)
    v = np.tile(v, 2) if t.graded else v
    blocks = []
    for b, n in zip(t.action.blocks, t.algebra.dims):
        p = np.repeat(v, n)
        blocks.append(b * p[None, :] - p[:, None] * b)
    return t.with_action(AMatrix(t.algebra, t.action.k, tuple(blocks)), 1)
