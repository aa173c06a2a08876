"""A-linear operators on free finite-type modules ``A^k``.

An operator on ``A^k`` is a ``k x k`` matrix with entries in the algebra.
It is stored through its flattened blocks: for algebra block ``i`` the
``(k n_i) x (k n_i)`` complex matrix whose ``(j, l)`` sub-block of size
``n_i`` is block ``i`` of entry ``T[j, l]`` (module index outer, algebra
block index inner).  Every spectral quantity is computed blockwise and
weighted by the trace weights ``w_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np

from . import _banded
from .algebra import AlgebraElement, TracedAlgebra

__all__ = [
    "AMatrix",
    "TauProjection",
    "CountingCurve",
    "FredholmWitness",
    "tau_trace",
    "spectral_projection",
    "counting_function",
    "counting_curve",
    "tau_dim_kernel",
    "kernel_gap",
    "near_kernel",
    "NearKernel",
    "block_eigvalsh",
    "bounded_transform",
    "off_diagonal_double",
    "variational_counting_oracle",
    "is_tau_fredholm",
    "eigenvalue_tol",
    "to_text",
    "from_text",
]

SELF_ADJOINT_TOL = 1e-10
DEFAULT_TOL_KER = 1e-8
ORACLE_TOTAL_CAP = 64
ORACLE_BLOCK_CAP = 16


@dataclass(frozen=True, eq=False)
class AMatrix:
    """A ``k x k`` matrix over a :class:`TracedAlgebra`, kept in flattened form."""

    algebra: TracedAlgebra
    k: int
    blocks: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        data = tuple(np.array(b, dtype=complex) for b in self.blocks)
        if len(data) != len(self.algebra):
            raise ValueError(f"expected {len(self.algebra)} flattened blocks, got {len(data)}")
        for b, n in zip(data, self.algebra.dims):
            if b.shape != (self.k * n, self.k * n):
                raise ValueError(f"flattened block shape {b.shape} != ({self.k * n}, {self.k * n})")
            b.setflags(write=False)
        object.__setattr__(self, "blocks", data)

    # -- construction ---------------------------------------------------
    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[AlgebraElement]]) -> "AMatrix":
        k = len(entries)
        if k == 0 or any(len(row) != k for row in entries):
            raise ValueError("entries must form a nonempty square array")
        algebra = entries[0][0].parent
        blocks = []
        for i, n in enumerate(algebra.dims):
            flat = np.zeros((k * n, k * n), dtype=complex)
            for j, row in enumerate(entries):
                for l, a in enumerate(row):
                    if a.parent != algebra:
                        raise ValueError("entries belong to different algebras")
                    flat[j * n:(j + 1) * n, l * n:(l + 1) * n] = a.block_data[i]
            blocks.append(flat)
        return cls(algebra, k, tuple(blocks))

    @classmethod
    def identity(cls, algebra: TracedAlgebra, k: int) -> "AMatrix":
        return cls(algebra, k, tuple(np.eye(k * n, dtype=complex) for n in algebra.dims))

    @classmethod
    def zeros(cls, algebra: TracedAlgebra, k: int) -> "AMatrix":
        return cls(algebra, k, tuple(np.zeros((k * n, k * n), dtype=complex) for n in algebra.dims))

    @classmethod
    def scalar_matrix(cls, algebra: TracedAlgebra, m: np.ndarray) -> "AMatrix":
        """Complex ``k x k`` matrix ``m`` acting as ``m (x) Id_A``."""
        m = np.asarray(m, dtype=complex)
        return cls(algebra, m.shape[0], tuple(np.kron(m, np.eye(n)) for n in algebra.dims))

    @classmethod
    def block_diagonal(cls, algebra: TracedAlgebra, entries: Sequence[AlgebraElement]) -> "AMatrix":
        k = len(entries)
        zero = algebra.zero()
        return cls.from_entries([[entries[j] if j == l else zero for l in range(k)] for j in range(k)])

    @classmethod
    def random(cls, algebra: TracedAlgebra, k: int, rng: np.random.Generator,
               hermitian: bool = False) -> "AMatrix":
        blocks = []
        for n in algebra.dims:
            m = k * n
            a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            if hermitian:
                a = 0.5 * (a + a.conj().T)
            blocks.append(a)
        return cls(algebra, k, tuple(blocks))

    # -- access -----------------------------------------------------------
    def entry(self, j: int, l: int) -> AlgebraElement:
        data = [b[j * n:(j + 1) * n, l * n:(l + 1) * n] for b, n in zip(self.blocks, self.algebra.dims)]
        return AlgebraElement(self.algebra, data)

    def entries(self) -> list[list[AlgebraElement]]:
        return [[self.entry(j, l) for l in range(self.k)] for j in range(self.k)]

    @property
    def total_dim(self) -> int:
        """Sum of the flattened block sizes."""
        return sum(b.shape[0] for b in self.blocks)

    # -- algebra ----------------------------------------------------------
    def _like(self, blocks) -> "AMatrix":
        return AMatrix(self.algebra, self.k, tuple(blocks))

    def _compatible(self, other: "AMatrix"):
        if other.algebra != self.algebra or other.k != self.k:
            raise ValueError("operators act on different modules")

    def __add__(self, other):
        if not isinstance(other, AMatrix):
            return NotImplemented
        self._compatible(other)
        return self._like(a + b for a, b in zip(self.blocks, other.blocks))

    def __sub__(self, other):
        if not isinstance(other, AMatrix):
            return NotImplemented
        self._compatible(other)
        return self._like(a - b for a, b in zip(self.blocks, other.blocks))

    def __neg__(self):
        return self._like(-a for a in self.blocks)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return self._like(c * a for a in self.blocks)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, AMatrix):
            return NotImplemented
        self._compatible(other)
        return self._like(_banded.matmul(a, b) for a, b in zip(self.blocks, other.blocks))

    def shift(self, c: float) -> "AMatrix":
        """``T + c Id``."""
        return self._like(a + c * np.eye(a.shape[0]) for a in self.blocks)

    @property
    def H(self) -> "AMatrix":
        return self._like(a.conj().T for a in self.blocks)

    def norm(self) -> float:
        """Operator norm: the largest flattened-block spectral norm."""
        return self._norm

    @cached_property
    def _norm(self) -> float:
        out = 0.0
        for a in self.blocks:
            if not a.size:
                continue
            narrow = _banded.narrowed(a)
            out = max(out, np.linalg.norm(a, 2) if narrow is None else _banded.largest_singular_value(narrow))
        return float(out)

    def is_self_adjoint(self, tol: float = SELF_ADJOINT_TOL) -> bool:
        scale = 1.0 + self.norm()
        return all(np.abs(a - a.conj().T).max(initial=0.0) <= tol * scale for a in self.blocks)

    def allclose(self, other: "AMatrix", atol: float = 1e-12) -> bool:
        self._compatible(other)
        return all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.blocks, other.blocks))

    def apply(self, x: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Act on a module vector (one ``(k n_i, n_i)`` array per block)."""
        return [a @ xb for a, xb in zip(self.blocks, x)]


def _require_self_adjoint(t: AMatrix):
    if not t.is_self_adjoint():
        raise ValueError("operator is not self-adjoint")


def eigenvalue_tol(t: AMatrix) -> float:
    """Inclusion tolerance for the closed spectral ray ``(-inf, lam]``."""
    return 1e-9 * (1.0 + t.norm())


def tau_trace(t: AMatrix) -> complex:
    """``Tr_tau T = sum_j tau(T_jj)``."""
    return complex(sum(w * np.trace(b) for w, b in zip(t.algebra.weights, t.blocks)))


def block_eigvalsh(b: np.ndarray) -> np.ndarray:
    """All eigenvalues of the Hermitian part of one flattened block, ascending."""
    herm = 0.5 * (b + b.conj().T)
    narrow = _banded.narrowed(herm)
    return np.linalg.eigvalsh(herm) if narrow is None else _banded.eigvals_all(narrow)


def _block_eigh(t: AMatrix):
    return [np.linalg.eigh(0.5 * (b + b.conj().T)) for b in t.blocks]


@dataclass(frozen=True, eq=False)
class TauProjection:
    """A self-adjoint idempotent together with its tau-dimension."""

    base: AMatrix
    tau_dim: float

    def check(self, tol: float = 1e-10) -> bool:
        p = self.base
        return p.is_self_adjoint(tol) and (p @ p).allclose(p, atol=tol)


def spectral_projection(t: AMatrix, lam: float, tol_eig: float | None = None) -> TauProjection:
    """Projection onto the spectral subspace of ``(-inf, lam]``.

    Eigenvalues within ``tol_eig`` above ``lam`` are included.
    """
    _require_self_adjoint(t)
    tol = eigenvalue_tol(t) if tol_eig is None else tol_eig
    blocks = []
    for vals, vecs in _block_eigh(t):
        sel = vecs[:, vals <= lam + tol]
        blocks.append(sel @ sel.conj().T)
    p = AMatrix(t.algebra, t.k, tuple(blocks))
    return TauProjection(p, float(tau_trace(p).real))


def counting_function(t: AMatrix, lam: float, tol_eig: float | None = None) -> float:
    """``N_tau(lam; T) = sum_i w_i #{eigenvalues of block i <= lam}``."""
    _require_self_adjoint(t)
    tol = eigenvalue_tol(t) if tol_eig is None else tol_eig
    total = 0.0
    for w, b in zip(t.algebra.weights, t.blocks):
        total += w * int(np.searchsorted(block_eigvalsh(b), lam + tol, side="right"))
    return total


@dataclass(frozen=True)
class CountingCurve:
    lambdas: np.ndarray
    values: np.ndarray

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))


def counting_curve(t: AMatrix, lambdas: Sequence[float]) -> CountingCurve:
    """Evaluate ``N_tau`` on a grid, eigensolving each block once."""
    _require_self_adjoint(t)
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    tol = eigenvalue_tol(t)
    values = np.zeros_like(lambdas)
    for w, b in zip(t.algebra.weights, t.blocks):
        values += w * np.searchsorted(block_eigvalsh(b), lambdas + tol, side="right")
    return CountingCurve(lambdas, values)


@dataclass(frozen=True)
class NearKernel:
    """Near-zero singular structure of one flattened block ``B``.

    ``right`` and ``left`` are orthonormal bases of the singular directions
    of ``B`` and ``B*`` with ``sigma <= threshold``; ``gap`` is the smallest
    singular value above the threshold (``None`` if there is none).
    """

    right: np.ndarray
    left: np.ndarray
    gap: float | None
    largest_inside: float | None
    ambiguous: bool


def _orth(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 0:
        return x
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    return u[:, s > 0.5]


def near_kernel(b: np.ndarray, threshold: float) -> NearKernel:
    """Singular directions of ``b`` below ``threshold``, dense or banded.

    The banded route diagonalizes ``[[0, B*], [B, 0]]``, whose eigenvalues
    are ``+-sigma``; the domain and codomain halves of the eigenvectors in
    ``[-threshold, threshold]`` span the right and left near-kernels.
    """
    m = b.shape[0]
    rows, cols = np.nonzero(b)
    if m and _banded.use_banded(b, int(np.abs(rows - cols).max(initial=0))):
        double = _banded.interleaved_double(b)
        dwidth = int(np.where(rows >= cols, 2 * (rows - cols) + 1, 2 * (cols - rows) - 1).max(initial=0))
        spectrum = _banded.eigvals_all(double, dwidth)
        _, vecs = _banded.eigh_in(double, -threshold - 1e-300, threshold, dwidth)
        right, left = _orth(vecs[0::2]), _orth(vecs[1::2])
        inside = np.abs(spectrum[np.abs(spectrum) <= threshold])
        outside = spectrum[spectrum > threshold]
        ambiguous = np.any((outside > threshold / 10) & (outside <= 10 * threshold))
        return NearKernel(right, left, float(outside.min()) if outside.size else None,
                          float(inside.max()) if inside.size else None, bool(ambiguous))
    u, s, vh = np.linalg.svd(b)
    near = s <= threshold
    gap = float(s[~near].min()) if np.any(~near) else None
    inside = float(s[near].max()) if np.any(near) else None
    ambiguous = bool(np.any((s > threshold / 10) & (s <= 10 * threshold)))
    return NearKernel(vh.conj().T[:, near], u[:, near], gap, inside, ambiguous)


def tau_dim_kernel(t: AMatrix, tol_ker: float = DEFAULT_TOL_KER) -> float:
    """tau-dimension of the singular directions with ``sigma <= tol_ker * ||T||``.

    Equivalent to ``N_tau(threshold**2; T* T)`` but counted on singular
    values, which keeps the threshold meaningful below ``sqrt(eps)``.
    """
    if tol_ker <= 0:
        raise ValueError("tol_ker must be positive")
    thr = tol_ker * t.norm()
    return float(sum(w * near_kernel(b, thr).right.shape[1] for w, b in zip(t.algebra.weights, t.blocks)))


def kernel_gap(t: AMatrix, tol_ker: float = DEFAULT_TOL_KER) -> tuple[float | None, float | None]:
    """Largest singular value inside the kernel threshold and smallest one above it."""
    thr = tol_ker * t.norm()
    parts = [near_kernel(b, thr) for b in t.blocks]
    inside = [p.largest_inside for p in parts if p.largest_inside is not None]
    above = [p.gap for p in parts if p.gap is not None]
    return (max(inside) if inside else None, min(above) if above else None)


def _functional_calculus(b: np.ndarray, fn) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (b + b.conj().T))
    return (vecs * fn(vals)) @ vecs.conj().T


def bounded_transform(t: AMatrix) -> AMatrix:
    """``T (I + T* T)^{-1/2}``; equals ``T (I + T^2)^{-1/2}`` for self-adjoint ``T``."""
    blocks = []
    for b in t.blocks:
        root = _functional_calculus(b.conj().T @ b, lambda v: 1.0 / np.sqrt(1.0 + np.clip(v, 0, None)))
        blocks.append(b @ root)
    return AMatrix(t.algebra, t.k, tuple(blocks))


def off_diagonal_double(t: AMatrix) -> AMatrix:
    """The self-adjoint ``[[0, T*], [T, 0]]`` on ``A^k (+) A^k``."""
    blocks = []
    for b in t.blocks:
        z = np.zeros_like(b)
        blocks.append(np.block([[z, b.conj().T], [b, z]]))
    return AMatrix(t.algebra, 2 * t.k, tuple(blocks))


def variational_counting_oracle(t: AMatrix, lam: float, tol_eig: float | None = None) -> float:
    """Brute-force ``sup dim_tau L`` over A-invariant subspaces with ``(Tu, u) <= lam (u, u)``.

    Candidate subspaces are spans of subsets of each block's eigenvectors;
    the Rayleigh constraint is checked on the compression of ``T`` itself,
    not on the eigenvalues.  An A-invariant subspace is a direct sum of
    per-block subspaces, so the supremum splits over blocks.
    """
    _require_self_adjoint(t)
    if t.total_dim > ORACLE_TOTAL_CAP:
        raise ValueError(f"oracle size cap exceeded: {t.total_dim} > {ORACLE_TOTAL_CAP}")
    if max(b.shape[0] for b in t.blocks) > ORACLE_BLOCK_CAP:
        raise ValueError(f"oracle block cap exceeded (> {ORACLE_BLOCK_CAP})")
    tol = eigenvalue_tol(t) if tol_eig is None else tol_eig
    total = 0.0
    for w, b in zip(t.algebra.weights, t.blocks):
        herm = 0.5 * (b + b.conj().T)
        _, vecs = np.linalg.eigh(herm)
        # a feasible span only contains feasible vectors: prune single directions first
        rayleigh = np.einsum("ij,ik,kj->j", vecs.conj(), herm, vecs).real
        candidates = np.flatnonzero(rayleigh <= lam + tol)
        best = 0
        for size in range(len(candidates), 0, -1):
            for subset in combinations(candidates, size):
                q = vecs[:, subset]
                top = np.linalg.eigvalsh(q.conj().T @ herm @ q)[-1]
                if top <= lam + tol:
                    best = size
                    break
            if best:
                break
        total += w * best
    return total


@dataclass(frozen=True)
class FredholmWitness:
    """Desk-scale witness for tau-Fredholmness: counting pair and spectral gap."""

    n_star_t: float  # N_tau(lam; T* T)
    n_t_star: float  # N_tau(lam; T T*)
    dim_kernel: float
    gap: float | None  # smallest eigenvalue of T* T above the kernel threshold
    gap_defined: bool
    lambda_probe: float


def is_tau_fredholm(t: AMatrix, lambda_probe: float, tol_ker: float = DEFAULT_TOL_KER) -> FredholmWitness:
    if lambda_probe <= 0:
        raise ValueError("lambda_probe must be positive")
    tt = t.H @ t
    ttstar = t @ t.H
    _, above = kernel_gap(t, tol_ker)
    return FredholmWitness(
        n_star_t=counting_function(tt, lambda_probe),
        n_t_star=counting_function(ttstar, lambda_probe),
        dim_kernel=tau_dim_kernel(t, tol_ker),
        gap=None if above is None else above ** 2,
        gap_defined=above is not None,
        lambda_probe=lambda_probe,
    )


# --------------------------------------------------------------------------
# Text serialization
# --------------------------------------------------------------------------
#
#   amatrix 1
#   algebra <m>
#   block <n_1> <w_1>
#   ...                      (m lines)
#   rank <k>
#   matrix <i>               (one per algebra block, in order)
#   <re,im> <re,im> ...      (k n_i rows of k n_i pairs, row-major)
#   end
#
# Floats are written with repr(), which round-trips every double exactly.
# Blank lines and lines starting with '#' are ignored.

TEXT_MAGIC = "amatrix 1"


def to_text(t: AMatrix) -> str:
    lines = [TEXT_MAGIC, f"algebra {len(t.algebra)}"]
    lines += [f"block {n} {float(w)!r}" for n, w in t.algebra.blocks]
    lines.append(f"rank {t.k}")
    for i, b in enumerate(t.blocks):
        lines.append(f"matrix {i}")
        for row in b:
            lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    lines.append("end")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> AMatrix:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0

    def take(prefix: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"unexpected end of document, expected '{prefix}'")
        parts = lines[pos].split()
        if parts[0] != prefix:
            raise ValueError(f"line {pos + 1}: expected '{prefix}', got '{lines[pos]}'")
        pos += 1
        return parts[1:]

    if not lines or lines[0] != TEXT_MAGIC:
        raise ValueError(f"missing header '{TEXT_MAGIC}'")
    pos = 1
    (m,) = take("algebra")
    blocks = []
    for _ in range(int(m)):
        n, w = take("block")
        blocks.append((int(n), float(w)))
    algebra = TracedAlgebra(tuple(blocks))
    (k,) = take("rank")
    k = int(k)
    data = []
    for i, (n, _) in enumerate(blocks):
        (idx,) = take("matrix")
        if int(idx) != i:
            raise ValueError(f"matrix blocks out of order: got {idx}, expected {i}")
        size = k * n
        if pos + size > len(lines):
            raise ValueError("unexpected end of document inside a matrix")
        rows = []
        for row in lines[pos:pos + size]:
            pairs = [p.split(",") for p in row.split()]
            if len(pairs) != size or any(len(p) != 2 for p in pairs):
                raise ValueError(f"matrix {i}: expected {size} 're,im' pairs per row")
            rows.append([complex(float(re), float(im)) for re, im in pairs])
        pos += size
        data.append(np.array(rows, dtype=complex).reshape(size, size))
    take("end")
    return AMatrix(algebra, k, tuple(data))
