"""Finite von Neumann algebras with a faithful normalized trace.

An algebra is a finite direct sum of full matrix blocks ``M_{n_i}(C)``; the
trace of an element is ``sum_i w_i * tr(a_i)`` with positive weights
normalized so that the identity has trace one.  Group algebras of finite
groups are realized through the regular representation and reduced to this
block form numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "TracedAlgebra",
    "AlgebraElement",
    "FiniteGroup",
    "GroupAlgebra",
    "trace",
    "inner_product",
    "group_algebra",
    "cyclic_group",
    "dihedral_group",
    "symmetric_group",
    "load_group_table",
    "compatibility_check",
]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class TracedAlgebra:
    """Direct sum of matrix blocks ``(n_i, w_i)`` with trace ``sum w_i tr``."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        blocks = tuple((int(n), float(w)) for n, w in self.blocks)
        if not blocks:
            raise ValueError("algebra needs at least one block")
        for n, w in blocks:
            if n <= 0:
                raise ValueError(f"block dimension must be positive, got {n}")
            if not w > 0:
                raise ValueError(f"trace weight must be positive, got {w}")
        total = sum(n * w for n, w in blocks)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"trace not normalized: sum w_i n_i = {total!r}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def scalars(cls) -> "TracedAlgebra":
        return cls(((1, 1.0),))

    @classmethod
    def matrix(cls, n: int) -> "TracedAlgebra":
        """``M_n(C)`` with the normalized trace ``tr / n``."""
        return cls(((n, 1.0 / n),))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def identity(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(n, dtype=complex) for n in self.dims])

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((n, n), dtype=complex) for n in self.dims])

    def scalar(self, c) -> "AlgebraElement":
        return c * self.identity()

    def element(self, block_data) -> "AlgebraElement":
        return AlgebraElement(self, block_data)

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> "AlgebraElement":
        data = []
        for n in self.dims:
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            if hermitian:
                a = 0.5 * (a + a.conj().T)
            data.append(a)
        return AlgebraElement(self, data)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """An element of a :class:`TracedAlgebra`, stored block by block."""

    parent: TracedAlgebra
    block_data: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        data = tuple(np.array(b, dtype=complex) for b in self.block_data)
        if len(data) != len(self.parent.blocks):
            raise ValueError(
                f"expected {len(self.parent.blocks)} blocks, got {len(data)}")
        for b, n in zip(data, self.parent.dims):
            if b.shape != (n, n):
                raise ValueError(f"block shape {b.shape} does not match ({n}, {n})")
            b.setflags(write=False)
        object.__setattr__(self, "block_data", data)

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.parent != self.parent:
            raise ValueError("elements belong to different algebras")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.parent, [a + b for a, b in zip(self.block_data, other.block_data)])

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.parent, [a - b for a, b in zip(self.block_data, other.block_data)])

    def __neg__(self):
        return AlgebraElement(self.parent, [-a for a in self.block_data])

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.parent, [a @ b for a, b in zip(self.block_data, other.block_data)])
        if np.isscalar(other):
            return AlgebraElement(self.parent, [other * a for a in self.block_data])
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.parent, [other * a for a in self.block_data])
        return NotImplemented

    __matmul__ = __mul__

    @property
    def H(self) -> "AlgebraElement":
        """The adjoint ``a*``."""
        return AlgebraElement(self.parent, [a.conj().T for a in self.block_data])

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        self._check(other)
        return all(np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.block_data, other.block_data))

    def norm(self) -> float:
        """C*-norm: the largest block operator norm."""
        return max(np.linalg.norm(a, 2) for a in self.block_data)


def trace(a: AlgebraElement) -> complex:
    """The normalized trace ``tau(a) = sum_i w_i tr(a_i)``."""
    return complex(sum(w * np.trace(b) for w, b in zip(a.parent.weights, a.block_data)))


def inner_product(a: AlgebraElement, b: AlgebraElement) -> complex:
    """``<a, b>_tau = tau(a b*)``."""
    if a.parent != b.parent:
        raise ValueError("elements belong to different algebras")
    return trace(a * b.H)


# --------------------------------------------------------------------------
# Finite groups
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its multiplication table.

    ``mult_table[g, h]`` is the index of the product ``g h``.
    """

    mult_table: np.ndarray
    identity_index: int = 0
    name: str = ""

    def __post_init__(self):
        table = np.asarray(self.mult_table, dtype=int)
        n = table.shape[0] if table.ndim == 2 else 0
        if table.ndim != 2 or table.shape != (n, n) or n == 0:
            raise ValueError("multiplication table must be a nonempty square array")
        if table.min() < 0 or table.max() >= n:
            raise ValueError("multiplication table entries out of range")
        e = self.identity_index
        if not 0 <= e < n:
            raise ValueError("identity index out of range")
        rng = np.arange(n)
        if not (np.array_equal(table[e], rng) and np.array_equal(table[:, e], rng)):
            raise ValueError("identity element is not a two-sided identity")
        # Latin square <=> every element has a two-sided inverse (given associativity).
        for row in table:
            if len(set(row.tolist())) != n:
                raise ValueError("multiplication table is not a Latin square (inverses missing)")
        # associativity: (gh)k == g(hk)
        lhs = table[table[:, :, None], rng[None, None, :]]
        rhs = table[rng[:, None, None], table[None, :, :]]
        if not np.array_equal(lhs, rhs):
            raise ValueError("multiplication table is not associative")
        table.setflags(write=False)
        object.__setattr__(self, "mult_table", table)

    @property
    def order(self) -> int:
        return self.mult_table.shape[0]

    def mul(self, g: int, h: int) -> int:
        return int(self.mult_table[g, h])

    def inverse(self, g: int) -> int:
        return int(np.flatnonzero(self.mult_table[g] == self.identity_index)[0])

    def conjugacy_classes(self) -> list[list[int]]:
        seen: set[int] = set()
        classes = []
        for g in range(self.order):
            if g in seen:
                continue
            cls = sorted({self.mul(self.mul(h, g), self.inverse(h)) for h in range(self.order)})
            seen.update(cls)
            classes.append(cls)
        return classes

    def right_regular(self, g: int) -> np.ndarray:
        """Matrix of ``(R_g u)(h) = u(h g)`` on ``l^2(G)``."""
        n = self.order
        r = np.zeros((n, n), dtype=complex)
        r[np.arange(n), self.mult_table[:, g]] = 1.0
        return r

    def to_text(self) -> str:
        lines = [str(self.order)]
        lines += [" ".join(str(int(v)) for v in row) for row in self.mult_table]
        return "\n".join(lines) + "\n"


def cyclic_group(n: int) -> FiniteGroup:
    idx = np.arange(n)
    return FiniteGroup((idx[:, None] + idx[None, :]) % n, name=f"Z/{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """Dihedral group of order ``2n``; element ``(s, k)`` is ``r^k s^s`` at index ``s*n + k``."""
    order = 2 * n
    table = np.zeros((order, order), dtype=int)
    for a in range(order):
        sa, ka = divmod(a, n)
        for b in range(order):
            sb, kb = divmod(b, n)
            k = (ka + (kb if sa == 0 else -kb)) % n
            table[a, b] = ((sa + sb) % 2) * n + k
    return FiniteGroup(table, name=f"D{n}")


def symmetric_group(n: int) -> FiniteGroup:
    from itertools import permutations

    perms = list(permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = np.array([[index[tuple(p[q[i]] for i in range(n))] for q in perms] for p in perms])
    return FiniteGroup(table, name=f"S{n}")


def load_group_table(source: str | Path) -> FiniteGroup:
    """Parse the plain-text table format: ``|G|`` then ``|G|`` rows of indices.

    ``source`` may be a path or the text itself.  Identity is index 0.
    """
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else str(source)
    tokens = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not tokens or len(tokens[0]) != 1:
        raise ValueError("first line must hold the group order")
    n = int(tokens[0][0])
    rows = tokens[1:]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"expected {n} rows of {n} indices")
    return FiniteGroup(np.array([[int(v) for v in r] for r in rows]))


# --------------------------------------------------------------------------
# Group von Neumann algebras
# --------------------------------------------------------------------------

def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group sorted eigenvalue indices whose values differ by less than ``tol``."""
    order = np.argsort(values)
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] > tol:
            groups.append([])
        groups[-1].append(b)
    return [np.array(g) for g in groups]


@dataclass(frozen=True, eq=False)
class GroupAlgebra:
    """The von Neumann algebra of a finite group in block-diagonal form.

    ``bases[i]`` is an isometry ``l^2(G) <- C^{n_i}`` onto one irreducible
    invariant subspace of the i-th isotypic component; the isomorphism sends
    ``R_f`` to the compressions ``bases[i]^* R_f bases[i]``.
    """

    group: FiniteGroup
    algebra: TracedAlgebra
    bases: tuple[np.ndarray, ...] = field(repr=False)

    def regular(self, coeffs: Sequence[complex]) -> np.ndarray:
        """``R_f = sum_g c_g R_g`` as an ``|G| x |G|`` matrix."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (self.group.order,):
            raise ValueError("coefficient vector has wrong length")
        n = self.group.order
        out = np.zeros((n, n), dtype=complex)
        rows = np.arange(n)
        for g, c in enumerate(coeffs):
            if c != 0:
                out[rows, self.group.mult_table[:, g]] += c
        return out

    def embed(self, coeffs: Sequence[complex]) -> AlgebraElement:
        r = self.regular(coeffs)
        return AlgebraElement(self.algebra, [u.conj().T @ r @ u for u in self.bases])

    def element(self, g: int) -> AlgebraElement:
        c = np.zeros(self.group.order, dtype=complex)
        c[g] = 1.0
        return self.embed(c)

    def canonical_trace(self, coeffs: Sequence[complex]) -> complex:
        """``<f delta_e, delta_e>``, computed on ``l^2(G)`` directly."""
        e = self.group.identity_index
        return complex(self.regular(coeffs)[e, e])

    def exact_dimension(self, value: float) -> Fraction:
        """Round a tau-dimension to the lattice ``Z / |G|``."""
        n = self.group.order
        return Fraction(round(value * n), n)


def group_algebra(group: FiniteGroup, seed: int = 0) -> GroupAlgebra:
    """Block-decompose the algebra generated by the right regular representation.

    A random self-adjoint central element separates the isotypic components;
    a random self-adjoint element of the commutant (the left translations)
    then splits each component into equivalent irreducibles, of which one is
    kept.  Weights come out as ``n_i / |G|``.
    """
    rng = np.random.default_rng(seed)
    n = group.order

    z = np.zeros((n, n), dtype=complex)
    for cls in group.conjugacy_classes():
        inv_cls = sorted(group.inverse(g) for g in cls)
        r = rng.uniform(1.0, 2.0)
        if inv_cls == cls:
            for g in cls:
                z += r * group.right_regular(g)
        elif min(inv_cls) > min(cls):
            # pair C with C^{-1} so that z stays self-adjoint
            s = rng.uniform(1.0, 2.0)
            for g in cls:
                z += (r + 1j * s) * group.right_regular(g)
            for g in inv_cls:
                z += (r - 1j * s) * group.right_regular(g)
    z = 0.5 * (z + z.conj().T)
    zvals, zvecs = np.linalg.eigh(z)
    scale = 1.0 + np.abs(zvals).max()

    # left translations commute with every R_g
    left = [np.zeros((n, n), dtype=complex) for _ in range(n)]
    for g in range(n):
        left[g][group.mult_table[g], np.arange(n)] = 1.0
    y = sum((rng.standard_normal() + 1j * rng.standard_normal()) * left[g] for g in range(n))
    y = y + y.conj().T

    blocks, bases = [], []
    for cluster in _cluster(zvals, 1e-8 * scale):
        iso = zvecs[:, cluster]
        dim2 = len(cluster)
        ni = int(round(np.sqrt(dim2)))
        if ni * ni != dim2:
            raise RuntimeError("isotypic component dimension is not a square; decomposition failed")
        yvals, yvecs = np.linalg.eigh(iso.conj().T @ y @ iso)
        basis = iso @ yvecs[:, :ni]
        if ni > 1 and yvals[ni] - yvals[ni - 1] < 1e-8 * (1 + np.abs(yvals).max()):
            raise RuntimeError("commutant element not generic; retry with another seed")
        blocks.append((ni, ni / n))
        bases.append(basis)

    # canonical order: by block dimension, then by the trivial-character test
    order = sorted(range(len(blocks)), key=lambda i: (blocks[i][0], -abs(bases[i].sum())))
    blocks = [blocks[i] for i in order]
    bases = [bases[i] for i in order]
    return GroupAlgebra(group, TracedAlgebra(tuple(blocks)), tuple(bases))


# --------------------------------------------------------------------------
# Compatibility of the module action with the inner product
# --------------------------------------------------------------------------

def _module_inner(x: Sequence[np.ndarray], y: Sequence[np.ndarray], weights) -> complex:
    return complex(sum(w * np.vdot(b, a) for w, a, b in zip(weights, x, y)))


def right_multiply(x: Sequence[np.ndarray], a: AlgebraElement) -> list[np.ndarray]:
    """Right action of ``a`` on a module vector stored block by block."""
    return [xb @ ab for xb, ab in zip(x, a.block_data)]


def compatibility_check(
    a: AlgebraElement,
    x: Sequence[np.ndarray],
    y: Sequence[np.ndarray],
    right_action: Callable[[Sequence[np.ndarray], AlgebraElement], Sequence[np.ndarray]] = right_multiply,
    tol: float = 1e-12,
) -> bool:
    """Test ``<x a*, y> == <x, y a>`` for module vectors ``x`` and ``y``.

    Module vectors of ``A^k`` are lists with one ``(k n_i, n_i)`` array per
    block.  ``right_action`` lets a caller substitute a map that is not the
    module action (a negative control).
    """
    weights = a.parent.weights
    if len(x) != len(weights) or len(y) != len(weights):
        raise ValueError("module vectors must have one array per algebra block")
    for xb, yb, n in zip(x, y, a.parent.dims):
        if xb.shape != yb.shape or xb.ndim != 2 or xb.shape[1] != n or xb.shape[0] % n:
            raise ValueError("module vector dimensions do not match the algebra")
    lhs = _module_inner(right_action(x, a.H), y, weights)
    rhs = _module_inner(x, right_action(y, a), weights)
    scale = 1.0 + abs(lhs) + abs(rhs)
    return abs(lhs - rhs) <= tol * scale
