"""Banded Hermitian eigensolves for the large, nearest-neighbour lattice operators.

Eigenvalues come from LAPACK band solvers (:func:`scipy.linalg.eig_banded`).
Eigenvectors for a narrow window come from shift-invert subspace iteration
with a fixed starting block, so results are deterministic.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eig_banded
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import splu

# below this size, or above this relative bandwidth, dense solves are used
MIN_BANDED_SIZE = 160
MAX_RELATIVE_BANDWIDTH = 0.1
# fill fraction below which products go through scipy.sparse
SPARSE_FILL = 0.05
# windows holding more eigenvalues than this fall back to a dense solve
MAX_SUBSPACE = 48
MAX_ITERATIONS = 60
RESIDUAL_TOL = 1e-11


def bandwidth(a: np.ndarray) -> int:
    rows, cols = np.nonzero(a)
    return int(np.abs(rows - cols).max()) if rows.size else 0


def narrowed(a: np.ndarray) -> np.ndarray | None:
    """``a`` itself, or a reverse Cuthill-McKee reordering ``P a P^T``, if either is narrow banded.

    Eigenvalues and singular values are unchanged by the symmetric permutation.
    Returns ``None`` when neither qualifies.
    """
    if a.shape[0] < MIN_BANDED_SIZE or a.shape[0] != a.shape[1]:
        return None
    if use_banded(a):
        return a
    if np.count_nonzero(a) > SPARSE_FILL * a.size:
        return None
    pattern = sp.csr_matrix((np.abs(a) + np.abs(a.T)) > 0)
    perm = reverse_cuthill_mckee(pattern, symmetric_mode=True)
    b = a[np.ix_(perm, perm)]
    return b if use_banded(b) else None


def use_banded(a: np.ndarray, width: int | None = None) -> bool:
    m = a.shape[0]
    if m < MIN_BANDED_SIZE:
        return False
    width = bandwidth(a) if width is None else width
    return width <= MAX_RELATIVE_BANDWIDTH * m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a @ b`` through sparse storage when both factors are large and mostly zero."""
    if min(a.shape + b.shape) >= MIN_BANDED_SIZE:
        if np.count_nonzero(a) <= SPARSE_FILL * a.size and np.count_nonzero(b) <= SPARSE_FILL * b.size:
            return (sp.csr_matrix(a) @ sp.csr_matrix(b)).toarray()
    return a @ b


def _gershgorin(a: np.ndarray) -> float:
    return float(np.abs(a).sum(axis=1).max(initial=0.0))


def lower_band(a: np.ndarray, width: int) -> np.ndarray:
    """LAPACK lower band storage: ``band[i - j, j] = a[i, j]``."""
    m = a.shape[0]
    band = np.zeros((width + 1, m), dtype=a.dtype)
    for d in range(width + 1):
        band[d, :m - d] = np.diagonal(a, -d)
    return band


def eigvals_all(a: np.ndarray, width: int | None = None) -> np.ndarray:
    """All eigenvalues of Hermitian banded ``a``, ascending."""
    width = bandwidth(a) if width is None else width
    return eig_banded(lower_band(a, width), lower=True, eigvals_only=True)


def eigvals_in(a: np.ndarray, lo: float, hi: float, width: int | None = None) -> np.ndarray:
    """Eigenvalues of Hermitian ``a`` in the half-open window ``(lo, hi]``."""
    width = bandwidth(a) if width is None else width
    return eig_banded(lower_band(a, width), lower=True, eigvals_only=True,
                      select="v", select_range=(lo, hi))


def eigvals_by_index(a: np.ndarray, first: int, last: int, width: int | None = None) -> np.ndarray:
    width = bandwidth(a) if width is None else width
    return eig_banded(lower_band(a, width), lower=True, eigvals_only=True,
                      select="i", select_range=(first, last))


def count_le(a: np.ndarray, lam: float, width: int | None = None) -> int:
    """Number of eigenvalues ``<= lam``."""
    return int(np.searchsorted(eigvals_all(a, width), lam, side="right"))


def _subspace_iteration(a: np.ndarray, lo: float, hi: float, count: int):
    """Shift-invert subspace iteration about the window centre.

    Returns ``None`` unless every Ritz pair in the window has a residual
    below ``RESIDUAL_TOL * (1 + ||a||_inf)`` and the count matches.
    """
    m = a.shape[0]
    # slightly off-centre so an exact zero eigenvalue never sits on the shift
    shift = lo + 0.4813 * (hi - lo)
    sparse = sp.csc_matrix(a)
    lu = splu((sparse - shift * sp.identity(m, dtype=a.dtype, format="csc")).tocsc())
    rng = np.random.default_rng(0)
    p = 2 * count + 8
    x = rng.standard_normal((m, p))
    if np.iscomplexobj(a):
        x = x + 1j * rng.standard_normal((m, p))
    tol = RESIDUAL_TOL * (1.0 + _gershgorin(a))
    for _ in range(MAX_ITERATIONS):
        x, _ = np.linalg.qr(lu.solve(x))
        ax = sparse @ x
        ritz, w = np.linalg.eigh(x.conj().T @ ax)
        keep = (ritz > lo) & (ritz <= hi)
        if keep.sum() != count:
            continue
        vecs = x @ w[:, keep]
        residual = np.linalg.norm(ax @ w[:, keep] - vecs * ritz[keep], axis=0)
        if residual.max(initial=0.0) <= tol:
            return ritz[keep], vecs
    return None


def eigh_in(a: np.ndarray, lo: float, hi: float, width: int | None = None):
    """Eigenpairs of Hermitian ``a`` with eigenvalues in ``(lo, hi]``."""
    width = bandwidth(a) if width is None else width
    if width <= 1:
        # tridiagonal: no band reduction, so vectors are cheap
        return eig_banded(lower_band(a, width), lower=True, select="v", select_range=(lo, hi))
    vals = eigvals_in(a, lo, hi, width)
    if vals.size == 0:
        return vals, np.zeros((a.shape[0], 0), dtype=a.dtype)
    if vals.size <= MAX_SUBSPACE:
        try:
            found = _subspace_iteration(a, lo, hi, vals.size)
        except RuntimeError:  # exactly singular shift
            found = None
        if found is not None:
            return found
    full, vecs = np.linalg.eigh(a)
    keep = (full > lo) & (full <= hi)
    return full[keep], vecs[:, keep]


def interleaved_double(b: np.ndarray) -> np.ndarray:
    """``[[0, B*], [B, 0]]`` with the two copies interleaved so the band stays narrow.

    Index ``2p`` carries the domain coordinate ``p``, index ``2p + 1`` the
    codomain coordinate ``p``.
    """
    m = b.shape[0]
    out = np.zeros((2 * m, 2 * m), dtype=b.dtype)
    out[1::2, 0::2] = b
    out[0::2, 1::2] = b.conj().T
    return out


def largest_singular_value(b: np.ndarray) -> float:
    double = interleaved_double(b)
    return float(eigvals_by_index(double, double.shape[0] - 1, double.shape[0] - 1)[0])
