"""Exact eigenvalue counting for symmetric band matrices.

Counts come from Sylvester's law of inertia applied to an unpivoted band
LDL^T factorization of H - shift*I. Tridiagonal matrices additionally have a
Sturm-sequence path that evaluates many shifts in one sweep. Dense
diagonalization is kept as an oracle for moderate n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lattice import BandMatrix

log = logging.getLogger(__name__)

DENSE_CAP = 4096
NUDGE = 1e-9
MAX_RETRIES = 3


class FactorizationError(RuntimeError):
    def __init__(self, shift: float, message: str):
        super().__init__(f"{message} (shift={shift!r})")
        self.shift = shift


class DenseCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class InertiaTriple:
    below: int
    zero: int
    above: int
    shift: float = 0.0
    perturbation: float = 0.0
    flops: int = 0

    @property
    def n(self) -> int:
        return self.below + self.zero + self.above


@dataclass(frozen=True)
class SpectralWindow:
    """The closed interval [E, E + eps]."""

    E: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"window width must be positive, got eps={self.eps}")

    @property
    def hi(self) -> float:
        return self.E + self.eps


@dataclass(frozen=True)
class EigenBasis:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.values)


def nudge(x: float, scale: float) -> float:
    return NUDGE * max(1.0, abs(x), scale)


# ---------------------------------------------------------------------------
# band LDL^T


_update_index_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _update_indices(b: int):
    # A[j+p, j+q] -= d l_p l_q for 1 <= q <= p <= b, stored at T[j+p, p-q]
    if b not in _update_index_cache:
        p, q = np.tril_indices(b)
        _update_index_cache[b] = (p + 1, p - q, q + 1)
    return _update_index_cache[b]


def _ldlt_pivots(bands: np.ndarray, shift: float) -> np.ndarray | None:
    """Pivots of the LDL^T factorization of H - shift*I, or None on breakdown."""
    n, b1 = bands.shape
    b = b1 - 1
    if b == 0:
        return bands[:, 0] - shift
    T = np.zeros((n + b, b1))
    T[:n] = bands
    T[:n, 0] -= shift
    P, K, Q = _update_indices(b)
    offs = np.arange(1, b1)
    pivots = np.empty(n)
    for j in range(n):
        d = T[j, 0]
        col = T[j + offs, offs]
        pivots[j] = d
        if d == 0.0:
            if np.any(col != 0.0):
                return None
            continue
        lv = col / d
        T[j + P, K] -= d * lv[P - 1] * lv[Q - 1]
    return pivots


def sturm_counts(diag: np.ndarray, off: np.ndarray, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift of a symmetric tridiagonal matrix."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    off2 = np.asarray(off, dtype=float) ** 2
    pivmin = np.finfo(float).tiny * max(1.0, float(off2.max()) if off2.size else 1.0)
    q = diag[0] - shifts
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, len(diag)):
        q = (diag[i] - shifts) - off2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def ldlt_inertia(H: BandMatrix, shift: float, direction: int = 1, tau: float | None = None) -> InertiaTriple:
    """Inertia of H - shift*I.

    A zero pivot breaks the unpivoted factorization; the shift is then moved by
    ``direction * tau`` (tau doubling) for up to three retries.
    """
    if tau is None:
        tau = nudge(shift, H.scale())
    flops = H.n * (H.b + 1) ** 2
    moved = 0.0
    step = tau
    for attempt in range(MAX_RETRIES + 1):
        s = shift + moved
        piv = _ldlt_pivots(H.bands, s)
        if piv is not None:
            if moved:
                log.info("zero pivot at shift %r, factored at %r instead", shift, s)
            below = int(np.count_nonzero(piv < 0))
            zero = int(np.count_nonzero(piv == 0))
            return InertiaTriple(below, zero, H.n - below - zero, s, moved, flops * (attempt + 1))
        moved += direction * step
        step *= 2
    raise FactorizationError(shift, f"LDL^T breakdown persisted after {MAX_RETRIES} perturbations")


def _is_tridiagonal(H: BandMatrix) -> bool:
    return H.b <= 1


def counts_below(H: BandMatrix, shifts, direction: int = 1, method: str = "auto") -> np.ndarray:
    """Eigenvalue counts strictly below each shift."""
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    if method == "sturm" or (method == "auto" and _is_tridiagonal(H)):
        if H.b == 0:
            return np.count_nonzero(H.diagonal[:, None] < shifts[None, :], axis=0)
        return sturm_counts(H.diagonal, H.bands[1:, 1], shifts)
    return np.array([ldlt_inertia(H, s, direction).below for s in shifts], dtype=np.int64)


def count_at_most(H: BandMatrix, x: float, scale: float | None = None, method: str = "auto") -> int:
    """#{lambda <= x}, evaluated at the outward-nudged shift x + tau."""
    scale = H.scale() if scale is None else scale
    return int(counts_below(H, [x + nudge(x, scale)], +1, method)[0])


def count_below(H: BandMatrix, x: float, scale: float | None = None, method: str = "auto") -> int:
    """#{lambda < x}, evaluated at the outward-nudged shift x - tau."""
    scale = H.scale() if scale is None else scale
    return int(counts_below(H, [x - nudge(x, scale)], -1, method)[0])


def count_in_interval(H: BandMatrix, window: SpectralWindow, method: str = "auto") -> int:
    scale = H.scale()
    return count_at_most(H, window.hi, scale, method) - count_below(H, window.E, scale, method)


def window_counts(H: BandMatrix, E: float, eps_grid, method: str = "auto") -> np.ndarray:
    """Counts in [E, E + eps] for every eps, sharing one left-endpoint evaluation."""
    scale = H.scale()
    eps_grid = np.asarray(eps_grid, dtype=float)
    his = E + eps_grid
    upper = counts_below(H, his + np.array([nudge(h, scale) for h in his]), +1, method)
    lower = count_below(H, E, scale, method)
    return upper - lower


# ---------------------------------------------------------------------------
# dense oracle


def _check_cap(H: BandMatrix, cap: int):
    if H.n > cap:
        raise DenseCapExceeded(f"dense diagonalization refused: n={H.n} exceeds cap {cap}")


def dense_spectrum(H: BandMatrix, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues, ascending (Householder tridiagonalization + implicit QL/QR)."""
    _check_cap(H, cap)
    if H.n == 0:
        return np.zeros(0)
    return scipy.linalg.eigh(H.to_dense(site_order=False), eigvals_only=True, driver="ev")


def _sign_normalize(V: np.ndarray) -> np.ndarray:
    for j in range(V.shape[1]):
        v = V[:, j]
        big = np.flatnonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))
        if big.size and v[big[0]] < 0:
            V[:, j] = -v
    return V


def eigenpairs_in_window(H: BandMatrix, window: SpectralWindow, cap: int = DENSE_CAP) -> EigenBasis:
    """Orthonormal eigenvectors (site order) for the eigenvalues in the closed window."""
    _check_cap(H, cap)
    scale = H.scale()
    lo = window.E - nudge(window.E, scale)
    hi = window.hi + nudge(window.hi, scale)
    w, V = scipy.linalg.eigh(H.to_dense(site_order=False), driver="evd")
    keep = (w >= lo) & (w < hi)
    vectors = _sign_normalize(H.to_sites(V[:, keep]))
    return EigenBasis(w[keep], vectors)
