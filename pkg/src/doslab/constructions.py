"""Executable gadgets behind the discrete log-Hoelder argument.

* ``linf_extremal``: a unit vector in a subspace whose sup norm is at least
  sqrt(dim / n), built from a diagonal-normalized reproducing-kernel row.
* ``build_grid``: a covering of a box by boxes of side R and the two-shell
  layer sites where the constrained vectors are forced to vanish.
* ``constrained_subspace`` / ``propagation_check``: vectors of a spectral
  subspace that vanish on the layer, and the sup-norm bound they obey.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import BandMatrix, BoxSpec
from .spectral import EigenBasis, SpectralWindow

VANISH_TOL = 1e-10


@dataclass(frozen=True)
class GridCover:
    R: int
    centers: np.ndarray
    layer: np.ndarray
    box: BoxSpec
    layer_sizes: np.ndarray = field(repr=False)

    @property
    def n_centers(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class ConstrainedSubspace:
    basis: np.ndarray
    parent_count: int
    layer: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class PropagationReport:
    R: int
    A: float
    eps: float
    bound: float
    log_bound: float
    dim_F: int
    max_sup: float
    max_ratio: float
    max_residual_inf: float
    residual_bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def linf_extremal(basis: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit vector in span(basis) with sup norm >= sqrt(N / n).

    Scans every site x for the kernel row K(x, .) / sqrt(K(x, x)) with the
    largest sup norm, where K = B B^T is the projection kernel.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n, N = B.shape
    if N == 0:
        raise ValueError("linf_extremal needs a nonempty basis")
    diag = np.einsum("ij,ij->i", B, B)
    if not np.any(diag > 0):
        raise ValueError("kernel diagonal vanishes everywhere; basis is not orthonormal")
    best, best_val = -1, -1.0
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        rows = B[start : start + chunk] @ B.T
        d = diag[start : start + chunk]
        ok = d > 0
        val = np.zeros(len(d))
        val[ok] = np.max(np.abs(rows[ok]), axis=1) / np.sqrt(d[ok])
        j = int(np.argmax(val))
        if val[j] > best_val:
            best, best_val = start + j, float(val[j])
    psi = B @ B[best] / math.sqrt(diag[best])
    return psi, float(np.max(np.abs(psi)))


def _axis_centers(lo: int, m: int, R: int) -> list[int]:
    hi = lo + m - 1
    h = R // 2
    out = []
    c = lo + h
    while True:
        out.append(min(c, hi - h))
        if c + h >= hi:
            return out
        c += R


def ring_sizes(box: BoxSpec, centers: np.ndarray, R: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-centre two-shell layer sizes and the union of layer site indices.

    Works per axis: x is in the ring of y iff every |x_k - y_k| <= R/2 and
    not every |x_k - y_k| <= R/2 - 2. For a product grid of centres the union
    is the set of sites with some coordinate in an axis shell.
    """
    h = R // 2
    m = box.side_count
    coords = [np.arange(lo, lo + m) for lo in box.lower]
    sizes = np.empty(len(centers), dtype=np.int64)
    for i, y in enumerate(centers):
        outer = np.prod([np.count_nonzero(np.abs(c - yk) <= h) for c, yk in zip(coords, y)])
        inner = np.prod([np.count_nonzero(np.abs(c - yk) <= h - 2) for c, yk in zip(coords, y)])
        sizes[i] = outer - inner
    axis_shell = []
    for k, c in enumerate(coords):
        yk = np.unique(centers[:, k])
        a = np.abs(c[:, None] - yk[None, :])
        axis_shell.append(np.any((a == h) | (a == h - 1), axis=1))
    mask = np.zeros(box.shape, dtype=bool)
    for k, shell in enumerate(axis_shell):
        shape = [1] * box.d
        shape[k] = m
        mask |= shell.reshape(shape)
    return sizes, np.flatnonzero(mask.ravel())


def build_grid(box: BoxSpec, R: int) -> GridCover:
    """Regular grid of spacing R, last centre per axis clamped so every Lambda_R(y) sits inside the box."""
    if int(R) != R or R % 2:
        raise ValueError(f"grid side R must be an even integer, got {R}")
    R = int(R)
    if not 2 <= R < box.L:
        raise ValueError(f"grid side must satisfy 2 <= R < L, got R={R}, L={box.L}")
    m = box.side_count
    axes = [_axis_centers(int(lo), m, R) for lo in box.lower]
    centers = np.array(np.meshgrid(*axes, indexing="ij")).reshape(box.d, -1).T
    sizes, layer = ring_sizes(box, centers, R)
    return GridCover(R, centers, layer, box, sizes)


def ring_count(d: int, R: int) -> int:
    """Brute-force count of {x in Z^d : |x|_inf in {R/2, R/2 - 1}}."""
    h = R // 2
    g = np.arange(-h, h + 1)
    dist = np.max(np.abs(np.stack(np.meshgrid(*([g] * d), indexing="ij"))), axis=0)
    return int(np.count_nonzero((dist == h) | (dist == h - 1)))


@functools.lru_cache(maxsize=None)
def layer_constant(d: int, R_max: int = 64) -> float:
    """Smallest c with ring size <= c R^(d-1) for every even R <= R_max (exhaustive count)."""
    return max(ring_count(d, R) / R ** (d - 1) for R in range(2, R_max + 1, 2))


def select_R(rho: float, d: int, L: float) -> tuple[int | None, bool]:
    """Even R in [2^(d+1) c_d / rho, 2^(d+1) c_d / rho + 2).

    Returns (R, clamped). When the recipe lands at or beyond L, R is clamped to
    the largest even integer below L and ``clamped`` is True. rho = 0 gives (None, False).
    """
    if rho <= 0:
        return None, False
    lower = 2 ** (d + 1) * layer_constant(d) / rho
    R = 2 * math.ceil(lower / 2)
    if R < 2:
        R = 2
    if R < L:
        return R, False
    R = 2 * math.ceil(L / 2) - 2
    return (R, True) if R >= 2 else (None, True)


def constrained_subspace(P_basis: EigenBasis | np.ndarray, layer) -> ConstrainedSubspace:
    """Orthonormal basis of {psi in span(P_basis) : psi = 0 on the layer sites}."""
    B = P_basis.vectors if isinstance(P_basis, EigenBasis) else np.asarray(P_basis, dtype=float)
    layer = np.asarray(sorted(set(int(i) for i in np.atleast_1d(layer))), dtype=np.int64)
    N = B.shape[1]
    if layer.size == 0 or N == 0:
        return ConstrainedSubspace(B.copy(), N, layer)
    M = B[layer]
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    tol = max(M.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > tol))
    null = Vt[rank:].T
    return ConstrainedSubspace(B @ null, N, layer)


def propagation_constant(R: int, A: float) -> tuple[float, float]:
    """(R/2 - 1) A^(R/2 - 2) and its natural log (the bound per unit residual)."""
    k = R // 2
    if k - 1 <= 0:
        return 0.0, -math.inf
    log_c = math.log(k - 1) + (k - 2) * math.log(A)
    return ((k - 1) * A ** (k - 2) if log_c < 700 else math.inf), log_c


def propagation_check(
    F: ConstrainedSubspace,
    H: BandMatrix,
    window: SpectralWindow,
    cover: GridCover,
    slack: float = 1e-9,
) -> PropagationReport:
    """Check ||psi||_inf <= eps (R/2 - 1) A^(R/2 - 2) for every unit basis vector of F.

    A = 2d - 1 + ||V - E||_inf. The same bound with eps replaced by the true
    residual ||(H - E) psi||_inf is reported alongside.
    """
    if H.box is None or H.box.n_sites != cover.box.n_sites or F.basis.shape[0] != H.n:
        raise ValueError("constrained subspace, Hamiltonian and grid cover describe different boxes")
    if not np.array_equal(np.asarray(F.layer), np.asarray(cover.layer)):
        raise ValueError("constrained subspace was not built on this cover's layer")
    d = H.box.d
    V = H.to_sites(H.diagonal)
    A = 2 * d - 1 + float(np.max(np.abs(V - window.E)))
    const, log_const = propagation_constant(cover.R, A)
    bound = window.eps * const
    log_bound = math.log(window.eps) + log_const
    if F.dim == 0:
        return PropagationReport(cover.R, A, window.eps, bound, log_bound, 0, 0.0, 0.0, 0.0, 0.0, True)
    sups = np.max(np.abs(F.basis), axis=0)
    resid = np.array([np.max(np.abs(H.matvec(F.basis[:, j]) - window.E * F.basis[:, j])) for j in range(F.dim)])
    ratio = float(np.max(sups) / bound) if bound > 0 else math.inf
    ok = bool(np.all(sups <= bound * (1 + slack) + VANISH_TOL))
    return PropagationReport(
        cover.R,
        A,
        window.eps,
        bound,
        log_bound,
        F.dim,
        float(np.max(sups)),
        ratio,
        float(np.max(resid)),
        float(np.max(resid) * const),
        ok,
    )


def construct_report(spec, d: int, L: float, bc: str, E: float, eps: float, R: int | None = None, probe=None) -> dict:
    """Run the whole chain on one realization: P, rho, R, cover, F, psi_0 and the sup bound."""
    from .dos import realize
    from .spectral import eigenpairs_in_window

    H = realize(spec, d, L, bc, probe)
    window = SpectralWindow(E, eps)
    P = eigenpairs_in_window(H, window)
    n = H.n
    rho = P.count / n
    clamped = False
    policy = R is None
    if policy:
        R, clamped = select_R(rho, d, L)
    report = {
        "d": d,
        "L": L,
        "bc": H.box.bc,
        "E": E,
        "eps": eps,
        "n_sites": n,
        "count": P.count,
        "rho": rho,
        "c_d": layer_constant(d),
        "R": R,
        "R_from_policy": policy,
        "R_clamped": clamped,
    }
    if R is None:
        report.update(grid=None, dim_F=0, propagation=None, linf=None)
        return report
    cover = build_grid(H.box, R)
    F = constrained_subspace(P, cover.layer)
    box_ratio = n / (R + 1) ** d
    report["grid"] = {
        "n_centers": cover.n_centers,
        "lower_bound": box_ratio,
        "upper_bound": 2**d * box_ratio,
        "layer_sites": int(cover.layer.size),
        "max_layer_per_center": int(cover.layer_sizes.max()),
    }
    report["dim_F"] = F.dim
    report["dim_F_lower_bound"] = P.count - int(cover.layer.size)
    report["propagation"] = propagation_check(F, H, window, cover).to_dict()
    if F.dim:
        _, attained = linf_extremal(F.basis)
        report["linf"] = {"attained": attained, "lower_bound": math.sqrt(F.dim / n)}
    else:
        report["linf"] = None
    return report
