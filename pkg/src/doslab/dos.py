"""Finite-volume density-of-states measures and their translate suprema.

eta_Lambda(B) = #{eigenvalues of H_Lambda in B} / |Lambda|. The outer
estimate replaces the supremum over all box centres by a maximum over a
finite probe family: translates for deterministic potentials, seeds for
random ones.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .lattice import (
    DIRICHLET,
    PERIODIC,
    BandMatrix,
    Periodic,
    PotentialSpec,
    hamiltonian,
    lattice_translates,
    make_box,
    neighbor_pairs,
)
from .spectral import NUDGE, SpectralWindow, count_at_most, count_in_interval, window_counts

log = logging.getLogger(__name__)

# reference log-Hoelder exponents for the continuum operator in d = 1, 2, 3
KAPPA_REFERENCE = {1: 1.0, 2: 0.25, 3: 0.125}
# the discrete operator has exponent 1 in every dimension
KAPPA_DISCRETE = 1.0
EPS_MAX = 0.5
DEFAULT_EPS_GRID = tuple(2.0**-k for k in range(1, 21))


@dataclass(frozen=True)
class DosPoint:
    eps: float
    eta: float
    count: int
    L: float
    E: float
    bc: str
    probe: Hashable = None
    d: int = 1


@dataclass
class DosCurve:
    points: list[DosPoint]
    fit: tuple[float, float, float] | None = None
    per_probe: dict = field(default_factory=dict)
    dropped: int = 0

    @property
    def eps(self) -> np.ndarray:
        return np.array([p.eps for p in self.points])

    @property
    def eta(self) -> np.ndarray:
        return np.array([p.eta for p in self.points])


@dataclass(frozen=True)
class OuterEstimate:
    value: float
    argmax: Hashable
    probes: int
    etas: tuple[float, ...] = ()
    counts: tuple[int, ...] = ()


def _box_info(H: BandMatrix):
    if H.box is None:
        return H.n, DIRICHLET, 1
    return H.box.L, H.box.bc, H.box.d


def eta_interval(H: BandMatrix, window: SpectralWindow, probe: Hashable = None) -> DosPoint:
    count = count_in_interval(H, window)
    L, bc, d = _box_info(H)
    return DosPoint(window.eps, count / H.n, count, L, window.E, bc, probe, d)


def ids(H: BandMatrix, E: float) -> float:
    """Integrated density of states N(E) = eta(]-inf, E])."""
    return count_at_most(H, E) / H.n


def realize(spec: PotentialSpec, d: int, L: float, bc: str, probe) -> BandMatrix:
    """Hamiltonian for one probe: a seed for random potentials, a box centre otherwise."""
    if spec.stochastic:
        seed = spec.seed if probe is None else int(probe)
        return hamiltonian(spec.with_seed(seed), make_box(d, L, None, bc))
    center = (0,) * d if probe is None else tuple(int(c) for c in np.atleast_1d(probe))
    return hamiltonian(spec, make_box(d, L, center, bc))


def default_probes(spec: PotentialSpec, d: int, n_seeds: int = 8) -> list:
    if spec.stochastic:
        return list(range(spec.seed, spec.seed + n_seeds))
    if isinstance(spec.variant, Periodic):
        return lattice_translates(spec.variant.period)
    return [(0,) * d]


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def translate_sup(
    spec: PotentialSpec,
    L: float,
    bc: str,
    window: SpectralWindow,
    probes: Sequence,
    d: int = 1,
    threads: int = 1,
) -> OuterEstimate:
    probes = list(probes)
    if not probes:
        raise ValueError("translate_sup needs at least one probe")
    counts = _pool_map(lambda p: count_in_interval(realize(spec, d, L, bc, p), window), probes, threads)
    n = make_box(d, L, None, bc).n_sites
    etas = [c / n for c in counts]
    best = int(np.argmax(etas))
    return OuterEstimate(etas[best], probes[best], len(probes), tuple(etas), tuple(int(c) for c in counts))


def check_eps_grid(eps_grid: Sequence[float]) -> np.ndarray:
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise ValueError("eps grid must be a nonempty list")
    bad = eps[(eps <= 0) | (eps > EPS_MAX)]
    if bad.size:
        raise ValueError(f"eps values must lie in (0, 1/2]; got {bad.tolist()}")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps grid must be strictly decreasing")
    return eps


def dos_sweep(
    spec: PotentialSpec,
    L: float,
    bc: str,
    E: float,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    probes: Sequence | None = None,
    d: int = 1,
    threads: int = 1,
) -> DosCurve:
    """eta*_L([E, E + eps]) over a decreasing eps grid.

    Each probe's Hamiltonian is built once and all windows share its left
    endpoint count. ``per_probe`` maps probe -> counts per eps.
    """
    eps = check_eps_grid(eps_grid)
    probes = default_probes(spec, d) if probes is None else list(probes)
    if not probes:
        raise ValueError("dos_sweep needs at least one probe")

    tau = NUDGE * max(1.0, abs(E) + EPS_MAX, 2 * d + spec.sup_bound())
    if eps[-1] < 1e3 * tau:
        log.info("smallest eps=%g is within 1e3 counting nudges (tau<=%g)", eps[-1], tau)

    def one(p):
        return window_counts(realize(spec, d, L, bc, p), E, eps)

    table = np.array(_pool_map(one, probes, threads), dtype=np.int64)
    n = make_box(d, L, None, bc).n_sites
    points = []
    for j, e in enumerate(eps):
        best = int(np.argmax(table[:, j]))
        c = int(table[best, j])
        points.append(DosPoint(float(e), c / n, c, L, E, bc, probes[best], d))
    per_probe = {p: [int(c) for c in row] for p, row in zip(_keys(probes), table)}
    curve = DosCurve(points, per_probe=per_probe)
    curve.fit = fit_log_holder(curve)
    curve.dropped = sum(1 for p in points if p.eta <= 0)
    return curve


def _keys(probes):
    return [tuple(p) if isinstance(p, (list, np.ndarray)) else p for p in probes]


def fit_log_holder(curve: DosCurve | Sequence[tuple[float, float]]) -> tuple[float, float, float] | None:
    """Least-squares fit of log eta = log C - kappa * log log(1/eps).

    Points with eta = 0 are dropped; fewer than three remaining points give None.
    Returns (C_hat, kappa_hat, rms_residual).
    """
    if isinstance(curve, DosCurve):
        pairs = [(p.eps, p.eta) for p in curve.points]
    else:
        pairs = [(float(e), float(h)) for e, h in curve]
    pairs = [(e, h) for e, h in pairs if h > 0]
    if len(pairs) < 3:
        return None
    e, h = np.array(pairs).T
    x = np.log(np.log(1.0 / e))
    y = np.log(h)
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return float(np.exp(coef[0])), float(-coef[1]), float(np.sqrt(np.mean(resid**2)))


def wrap_difference_rank(box) -> int:
    """Rank of H_D - H_P, computed on the boundary sites that carry wraparound bonds."""
    per = neighbor_pairs(box.with_bc(PERIODIC))
    dirichlet = {tuple(p) for p in neighbor_pairs(box.with_bc(DIRICHLET))}
    wrap = np.array([p for p in map(tuple, per) if p not in dirichlet], dtype=np.int64).reshape(-1, 2)
    if wrap.size == 0:
        return 0
    sites, local = np.unique(wrap, return_inverse=True)
    local = local.reshape(-1, 2)
    M = np.zeros((len(sites), len(sites)))
    M[local[:, 0], local[:, 1]] = 1.0
    M[local[:, 1], local[:, 0]] = 1.0
    return int(np.linalg.matrix_rank(M))


def bc_compare(spec: PotentialSpec, L: float, window: SpectralWindow, d: int = 1, probe=None) -> tuple[int, int, int]:
    """(count_D, count_P, rank(H_D - H_P)) on one potential realization."""
    HD = realize(spec, d, L, DIRICHLET, probe)
    HP = realize(spec, d, L, PERIODIC, probe)
    if not np.array_equal(HD.potential.values, HP.potential.values):
        raise AssertionError("boundary conditions compared on different potential realizations")
    rank = wrap_difference_rank(HD.box)
    return count_in_interval(HD, window), count_in_interval(HP, window), rank


def kappa_reference(d: int) -> float:
    return KAPPA_REFERENCE.get(d, math.nan)
