"""Lattice boxes, bounded potentials and the discrete Hamiltonian H = -Delta + V.

Sites of a box are enumerated lexicographically (last coordinate fastest).
Hamiltonians are stored as symmetric lower band matrices; for periodic boxes
the rows are permuted by a per-axis folded ordering so that wraparound bonds
stay inside a narrow band (see ``BandMatrix.perm``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DIRICHLET = "D"
PERIODIC = "P"
BOUNDARY_CONDITIONS = (DIRICHLET, PERIODIC)


def _normalize_bc(bc: str) -> str:
    key = str(bc).strip().upper()
    aliases = {"D": DIRICHLET, "DIRICHLET": DIRICHLET, "P": PERIODIC, "PERIODIC": PERIODIC}
    if key not in aliases:
        raise ValueError(f"unknown boundary condition {bc!r}; expected one of D, P")
    return aliases[key]


@dataclass(frozen=True)
class BoxSpec:
    """The box {y in Z^d : |y - x0|_inf <= L/2} with a boundary-condition tag."""

    d: int
    L: float
    x0: tuple[int, ...]
    bc: str = DIRICHLET

    @property
    def half(self) -> int:
        return int(math.floor(self.L / 2))

    @property
    def side_count(self) -> int:
        return 2 * self.half + 1

    @property
    def n_sites(self) -> int:
        return self.side_count ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side_count,) * self.d

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.x0, dtype=np.int64) - self.half

    def sites(self) -> np.ndarray:
        """Integer coordinates of all sites, shape (n, d), in index order."""
        axes = [np.arange(self.side_count, dtype=np.int64)] * self.d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return grid + self.lower

    def index_of(self, coords) -> np.ndarray | int:
        """Site index of integer coordinates (single tuple or (k, d) array)."""
        c = np.asarray(coords, dtype=np.int64)
        local = c - self.lower
        if np.any(local < 0) or np.any(local >= self.side_count):
            raise ValueError(f"coordinates {coords!r} lie outside the box")
        idx = np.ravel_multi_index(tuple(np.moveaxis(local, -1, 0)), self.shape)
        return int(idx) if np.ndim(idx) == 0 else idx

    def translate(self, t: Sequence[int]) -> "BoxSpec":
        return BoxSpec(self.d, self.L, tuple(int(a + b) for a, b in zip(self.x0, t)), self.bc)

    def with_bc(self, bc: str) -> "BoxSpec":
        return make_box(self.d, self.L, self.x0, bc)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "x0": list(self.x0), "bc": self.bc}


def make_box(d: int, L: float, x0: Sequence[int] | int | None = None, bc: str = DIRICHLET) -> BoxSpec:
    if d not in (1, 2, 3):
        raise ValueError(f"unsupported dimension d={d}; expected 1, 2 or 3")
    L = float(L)
    if not math.isfinite(L) or L <= 0:
        raise ValueError(f"box side must be positive, got L={L}")
    if L < 1:
        raise ValueError(f"box side must satisfy L >= 1, got L={L}")
    if x0 is None:
        x0 = (0,) * d
    elif np.ndim(x0) == 0:
        x0 = (int(x0),) * d
    x0 = tuple(int(v) for v in x0)
    if len(x0) != d:
        raise ValueError(f"center {x0} does not have {d} coordinates")
    bc = _normalize_bc(bc)
    box = BoxSpec(d, L, x0, bc)
    if bc == PERIODIC and box.side_count < 3:
        raise ValueError(
            f"periodic boundary condition needs at least 3 sites per axis, box has {box.side_count}"
        )
    return box


# ---------------------------------------------------------------------------
# counter-based RNG

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x) -> np.ndarray:
    """One splitmix64 step applied elementwise (wrapping uint64 arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def site_uniforms(seed: int, coords: np.ndarray, stream: int = 0) -> np.ndarray:
    """Uniform [0, 1) variates that depend only on (seed, stream, site coordinates)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    with np.errstate(over="ignore"):
        h = splitmix64(np.full(coords.shape[0], np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
        h = splitmix64(h ^ np.uint64(stream))
        for j in range(coords.shape[1]):
            h = splitmix64(h ^ coords[:, j].astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Constant:
    c: float = 0.0
    kind = "constant"
    stochastic = False

    def sup_bound(self) -> float:
        return abs(self.c)

    def values(self, coords: np.ndarray, seed: int) -> np.ndarray:
        return np.full(len(coords), float(self.c))

    def params(self) -> dict:
        return {"c": self.c}


@dataclass(frozen=True)
class Periodic:
    """V(x) = table[x mod period]; ``table`` is a flat C-order list of prod(period) values."""

    period: tuple[int, ...]
    table: tuple[float, ...]
    kind = "periodic"
    stochastic = False

    def __post_init__(self):
        if any(p < 1 for p in self.period):
            raise ValueError(f"periods must be positive, got {self.period}")
        if len(self.table) != int(np.prod(self.period)):
            raise ValueError(
                f"periodic table has {len(self.table)} values, period {self.period} needs {int(np.prod(self.period))}"
            )

    def sup_bound(self) -> float:
        return float(np.max(np.abs(self.table)))

    def values(self, coords: np.ndarray, seed: int) -> np.ndarray:
        if coords.shape[1] != len(self.period):
            raise ValueError(f"period {self.period} does not match dimension {coords.shape[1]}")
        p = np.asarray(self.period, dtype=np.int64)
        idx = np.ravel_multi_index(tuple(np.mod(coords, p).T), tuple(self.period))
        return np.asarray(self.table, dtype=float)[idx]

    def params(self) -> dict:
        return {"period": list(self.period), "table": list(self.table)}


@dataclass(frozen=True)
class Quasiperiodic:
    """V(x) = amplitude * cos(2 pi (alpha . x + theta))."""

    amplitude: float
    alpha: tuple[float, ...]
    theta: float = 0.0
    kind = "quasiperiodic"
    stochastic = False

    def sup_bound(self) -> float:
        return abs(self.amplitude)

    def values(self, coords: np.ndarray, seed: int) -> np.ndarray:
        if coords.shape[1] != len(self.alpha):
            raise ValueError(f"frequency {self.alpha} does not match dimension {coords.shape[1]}")
        phase = coords.astype(float) @ np.asarray(self.alpha, dtype=float) + self.theta
        return self.amplitude * np.cos(2 * np.pi * phase)

    def params(self) -> dict:
        return {"amplitude": self.amplitude, "alpha": list(self.alpha), "theta": self.theta}


@dataclass(frozen=True)
class AndersonUniform:
    """Independent site potentials coupling * U[lo, hi]."""

    coupling: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    kind = "anderson_uniform"
    stochastic = True

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"uniform range needs lo <= hi, got lo={self.lo}, hi={self.hi}")

    def sup_bound(self) -> float:
        return abs(self.coupling) * max(abs(self.lo), abs(self.hi))

    def values(self, coords: np.ndarray, seed: int) -> np.ndarray:
        u = site_uniforms(seed, coords)
        return self.coupling * (self.lo + (self.hi - self.lo) * u)

    def params(self) -> dict:
        return {"coupling": self.coupling, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class AndersonBernoulli:
    """Independent site potentials coupling * Bernoulli(q)."""

    coupling: float = 1.0
    q: float = 0.5
    kind = "anderson_bernoulli"
    stochastic = True

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"Bernoulli probability must lie in [0, 1], got q={self.q}")

    def sup_bound(self) -> float:
        return abs(self.coupling) if self.q > 0 else 0.0

    def values(self, coords: np.ndarray, seed: int) -> np.ndarray:
        u = site_uniforms(seed, coords)
        return np.where(u < self.q, float(self.coupling), 0.0)

    def params(self) -> dict:
        return {"coupling": self.coupling, "q": self.q}


VARIANTS = {cls.kind: cls for cls in (Constant, Periodic, Quasiperiodic, AndersonUniform, AndersonBernoulli)}
_TUPLE_FIELDS = {"period": int, "table": float, "alpha": float}


@dataclass(frozen=True)
class PotentialSpec:
    variant: Constant | Periodic | Quasiperiodic | AndersonUniform | AndersonBernoulli
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def stochastic(self) -> bool:
        return self.variant.stochastic

    def sup_bound(self) -> float:
        return self.variant.sup_bound()

    def with_seed(self, seed: int) -> "PotentialSpec":
        return PotentialSpec(self.variant, int(seed))

    def to_dict(self) -> dict:
        out = {"kind": self.variant.kind, **self.variant.params()}
        if self.stochastic:
            out["seed"] = int(self.seed)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "PotentialSpec":
        doc = dict(doc)
        kind = doc.pop("kind", None)
        if kind not in VARIANTS:
            raise ValueError(f"unknown potential kind {kind!r}; expected one of {sorted(VARIANTS)}")
        variant_cls = VARIANTS[kind]
        seed = doc.pop("seed", None)
        if variant_cls.stochastic and seed is None:
            raise ValueError(f"potential kind {kind!r} is stochastic and requires an explicit 'seed'")
        for key, conv in _TUPLE_FIELDS.items():
            if key in doc:
                doc[key] = tuple(conv(v) for v in doc[key])
        try:
            variant = variant_cls(**doc)
        except TypeError as exc:
            raise ValueError(f"bad parameters for potential kind {kind!r}: {exc}") from None
        return cls(variant, int(seed or 0))


@dataclass(frozen=True)
class PotentialField:
    box: BoxSpec
    values: np.ndarray
    spec: PotentialSpec
    realized_sup: float


def sample_potential(spec: PotentialSpec, box: BoxSpec) -> PotentialField:
    values = np.asarray(spec.variant.values(box.sites(), spec.seed), dtype=float)
    values.setflags(write=False)
    realized = float(np.max(np.abs(values))) if values.size else 0.0
    if realized > spec.sup_bound() * (1 + 1e-15):
        raise AssertionError("sampled potential exceeds its declared sup bound")
    return PotentialField(box, values, spec, realized)


# ---------------------------------------------------------------------------
# band storage


@dataclass(frozen=True)
class BandMatrix:
    """Symmetric matrix with lower band storage ``bands[i, k] = H[i, i - k]``.

    ``perm[i]`` is the site index carried by row ``i`` (``None`` means identity).
    """

    bands: np.ndarray
    perm: np.ndarray | None = None
    box: BoxSpec | None = None
    potential: PotentialField | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.bands.shape[0]

    @property
    def b(self) -> int:
        return self.bands.shape[1] - 1

    @property
    def diagonal(self) -> np.ndarray:
        return self.bands[:, 0]

    def scale(self) -> float:
        """Max absolute row sum, an upper bound for the spectral radius."""
        a = np.abs(self.bands)
        rows = a.sum(axis=1)
        for k in range(1, self.b + 1):
            rows[: self.n - k] += a[k:, k]
        return float(rows.max()) if self.n else 0.0

    def to_dense(self, site_order: bool = True) -> np.ndarray:
        n, b = self.n, self.b
        A = np.zeros((n, n))
        for k in range(b + 1):
            i = np.arange(k, n)
            A[i, i - k] = self.bands[k:, k]
            A[i - k, i] = self.bands[k:, k]
        if site_order and self.perm is not None:
            S = np.empty_like(A)
            S[np.ix_(self.perm, self.perm)] = A
            return S
        return A

    def shifted(self, c: float) -> "BandMatrix":
        bands = self.bands.copy()
        bands[:, 0] += c
        return BandMatrix(bands, self.perm, self.box, None)

    def to_rows(self, v: np.ndarray) -> np.ndarray:
        """Site-ordered vector(s) -> row-ordered."""
        return v if self.perm is None else v[self.perm]

    def to_sites(self, v: np.ndarray) -> np.ndarray:
        """Row-ordered vector(s) -> site-ordered."""
        if self.perm is None:
            return v
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def matvec(self, x: np.ndarray, site_order: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xr = self.to_rows(x) if site_order else x
        y = self.bands[:, 0] * xr
        for k in range(1, self.b + 1):
            y[k:] += self.bands[k:, k] * xr[:-k]
            y[:-k] += self.bands[k:, k] * xr[k:]
        return self.to_sites(y) if site_order else y

    @classmethod
    def from_dense(cls, A: np.ndarray, b: int | None = None) -> "BandMatrix":
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        if b is None:
            nz = np.nonzero(np.tril(A))
            b = int(np.max(nz[0] - nz[1])) if nz[0].size else 0
        bands = np.zeros((n, b + 1))
        for k in range(b + 1):
            i = np.arange(k, n)
            bands[k:, k] = A[i, i - k]
        return cls(bands)


def neighbor_pairs(box: BoxSpec) -> np.ndarray:
    """Unordered nearest-neighbour site-index pairs (i < j), wraparound included for P."""
    m = box.side_count
    grid = np.arange(box.n_sites).reshape(box.shape)
    pairs = []
    for axis in range(box.d):
        a = np.take(grid, np.arange(m - 1), axis=axis).ravel()
        c = np.take(grid, np.arange(1, m), axis=axis).ravel()
        pairs.append(np.stack([a, c], axis=1))
        if box.bc == PERIODIC:
            a = np.take(grid, [0], axis=axis).ravel()
            c = np.take(grid, [m - 1], axis=axis).ravel()
            pairs.append(np.stack([a, c], axis=1))
    out = np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=np.int64)
    return np.sort(out, axis=1)


def folded_rank(m: int) -> np.ndarray:
    """Position -> rank in the order 0, m-1, 1, m-2, ...; neighbours (and the wrap) differ by <= 2."""
    p = np.arange(m)
    h = (m + 1) // 2
    return np.where(p < h, 2 * p, 2 * (m - 1 - p) + 1)


def row_order(box: BoxSpec) -> np.ndarray | None:
    """Site index carried by each band row (``None`` for the lexicographic identity)."""
    if box.bc == DIRICHLET:
        return None
    m = box.side_count
    rank = folded_rank(m)
    local = np.indices(box.shape).reshape(box.d, -1)
    row_of_site = np.ravel_multi_index(tuple(rank[local]), box.shape)
    perm = np.empty(box.n_sites, dtype=np.int64)
    perm[row_of_site] = np.arange(box.n_sites)
    return perm


def assemble_hamiltonian(field: PotentialField) -> BandMatrix:
    box = field.box
    n = box.n_sites
    if field.values.shape != (n,):
        raise ValueError(f"potential has {field.values.shape} values, box has {n} sites")
    perm = row_order(box)
    pairs = neighbor_pairs(box)
    if perm is not None:
        row_of_site = np.empty(n, dtype=np.int64)
        row_of_site[perm] = np.arange(n)
        rows = row_of_site[pairs]
        diag = field.values[perm]
    else:
        rows = pairs
        diag = field.values
    rows = np.sort(rows, axis=1)
    offsets = rows[:, 1] - rows[:, 0]
    b = int(offsets.max()) if offsets.size else 0
    bands = np.zeros((n, b + 1))
    bands[:, 0] = diag
    np.add.at(bands, (rows[:, 1], offsets), -1.0)
    return BandMatrix(bands, perm, box, field)


def hamiltonian(spec: PotentialSpec, box: BoxSpec) -> BandMatrix:
    return assemble_hamiltonian(sample_potential(spec, box))


def lattice_translates(period: Sequence[int]) -> list[tuple[int, ...]]:
    """All translates in one fundamental domain of a periodic potential."""
    return [tuple(t) for t in itertools.product(*(range(p) for p in period))]
