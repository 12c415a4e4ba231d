"""Carleman weight, harmonic-polynomial dimensions and a lattice UCP probe."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import BandMatrix

QUAD_TOL = 1e-13
_SERIES_CUTOFF = 1e-4


def _integrand(t: float) -> float:
    # (1 - e^-t)/t, extended by 1 at t = 0
    if t < _SERIES_CUTOFF:
        return 1.0 - t / 2 + t * t / 6 - t**3 / 24
    return -math.expm1(-t) / t


def _simpson(a, fa, b, fb, fm):
    return (b - a) / 6 * (fa + 4 * fm + fb)


def _adaptive(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = _simpson(a, fa, m, fm, flm)
    right = _simpson(m, fm, b, fb, frm)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return _adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) + _adaptive(
        f, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1
    )


def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL, max_depth: int = 50) -> float:
    if a == b:
        return 0.0
    fa, fb, m = f(a), f(b), (a + b) / 2
    fm = f(m)
    return _adaptive(f, a, fa, b, fb, m, fm, _simpson(a, fa, b, fb, fm), tol, max_depth)


def _tail(t: float) -> float:
    return math.exp(-t) / t


def _integral(a: float, b: float, tol: float = QUAD_TOL, f=_integrand) -> float:
    # unit-length pieces keep the per-piece tolerance meaningful for large b
    pieces = max(1, math.ceil(b - a))
    total = 0.0
    for k in range(pieces):
        lo = a + (b - a) * k / pieces
        hi = a + (b - a) * (k + 1) / pieces
        total += adaptive_simpson(f, lo, hi, tol / pieces)
    return total


def exponent_integral(s: float, tol: float = QUAD_TOL) -> float:
    """int_0^s (1 - e^-t)/t dt."""
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    return _integral(0.0, s, tol)


# For s > 1 the exponent is Ein(1) + log s - int_1^s e^-t/t dt, so
# phi(s) = exp(-Ein(1) + int_1^s e^-t/t dt). Summing positive pieces keeps
# phi nondecreasing in floating point, where s exp(-Ein(s)) jitters.
_EIN1 = exponent_integral(1.0)


def carleman_phi(s):
    """phi(s) = s exp(-int_0^s (1 - e^-t)/t dt); accepts a scalar or an array."""
    if np.ndim(s) == 0:
        s = float(s)
        if s < 0:
            raise ValueError(f"carleman_phi needs s >= 0, got {s}")
        if s <= 1:
            return 0.0 if s == 0 else s * math.exp(-exponent_integral(s))
        return math.exp(-_EIN1 + _integral(1.0, s, f=_tail))
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("carleman_phi needs s >= 0")
    flat = s.ravel()
    order = np.argsort(flat, kind="stable")
    out = np.empty_like(flat)
    acc, prev = 0.0, 0.0
    tail, prev_t = 0.0, 1.0
    for i in order:
        x = flat[i]
        if x <= 1:
            if x > prev:
                acc += _integral(prev, x)
                prev = x
            out[i] = x * math.exp(-acc)
        else:
            if x > prev_t:
                tail += _integral(prev_t, x, f=_tail)
                prev_t = x
            out[i] = math.exp(-_EIN1 + tail)
    return out.reshape(s.shape)


def C1() -> float:
    """1 / phi(1)."""
    return 1.0 / carleman_phi(1.0)


@dataclass(frozen=True)
class CarlemanWeight:
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


def carleman_weight(w: CarlemanWeight, x) -> float | np.ndarray:
    """w_rho(x) = phi(|x| / rho); x is one point (d,) or an array of points (k, d)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return carleman_phi(r / w.rho)


def weight_bounds(w: CarlemanWeight, x) -> tuple[np.ndarray, np.ndarray]:
    """The elementary sandwich |x|/(C1 rho) <= w_rho(x) <= |x|/rho on B(0, rho)."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    return r / (C1() * w.rho), r / w.rho


# ---------------------------------------------------------------------------
# harmonic polynomials


@dataclass(frozen=True)
class HarmonicDims:
    d: int
    table: tuple[int, ...]
    cumulative: tuple[int, ...]
    gamma_d: float


def harmonic_dim(d: int, m: int) -> int:
    if d < 2:
        raise ValueError(f"harmonic dimensions need d >= 2, got {d}")
    if m < 0:
        raise ValueError(f"degree must be nonnegative, got {m}")
    if m == 0:
        return 1
    if m == 1:
        return d
    return math.comb(d + m - 1, d - 1) - math.comb(d + m - 3, d - 1)


def harmonic_dims(d: int, N: int) -> HarmonicDims:
    """dim H_m for m = 0..N, the running sums, and an admissible gamma_d on 1..N.

    gamma_d is certified only for the tabulated range.
    """
    table = [harmonic_dim(d, m) for m in range(N + 1)]
    cumulative = np.cumsum(table).tolist()
    if N >= 1:
        n = np.arange(1, N + 1, dtype=float)
        gamma = float(np.max(np.asarray(cumulative[1:], dtype=float) / n ** (d - 1)))
    else:
        gamma = float(cumulative[0])
    return HarmonicDims(d, tuple(table), tuple(int(c) for c in cumulative), gamma)


# ---------------------------------------------------------------------------
# UCP probe


@dataclass(frozen=True)
class UcpReport:
    Q: float
    delta: float
    norm_theta: float
    norm_local: float
    norm_zeta: float
    norm_total: float
    norm_complement: float
    empirical_exponent: float | None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DELTA_MAX = 1 / 24


def ucp_probe(psi, H: BandMatrix, E: float, theta, x0: int, delta: float) -> UcpReport:
    """Norms entering the quantitative unique continuation bound for a lattice vector.

    ``theta`` and ``x0`` are site indices of ``H.box``; ``psi`` is site ordered.
    The local mass near x0 is |psi(x0)| delta^(d/2), the L^2 mass of a locally
    constant function on a ball of radius delta below the lattice spacing.
    """
    if H.box is None:
        raise ValueError("ucp_probe needs a Hamiltonian that carries its box")
    psi = np.asarray(psi, dtype=float)
    theta = np.unique(np.asarray(theta, dtype=np.int64))
    if theta.size == 0:
        raise ValueError("theta must contain at least one site")
    if x0 in set(theta.tolist()):
        raise ValueError("x0 must lie outside theta")
    sites = H.box.sites().astype(float)
    dists = np.linalg.norm(sites[theta] - sites[x0], axis=1)
    Q = float(dists.max())
    dist = float(dists.min())
    if Q < 1:
        raise ValueError(f"Q = {Q} < 1")
    if not 0 < delta <= min(dist, DELTA_MAX):
        raise ValueError(f"delta must satisfy 0 < delta <= min(dist(x0, theta), 1/24) = {min(dist, DELTA_MAX)}, got {delta}")
    norm_theta = float(np.linalg.norm(psi[theta]))
    if norm_theta == 0:
        raise ValueError("psi vanishes on theta")
    mask = np.ones(len(psi), dtype=bool)
    mask[theta] = False
    zeta = H.matvec(psi) - E * psi
    d = H.box.d
    norm_local = abs(psi[x0]) * delta ** (d / 2)
    norm_zeta = float(np.linalg.norm(zeta))
    num = norm_local**2 + delta**2 * norm_zeta**2
    exponent = math.log(num / norm_theta**2) / math.log(delta / Q) if num > 0 else None
    V = H.to_sites(H.diagonal)
    meta = {"K": float(np.max(np.abs(V - E))), "d": d, "E": float(E), "x0": sites[x0].astype(int).tolist()}
    return UcpReport(
        Q,
        delta,
        norm_theta,
        float(norm_local),
        norm_zeta,
        float(np.linalg.norm(psi)),
        float(np.linalg.norm(psi[mask])),
        exponent,
        meta,
    )
