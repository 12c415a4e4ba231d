import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doslab.lattice import Constant, PotentialSpec, hamiltonian, make_box
from doslab.ucp import (
    DELTA_MAX,
    C1,
    CarlemanWeight,
    carleman_phi,
    carleman_weight,
    exponent_integral,
    harmonic_dim,
    harmonic_dims,
    ucp_probe,
    weight_bounds,
)

from .oracles import harmonic_dim_by_rank

# 1/phi(1) from a 40-digit evaluation of exp(Ein(1)), Ein(1) = gamma + E1(1)
C1_REFERENCE = 2.21798604964204240


def test_phi_zero():
    assert carleman_phi(0.0) == 0.0
    assert carleman_phi(np.array([0.0]))[0] == 0.0


def test_phi_rejects_negative():
    with pytest.raises(ValueError):
        carleman_phi(-0.1)
    with pytest.raises(ValueError):
        carleman_phi(np.array([0.5, -1.0]))


def test_C1():
    c = C1()
    assert 2 < c < 3
    assert abs(c - C1_REFERENCE) < 1e-10


def test_exponent_integral_series_agreement():
    # Ein(s) = sum_{k>=1} (-1)^(k+1) s^k / (k k!)
    for s in (1e-6, 0.3, 1.0, 2.5):
        series = sum((-1) ** (k + 1) * s**k / (k * math.factorial(k)) for k in range(1, 60))
        assert exponent_integral(s) == pytest.approx(series, abs=1e-12)


def test_phi_over_s_nonincreasing():
    vals = [carleman_phi(s) / s for s in (0.1, 1.0, 10.0)]
    assert vals[0] >= vals[1] >= vals[2]


def test_phi_array_matches_scalar():
    s = np.array([3.0, 0.0, 0.5, 12.0, 0.5])
    arr = carleman_phi(s)
    assert np.allclose(arr, [carleman_phi(float(x)) for x in s], rtol=1e-13, atol=0)


def test_phi_monotone():
    s = np.sort(np.random.default_rng(0).uniform(0, 100, 10_000))
    phi = carleman_phi(s)
    assert np.all(np.diff(phi) >= 0)
    # phi' = phi e^-s / s drops below one ulp per sample step near s = 27,
    # so strict increase is only observable in doubles below that
    low = s < 20
    assert np.all(np.diff(phi[low]) > 0)
    # phi'(s) = phi(s) e^-s / s > 0 everywhere
    assert np.all(phi[s > 0] * np.exp(-s[s > 0]) / s[s > 0] >= 0)
    assert abs(phi[-1] - math.exp(-np.euler_gamma)) < 1e-12


def test_weight_examples():
    w = CarlemanWeight(10.0)
    assert carleman_weight(w, [0.0, 0.0]) == 0.0
    v = carleman_weight(w, [3.0, 4.0])
    assert 0.5 / C1() <= v <= 0.5
    x = np.array([1.0, 2.0, 0.5])
    assert carleman_weight(w, x) < carleman_weight(w, 2 * x)
    with pytest.raises(ValueError):
        CarlemanWeight(0.0)


@pytest.mark.parametrize("rho", [1.0, 10.0, 100.0])
def test_weight_sandwich(rho):
    rng = np.random.default_rng(int(rho))
    d = 3
    pts = rng.standard_normal((10_000, d))
    pts *= (rho * rng.uniform(0, 1, 10_000) ** (1 / d) / np.linalg.norm(pts, axis=1))[:, None]
    w = CarlemanWeight(rho)
    vals = carleman_weight(w, pts)
    lo, hi = weight_bounds(w, pts)
    assert np.all(lo <= vals) and np.all(vals <= hi)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_harmonic_dims_vs_rank(d):
    for m in range(9):
        assert harmonic_dim(d, m) == harmonic_dim_by_rank(d, m)


def test_harmonic_examples():
    assert harmonic_dims(2, 20).table == (1,) + (2,) * 20
    assert harmonic_dims(3, 30).table == tuple(2 * m + 1 for m in range(31))
    assert harmonic_dim(3, 5) == 11
    assert harmonic_dim(4, 2) == 9
    with pytest.raises(ValueError):
        harmonic_dims(1, 5)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gamma_bound(d):
    h = harmonic_dims(d, 10_000)
    n = np.arange(1, 10_001, dtype=float)
    assert np.all(np.asarray(h.cumulative[1:]) <= h.gamma_d * n ** (d - 1) * (1 + 1e-12))
    assert h.cumulative[-1] == sum(h.table)


@given(st.integers(2, 6), st.integers(0, 40))
def test_cumulative_is_full_polynomial_space(d, N):
    # sum_{m<=N} dim H_m = C(d+N-1, d-1) + C(d+N-2, d-1): degree-N and N-1 homogeneous parts
    h = harmonic_dims(d, N)
    expected = math.comb(d + N - 1, d - 1) + (math.comb(d + N - 2, d - 1) if N >= 1 else 0)
    assert h.cumulative[-1] == expected


# ---------------------------------------------------------------- UCP probe


def free_box(d, L):
    box = make_box(d, L)
    return box, hamiltonian(PotentialSpec(Constant(0.0)), box)


def test_ucp_Q_single_site():
    box, H = free_box(2, 21)
    psi = np.linalg.eigh(H.to_dense())[1][:, 0]
    x0 = box.index_of((0, 0))
    theta = [box.index_of((3, 4))]
    rep = ucp_probe(psi, H, 0.0, theta, x0, DELTA_MAX)
    assert rep.Q == 5.0


def test_ucp_delta_rejected():
    box, H = free_box(1, 11)
    psi = np.ones(box.n_sites)
    with pytest.raises(ValueError, match="delta"):
        ucp_probe(psi, H, 0.0, [box.index_of((4,))], box.index_of((0,)), 1.0)
    with pytest.raises(ValueError, match="delta"):
        ucp_probe(psi, H, 0.0, [box.index_of((4,))], box.index_of((0,)), 0.0)


def test_ucp_other_errors():
    box, H = free_box(1, 11)
    psi = np.zeros(box.n_sites)
    psi[0] = 1
    x0 = box.index_of((0,))
    with pytest.raises(ValueError, match="vanishes"):
        ucp_probe(psi, H, 0.0, [box.index_of((4,))], x0, 0.01)
    with pytest.raises(ValueError, match="outside"):
        ucp_probe(np.ones(11), H, 0.0, [x0], x0, 0.01)


def test_ucp_free_2d_regression():
    box, H = free_box(2, 21)
    w, V = np.linalg.eigh(H.to_dense())
    psi = V[:, 0]
    theta = np.flatnonzero(box.sites()[:, 0] > 0)
    rep = ucp_probe(psi, H, w[0], theta, box.index_of((-9, 0)), 1 / 30)
    assert math.isfinite(rep.empirical_exponent)
    assert rep.empirical_exponent == pytest.approx(2.063008000268572, abs=1e-9)
    assert rep.Q == pytest.approx(math.hypot(19, 10))
    assert rep.norm_zeta < 1e-12
    assert rep.norm_theta**2 + rep.norm_complement**2 == pytest.approx(rep.norm_total**2, abs=1e-12)


@given(st.integers(0, 10_000))
def test_ucp_pythagoras(seed):
    rng = np.random.default_rng(seed)
    box, H = free_box(2, 9)
    psi = rng.standard_normal(box.n_sites)
    theta = np.flatnonzero(box.sites()[:, 1] >= 2)
    rep = ucp_probe(psi, H, 0.3, theta, box.index_of((0, -3)), 0.04)
    assert abs(rep.norm_theta**2 + rep.norm_complement**2 - rep.norm_total**2) <= 1e-12 * rep.norm_total**2
