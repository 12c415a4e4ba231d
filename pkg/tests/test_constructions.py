import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doslab.constructions import (
    ConstrainedSubspace,
    build_grid,
    constrained_subspace,
    construct_report,
    layer_constant,
    linf_extremal,
    propagation_check,
    propagation_constant,
    ring_count,
    select_R,
)
from doslab.dos import realize
from doslab.lattice import AndersonUniform, BandMatrix, Constant, PotentialSpec, hamiltonian, make_box
from doslab.spectral import SpectralWindow, eigenpairs_in_window

from .oracles import kernel_scan, ring_count_loops


def sine_modes(n, k):
    x = np.arange(1, n + 1)
    return np.column_stack([math.sqrt(2 / (n + 1)) * np.sin(j * math.pi * x / (n + 1)) for j in range(1, k + 1)])


def random_basis(rng, n, N):
    q, _ = np.linalg.qr(rng.standard_normal((n, N)))
    return q


# ---------------------------------------------------------------- L-infinity extremal


def test_linf_unit_vector():
    e1 = np.zeros((9, 1))
    e1[0] = 1
    psi, attained = linf_extremal(e1)
    assert attained == 1.0 and abs(psi[0]) == 1.0


def test_linf_full_basis():
    psi, attained = linf_extremal(np.eye(16))
    assert attained == 1.0 and np.count_nonzero(psi) == 1


def test_linf_sine_modes_pinned():
    B = sine_modes(64, 4)
    psi, attained = linf_extremal(B)
    assert attained >= 0.25
    assert attained == pytest.approx(kernel_scan(B), abs=1e-14)
    assert attained == pytest.approx(0.29104566667603987, abs=1e-13)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_linf_rejects_empty():
    with pytest.raises(ValueError):
        linf_extremal(np.zeros((5, 0)))
    with pytest.raises(ValueError):
        linf_extremal(np.zeros((5, 2)))


@given(st.integers(1, 120), st.data())
def test_linf_bound(n, data):
    N = data.draw(st.integers(1, n))
    B = random_basis(np.random.default_rng(n * 1000 + N), n, N)
    psi, attained = linf_extremal(B)
    assert attained >= math.sqrt(N / n) * (1 - 1e-12)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-12
    # psi lies in the span
    assert np.linalg.norm(psi - B @ (B.T @ psi)) <= 1e-12


# ---------------------------------------------------------------- grid and layer


def test_grid_1d_example():
    cover = build_grid(make_box(1, 10), 4)
    assert set(cover.layer_sizes) == {4}
    assert ring_count(1, 4) == 4


def test_ring_2d_R4():
    assert ring_count(2, 4) == ring_count_loops(2, 4) == 24


def test_grid_2d_L20():
    box = make_box(2, 20)
    cover = build_grid(box, 4)
    lo, hi = 441 / 25, 4 * 441 / 25
    assert lo <= cover.n_centers <= hi
    assert cover.n_centers == 25
    assert set(cover.layer_sizes) == {24}


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ring_formula(d):
    for R in range(4, 21, 2):
        assert ring_count(d, R) == ring_count_loops(d, R) == (R + 1) ** d - (R - 3) ** d
    assert ring_count(d, 2) == 3**d


def test_layer_constants():
    assert layer_constant(1) == 4.0
    assert layer_constant(2) == 7.875
    assert layer_constant(3) == pytest.approx(11.63, abs=5e-3)


def layer_bruteforce(box, centers, R):
    sites = box.sites()
    h = R // 2
    mask = np.zeros(len(sites), dtype=bool)
    sizes = []
    for y in centers:
        dist = np.max(np.abs(sites - y), axis=1)
        ring = (dist == h) | (dist == h - 1)
        sizes.append(int(ring.sum()))
        mask |= ring
    return np.array(sizes), np.flatnonzero(mask)


@pytest.mark.parametrize("d, L", [(1, 17), (1, 40), (2, 13), (2, 22), (3, 9), (3, 12)])
def test_grid_cover_and_layer_vs_bruteforce(d, L):
    box = make_box(d, L)
    sites = box.sites()
    for R in range(2, int(L), 2):
        cover = build_grid(box, R)
        sizes, layer = layer_bruteforce(box, cover.centers, R)
        assert np.array_equal(sizes, cover.layer_sizes)
        assert np.array_equal(layer, cover.layer)
        # every site is covered, every small box lies inside the big one
        cov = np.zeros(len(sites), dtype=bool)
        for y in cover.centers:
            assert np.all(np.abs(y - box.lower - box.half) <= box.half - R // 2)
            cov |= np.max(np.abs(sites - y), axis=1) <= R // 2
        assert cov.all()


def test_grid_rejects_bad_R():
    box = make_box(2, 10)
    for R in (3, 10, 12, 0):
        with pytest.raises(ValueError):
            build_grid(box, R)


def test_select_R_policy():
    R, clamped = select_R(0.1, 1, 1000)
    assert R == 160 and not clamped  # 4 * 4 / 0.1 = 160
    R, clamped = select_R(0.01, 1, 200)
    assert R == 198 and clamped
    assert select_R(0.0, 1, 200) == (None, False)
    R, _ = select_R(0.3, 2, 1000)
    lower = 8 * layer_constant(2) / 0.3
    assert R % 2 == 0 and lower <= R < lower + 2


# ---------------------------------------------------------------- constrained subspace


def test_constrained_empty_layer():
    B = random_basis(np.random.default_rng(1), 30, 6)
    F = constrained_subspace(B, [])
    assert F.dim == 6 and np.array_equal(F.basis, B)


def test_constrained_full_layer():
    B = random_basis(np.random.default_rng(2), 30, 6)
    assert constrained_subspace(B, range(30)).dim == 0


@pytest.mark.parametrize("seed", range(5))
def test_constrained_random(seed):
    rng = np.random.default_rng(seed)
    B = random_basis(rng, 60, 12)
    layer = rng.choice(60, 5, replace=False)
    F = constrained_subspace(B, layer)
    assert 7 <= F.dim <= 12
    assert F.dim == 12 - np.linalg.matrix_rank(B[np.sort(layer)])
    assert np.max(np.abs(F.basis[layer])) <= 1e-10
    assert np.allclose(F.basis.T @ F.basis, np.eye(F.dim), atol=1e-10)
    assert np.linalg.norm(F.basis - B @ (B.T @ F.basis)) <= 1e-8


def test_constrained_rank_deficient_layer():
    # a layer site where every basis vector vanishes does not cost a dimension
    B = np.zeros((10, 3))
    B[1:4, :] = random_basis(np.random.default_rng(3), 3, 3)
    F = constrained_subspace(B, [0, 5, 9])
    assert F.dim == 3


# ---------------------------------------------------------------- propagation


def test_propagation_constant():
    const, log_c = propagation_constant(10, 3.0)
    assert const == 4 * 27 and log_c == pytest.approx(math.log(108))
    assert propagation_constant(2, 3.0)[0] == 0.0
    assert propagation_constant(4000, 5.0)[0] == math.inf


def chain(spec, d, L, E, eps, R, bc="D", probe=None):
    H = realize(spec, d, L, bc, probe)
    window = SpectralWindow(E, eps)
    P = eigenpairs_in_window(H, window)
    cover = build_grid(H.box, R)
    return H, window, P, cover, constrained_subspace(P, cover.layer)


def test_propagation_vacuous():
    H, window, P, cover, F = chain(PotentialSpec(AndersonUniform(), 1), 1, 200, 1.0, 1e-3, 198)
    rep = propagation_check(F, H, window, cover)
    assert rep.dim_F == 0 and rep.passed


def test_propagation_nonvacuous_anderson():
    spec = PotentialSpec(AndersonUniform(), 1)
    H, window, P, cover, F = chain(spec, 1, 200, 1.0, 0.5, 100)
    assert F.dim >= P.count - cover.layer.size
    assert F.dim >= 1
    rep = propagation_check(F, H, window, cover)
    assert rep.passed and rep.max_ratio <= 1
    assert rep.max_sup <= rep.residual_bound * (1 + 1e-9)


def test_propagation_2d_nonvacuous():
    spec = PotentialSpec(AndersonUniform(), 4)
    H, window, P, cover, F = chain(spec, 2, 14, 1.0, 0.5, 4)
    rep = propagation_check(F, H, window, cover)
    assert rep.dim_F == F.dim
    assert rep.passed
    assert rep.max_sup <= rep.residual_bound * (1 + 1e-9)


def test_propagation_barrier_true_residual():
    # tall barriers on the layer decouple the cells; the confined ground state,
    # cut to zero on the layer, obeys the bound with its own residual
    box = make_box(1, 60)
    R = 10
    cover = build_grid(box, R)
    V = np.zeros(box.n_sites)
    V[cover.layer] = 1e3
    from doslab.lattice import PotentialField, assemble_hamiltonian

    H = assemble_hamiltonian(PotentialField(box, V, None, float(np.max(np.abs(V)))))
    w, vecs = np.linalg.eigh(H.to_dense())
    psi = vecs[:, 0].copy()
    psi[cover.layer] = 0
    psi /= np.linalg.norm(psi)
    E = float(w[0])
    F = ConstrainedSubspace(psi[:, None], 1, cover.layer)
    rep = propagation_check(F, H, SpectralWindow(E, 0.5), cover)
    resid = np.max(np.abs(H.matvec(psi) - E * psi))
    assert rep.max_residual_inf == pytest.approx(resid)
    assert rep.max_sup <= rep.residual_bound


def test_propagation_rejects_mismatch():
    spec = PotentialSpec(Constant(0.0))
    H, window, P, cover, F = chain(spec, 1, 40, -0.5, 0.5, 8)
    other = build_grid(make_box(1, 40), 10)
    with pytest.raises(ValueError):
        propagation_check(F, H, window, other)
    with pytest.raises(ValueError):
        propagation_check(F, hamiltonian(spec, make_box(1, 30)), window, cover)


def test_construct_report_regression():
    spec = PotentialSpec(AndersonUniform(), 1)
    rep = construct_report(spec, 1, 200, "D", 1.0, 1e-3)
    # the window is empty, so rho = 0 and no grid is needed
    assert rep["count"] == 0 and rep["rho"] == 0.0
    assert rep["R"] is None and rep["dim_F"] == 0 and rep["propagation"] is None


def test_construct_report_wide_window():
    spec = PotentialSpec(AndersonUniform(), 1)
    rep = construct_report(spec, 1, 200, "D", 1.0, 0.5)
    assert not rep["R_clamped"] and rep["R"] == 190
    assert rep["count"] == 17 and rep["dim_F"] == 9
    assert rep["linf"]["attained"] == pytest.approx(0.39732885515484895, abs=1e-12)
    assert rep["grid"]["lower_bound"] <= rep["grid"]["n_centers"] <= rep["grid"]["upper_bound"]
    assert rep["dim_F"] >= rep["dim_F_lower_bound"]
    assert rep["propagation"]["passed"]
    if rep["dim_F"]:
        assert rep["linf"]["attained"] >= rep["linf"]["lower_bound"] * (1 - 1e-12)
