import numpy as np
import pytest

from podnolab.datagen import NlsInitLaw, nls_potential, sample_nls_u0
from podnolab.grids import Field, complex_from_field, field_from_complex, make_grid
from podnolab.pod import PodBasis, build_snapshots, compute_basis
from podnolab.solvers import (NlsProblem, lie_trotter_nls, nonlinear_phase,
                              pod_lie_trotter_nls)
from podnolab.solvers.darcy import SolverError


@pytest.fixture
def grid32():
    return make_grid(32, 32, (-1, 1, -1, 1), True)


def zero_potential(grid):
    return Field(grid, np.zeros((1, grid.ny, grid.nx)))


def test_plane_wave_exact(grid32):
    # |u0| = 1 kills the power-law term; with V = 0 the splitting is exact
    X, Y = grid32.meshgrid()
    kx = 2 * np.pi * 2 / 2.0  # integer mode 2 on a length-2 domain
    ky = 2 * np.pi * 3 / 2.0
    u0 = np.exp(1j * (kx * X + ky * Y))
    for steps in (1, 7, 40):
        p = NlsProblem(grid32, 0.25, zero_potential(grid32), T=0.1, steps=steps)
        u = lie_trotter_nls(p, u0)
        exact = u0 * np.exp(-1j * (kx**2 + ky**2) * p.T)
        assert np.abs(u - exact).max() < 1e-10


def test_mass_conserved_every_step():
    g = make_grid(64, 64, (-1, 1, -1, 1), True)
    law = NlsInitLaw()
    u0 = complex_from_field(sample_nls_u0(g, law, seed=0))
    p = NlsProblem(g, -0.5, nls_potential(g, law), T=0.1, steps=60)
    traj = lie_trotter_nls(p, u0, return_trajectory=True)
    m0 = np.linalg.norm(traj[0])
    for state in traj[1:]:
        assert abs(np.linalg.norm(state) - m0) / m0 < 1e-12


def test_small_epsilon_matches_log_limit():
    # (2/eps)(|u|^eps - 1) -> ln|u|^2 as eps -> 0
    rng = np.random.default_rng(0)
    mag = rng.uniform(0.3, 3.0, size=(16, 16))
    u = mag * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(16, 16)))
    V = np.zeros((16, 16))
    approx = nonlinear_phase(u, 1e-6, V)
    exact = np.log(np.abs(u) ** 2)
    assert np.abs(approx - exact).max() < 1e-5


def test_b_flow_preserves_modulus(grid32):
    rng = np.random.default_rng(1)
    u = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    law = NlsInitLaw()
    V = nls_potential(grid32, law)
    p = NlsProblem(grid32, 0.3, V, T=0.01, steps=1)
    phase = nonlinear_phase(u, p.epsilon, V.data[0])
    w = np.exp(-1j * p.dt * phase) * u
    assert np.abs(np.abs(w) - np.abs(u)).max() < 1e-14


def test_a_flow_preserves_norm(grid32):
    rng = np.random.default_rng(2)
    u = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    kx, ky = grid32.wavenumbers()
    mult = np.exp(-1j * 0.05 * (kx[None, :] ** 2 + ky[:, None] ** 2))
    w = np.fft.ifft2(mult * np.fft.fft2(u))
    assert abs(np.linalg.norm(w) - np.linalg.norm(u)) / np.linalg.norm(u) < 1e-12


def test_epsilon_validation(grid32):
    with pytest.raises(ValueError):
        NlsProblem(grid32, 0.0, zero_potential(grid32), T=1.0, steps=10)
    with pytest.raises(ValueError):
        NlsProblem(grid32, 0.7, zero_potential(grid32), T=1.0, steps=10)
    with pytest.raises(ValueError):
        NlsProblem(grid32, -1.5, zero_potential(grid32), T=1.0, steps=10)


def test_zero_state_detected_safely(grid32):
    # an exactly zero initial state stays zero (no NaN from 0^eps)
    p = NlsProblem(grid32, -0.5, zero_potential(grid32), T=0.1, steps=5)
    u = lie_trotter_nls(p, np.zeros((32, 32), dtype=complex))
    assert np.abs(u).max() == 0.0


# -------------------------------------------------- POD-accelerated variant

def complete_basis(grid, seed=0):
    rng = np.random.default_rng(seed)
    n = grid.ny * grid.nx
    snaps = [field_from_complex(grid, rng.normal(size=(grid.ny, grid.nx))
                                + 1j * rng.normal(size=(grid.ny, grid.nx)))
             for _ in range(n)]
    return compute_basis(build_snapshots(snaps, []), n)


def test_pod_split_full_rank_matches_fft_split():
    g = make_grid(16, 16, (-1, 1, -1, 1), True)
    law = NlsInitLaw()
    u0 = complex_from_field(sample_nls_u0(g, law, seed=3))
    p = NlsProblem(g, 0.3, nls_potential(g, law), T=0.05, steps=25)
    basis = complete_basis(g)
    ref = lie_trotter_nls(p, u0)
    pod = pod_lie_trotter_nls(p, u0, basis)
    assert np.linalg.norm(pod - ref) / np.linalg.norm(ref) < 1e-10


def test_pod_split_rank_one_stays_in_span():
    g = make_grid(16, 16, (-1, 1, -1, 1), True)
    law = NlsInitLaw()
    u0 = complex_from_field(sample_nls_u0(g, law, seed=4))
    # snapshots all equal to u0 -> a rank-2 matrix (re and im columns);
    # keep N=1: the evolution must stay inside span{phi_1}
    snaps = [field_from_complex(g, u0)] * 5
    basis = compute_basis(build_snapshots(snaps, []), 1)
    p = NlsProblem(g, 0.3, nls_potential(g, law), T=0.05, steps=10)
    u = pod_lie_trotter_nls(p, u0, basis)
    phi = basis.modes[:, 0]
    flat = u.ravel()
    residual = flat - phi * (phi @ flat)
    assert np.linalg.norm(residual) < 1e-12 * np.linalg.norm(flat)


def test_pod_split_grid_mismatch():
    g = make_grid(16, 16, (-1, 1, -1, 1), True)
    other = make_grid(8, 8, (-1, 1, -1, 1), True)
    basis = complete_basis(other)
    law = NlsInitLaw()
    p = NlsProblem(g, 0.3, nls_potential(g, law), T=0.05, steps=2)
    with pytest.raises(Exception):
        pod_lie_trotter_nls(p, np.zeros((16, 16), dtype=complex), basis)


def test_solver_deterministic():
    g = make_grid(32, 32, (-1, 1, -1, 1), True)
    law = NlsInitLaw()
    u0 = complex_from_field(sample_nls_u0(g, law, seed=5))
    p = NlsProblem(g, -0.25, nls_potential(g, law), T=0.05, steps=20)
    assert np.array_equal(lie_trotter_nls(p, u0), lie_trotter_nls(p, u0))
