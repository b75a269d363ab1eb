import numpy as np
import pytest

from podnolab.datagen import KpInitLaw, sample_kp_u0
from podnolab.grids import Field, l2_norm, make_grid
from podnolab.solvers import KpProblem, etdrk4_kp, kp_linear_exact, linear_symbol


@pytest.fixture
def grid32():
    return make_grid(32, 32, (-np.pi, np.pi, -np.pi, np.pi), True)


def bandlimited_zero_xmean(grid, seed=0, kmax=5):
    """Real field with no k_x = 0 content and limited bandwidth."""
    rng = np.random.default_rng(seed)
    n = grid.nx
    vh = np.zeros((n, n), dtype=complex)
    for ky in range(-kmax, kmax + 1):
        for kx in range(1, kmax + 1):
            c = rng.normal() + 1j * rng.normal()
            vh[ky % n, kx % n] += c
            vh[(-ky) % n, (-kx) % n] += np.conj(c)
    return Field(grid, np.fft.ifft2(vh).real[None])


def test_zero_initial_data_stays_zero(grid32):
    p = KpProblem(grid32, epsilon=0.02, T=0.1, steps=10)
    u = etdrk4_kp(p, Field(grid32, np.zeros((1, 32, 32))))
    assert np.abs(u.data).max() == 0.0


def test_linear_run_reproduces_exact_propagator(grid32):
    u0 = bandlimited_zero_xmean(grid32, seed=1)
    p = KpProblem(grid32, epsilon=0.5, T=0.04, steps=17)
    u_num = etdrk4_kp(p, u0, include_nonlinear=False)
    u_ref = kp_linear_exact(p, u0, p.T)
    scale = np.abs(u_ref.data).max()
    assert np.abs(u_num.data - u_ref.data).max() / scale < 1e-10
    # step count must not matter on the pure linear system
    u_num2 = etdrk4_kp(KpProblem(grid32, epsilon=0.5, T=0.04, steps=3), u0,
                       include_nonlinear=False)
    assert np.abs(u_num2.data - u_ref.data).max() / scale < 1e-10


def test_single_mode_symbol_oracle(grid32):
    # mode (k_x=1, k_y=0), eps=1: the symbol evaluates to i*(1^3*1) = i,
    # so the coefficient rotates by e^{i t}
    p = KpProblem(grid32, epsilon=1.0, T=1.0, steps=1)
    sym = linear_symbol(p)
    assert sym[0, 1] == pytest.approx(1j, abs=1e-15)
    X, _ = grid32.meshgrid()
    u0 = Field(grid32, np.cos(X)[None])
    t = 0.7
    u = kp_linear_exact(p, u0, t)
    # cos(x) -> Re(e^{i(x + t)}) = cos(x + t)
    assert np.abs(u.data[0] - np.cos(X + t)).max() < 1e-12


def test_linear_exact_t0_identity(grid32):
    u0 = bandlimited_zero_xmean(grid32, seed=2)
    p = KpProblem(grid32, epsilon=0.02, T=0.1, steps=10)
    u = kp_linear_exact(p, u0, 0.0)
    assert np.abs(u.data - u0.data).max() < 1e-14


def test_linear_exact_preserves_norm(grid32):
    u0 = bandlimited_zero_xmean(grid32, seed=3)
    p = KpProblem(grid32, epsilon=0.02, T=0.1, steps=10)
    for t in (0.05, 0.3, 2.0):
        u = kp_linear_exact(p, u0, t)
        assert abs(l2_norm(u) - l2_norm(u0)) / l2_norm(u0) < 1e-12


def test_linear_exact_warns_on_zero_kx_content(grid32):
    data = np.ones((1, 32, 32))  # pure k_x = 0 content
    p = KpProblem(grid32, epsilon=0.02, T=0.1, steps=10)
    with pytest.warns(UserWarning):
        kp_linear_exact(p, Field(grid32, data), 0.1)


def test_nonlinear_observed_order(grid32):
    u0 = sample_kp_u0(grid32, KpInitLaw(), seed=3)
    sols = []
    for steps in (50, 100, 200):
        p = KpProblem(grid32, epsilon=0.02, T=0.05, steps=steps)
        sols.append(etdrk4_kp(p, u0).data)
    d1 = np.linalg.norm(sols[0] - sols[1])
    d2 = np.linalg.norm(sols[1] - sols[2])
    assert np.log2(d1 / d2) >= 3.5


def test_translation_equivariance(grid32):
    # shifting the initial data by whole nodes shifts the solution equally
    u0 = bandlimited_zero_xmean(grid32, seed=4)
    shift = (5, 11)
    u0_shift = Field(grid32, np.roll(u0.data, shift, axis=(1, 2)))
    p = KpProblem(grid32, epsilon=0.1, T=0.03, steps=40)
    a = etdrk4_kp(p, u0)
    b = etdrk4_kp(p, u0_shift)
    scale = np.abs(a.data).max()
    assert np.abs(np.roll(a.data, shift, axis=(1, 2)) - b.data).max() / scale < 1e-10
    al = kp_linear_exact(p, u0, 0.3)
    bl = kp_linear_exact(p, u0_shift, 0.3)
    assert np.abs(np.roll(al.data, shift, axis=(1, 2)) - bl.data).max() / scale < 1e-10


def test_solver_deterministic(grid32):
    u0 = sample_kp_u0(grid32, KpInitLaw(), seed=6)
    p = KpProblem(grid32, epsilon=0.02, T=0.02, steps=20)
    assert np.array_equal(etdrk4_kp(p, u0).data, etdrk4_kp(p, u0).data)


def test_problem_validation(grid32):
    with pytest.raises(ValueError):
        KpProblem(grid32, epsilon=-0.1)
    with pytest.raises(ValueError):
        KpProblem(grid32, epsilon=0.02, T=0.1, steps=0)
