import numpy as np
import pytest

from podnolab.datagen import DarcyLaw, sample_darcy_a
from podnolab.grids import Field, make_grid
from podnolab.solvers import DarcyProblem, apply_operator, solve_darcy


def manufactured_error(n):
    """Max-norm error against u* = sin(pi x) sin(pi y) with a = 1."""
    g = make_grid(n, n, (0, 1, 0, 1), False)
    X, Y = g.meshgrid()
    ustar = np.sin(np.pi * X) * np.sin(np.pi * Y)
    f = Field(g, (2 * np.pi**2 * ustar)[None])
    a = Field(g, np.ones((1, n, n)))
    u = solve_darcy(DarcyProblem(g, a, f))
    return np.abs(u.data[0] - ustar).max()


def test_manufactured_solution_second_order():
    e_coarse = manufactured_error(17)
    e_fine = manufactured_error(33)
    assert e_coarse / e_fine == pytest.approx(4.0, abs=0.5)


def test_symmetric_permeability_gives_symmetric_solution():
    n = 21
    g = make_grid(n, n, (0, 1, 0, 1), False)
    rng = np.random.default_rng(0)
    half = rng.uniform(1.0, 5.0, size=(n, n))
    a_sym = 0.5 * (half + half.T)  # symmetric under x <-> y
    u = solve_darcy(DarcyProblem(g, Field(g, a_sym[None]))).data[0]
    assert np.abs(u - u.T).max() < 1e-10


def test_maximum_principle_nonnegative():
    g = make_grid(24, 24, (0, 1, 0, 1), False)
    a = sample_darcy_a(g, DarcyLaw(), seed=3)
    u = solve_darcy(DarcyProblem(g, a)).data[0]
    assert u.min() >= 0.0
    assert np.abs(u[0, :]).max() == 0.0 and np.abs(u[-1, :]).max() == 0.0
    assert np.abs(u[:, 0]).max() == 0.0 and np.abs(u[:, -1]).max() == 0.0


def test_residual_below_tolerance():
    g = make_grid(17, 17, (0, 1, 0, 1), False)
    a = sample_darcy_a(g, DarcyLaw(), seed=1)
    p = DarcyProblem(g, a)
    u = solve_darcy(p)
    b = np.ones((g.ny - 2, g.nx - 2))
    res = b - apply_operator(p, u.data[0, 1:-1, 1:-1])
    assert np.linalg.norm(res) / np.linalg.norm(b) < 1e-10


def test_operator_symmetric_positive_definite():
    g = make_grid(13, 13, (0, 1, 0, 1), False)
    a = sample_darcy_a(g, DarcyLaw(), seed=2)
    p = DarcyProblem(g, a)
    rng = np.random.default_rng(4)
    for _ in range(5):
        u = rng.normal(size=(11, 11))
        v = rng.normal(size=(11, 11))
        au = apply_operator(p, u)
        av = apply_operator(p, v)
        lhs = np.sum(au * v)
        rhs = np.sum(u * av)
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert np.sum(u * au) > 0.0  # Rayleigh quotient positive


def test_rejects_nonpositive_permeability():
    g = make_grid(8, 8, (0, 1, 0, 1), False)
    bad = np.ones((1, 8, 8))
    bad[0, 3, 3] = 0.0
    with pytest.raises(ValueError):
        DarcyProblem(g, Field(g, bad))


def test_rejects_periodic_grid():
    g = make_grid(8, 8, (0, 1, 0, 1), True)
    with pytest.raises(Exception):
        DarcyProblem(g, Field(g, np.ones((1, 8, 8))))


def test_deterministic():
    g = make_grid(17, 17, (0, 1, 0, 1), False)
    a = sample_darcy_a(g, DarcyLaw(), seed=5)
    u1 = solve_darcy(DarcyProblem(g, a))
    u2 = solve_darcy(DarcyProblem(g, a))
    assert np.array_equal(u1.data, u2.data)
