"""Steady Darcy flow: 5-point flux-form finite differences + conjugate gradients.

Discretization of -div(a grad u) = f on the unit square with u = 0 on the
boundary: face coefficients are harmonic means of the neighboring cell
values, which keeps the operator symmetric positive definite and second
order for rough a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grids import Field, Grid2D, GridError

CG_RTOL = 1e-12


class SolverError(RuntimeError):
    """Solver breakdown: non-convergence or non-finite state."""


@dataclass(frozen=True)
class DarcyProblem:
    """Permeability field a > 0 on a non-periodic grid; forcing defaults to 1."""

    grid: Grid2D
    a: Field
    f: Field | None = None

    def __post_init__(self):
        if self.grid.periodic:
            raise GridError("Darcy problem needs a non-periodic grid")
        if self.a.grid != self.grid or self.a.channels != 1:
            raise GridError("permeability must be a scalar field on the problem grid")
        if np.any(self.a.data <= 0):
            raise ValueError("permeability must be positive everywhere")
        if self.f is not None and (self.f.grid != self.grid or self.f.channels != 1):
            raise GridError("forcing must be a scalar field on the problem grid")


def _face_coefficients(a: np.ndarray):
    """Harmonic means on east and north faces; shapes [ny, nx-1], [ny-1, nx]."""
    ax = 2.0 * a[:, :-1] * a[:, 1:] / (a[:, :-1] + a[:, 1:])
    ay = 2.0 * a[:-1, :] * a[1:, :] / (a[:-1, :] + a[1:, :])
    return ax, ay


def _make_operator(p: DarcyProblem):
    grid = p.grid
    ax, ay = _face_coefficients(p.a.data[0])
    inv_dx2, inv_dy2 = 1.0 / grid.dx**2, 1.0 / grid.dy**2
    u = np.zeros((grid.ny, grid.nx))

    def apply(u_int: np.ndarray) -> np.ndarray:
        u[1:-1, 1:-1] = u_int
        flux_x = ax * (u[:, 1:] - u[:, :-1])  # east faces, scaled by 1/dx below
        flux_y = ay * (u[1:, :] - u[:-1, :])
        div = (flux_x[1:-1, 1:] - flux_x[1:-1, :-1]) * inv_dx2
        div += (flux_y[1:, 1:-1] - flux_y[:-1, 1:-1]) * inv_dy2
        return -div

    return apply


def apply_operator(p: DarcyProblem, u_int: np.ndarray) -> np.ndarray:
    """Apply the SPD discrete operator to interior values [ny-2, nx-2]."""
    return _make_operator(p)(u_int)


def solve_darcy(p: DarcyProblem) -> Field:
    """Solve for the interior unknowns by matrix-free conjugate gradients.

    Runs to relative residual 1e-12 with an iteration cap of 10 * n_points;
    returns the full field including the zero Dirichlet boundary.
    """
    grid = p.grid
    if p.f is None:
        b = np.ones((grid.ny - 2, grid.nx - 2))
    else:
        b = p.f.data[0][1:-1, 1:-1].copy()

    op = _make_operator(p)
    x = np.zeros_like(b)
    r = b - op(x)
    d = r.copy()
    rs = float(np.sum(r * r))
    b_norm = float(np.sqrt(np.sum(b * b)))
    if b_norm == 0.0:
        return Field(grid, np.zeros((1, grid.ny, grid.nx)))

    max_iter = 10 * grid.n_points
    for _ in range(max_iter):
        if np.sqrt(rs) <= CG_RTOL * b_norm:
            break
        Ad = op(d)
        alpha = rs / float(np.sum(d * Ad))
        x += alpha * d
        r -= alpha * Ad
        rs_new = float(np.sum(r * r))
        d = r + (rs_new / rs) * d
        rs = rs_new
    else:
        raise SolverError(f"conjugate gradients did not reach rtol={CG_RTOL} "
                          f"within {max_iter} iterations")

    u = np.zeros((grid.ny, grid.nx))
    u[1:-1, 1:-1] = x
    return Field(grid, u[None, :, :])
