"""Lie-Trotter time splitting for the cubic-like Schrodinger flow.

The equation i u_t + Lap u + V u = (2/eps)(|u|^eps - 1) u splits into

  A-flow: i z_t = -Lap z        (exact in Fourier space, unitary),
  B-flow: i w_t = ((2/eps)(|w|^eps - 1) - V) w   (pointwise phase rotation),

and one step is u <- A(dt)[B(dt)[u]]. Both flows preserve the pointwise
modulus / L2 norm, so the composition conserves mass exactly.

The POD-accelerated variant conjugates the A-flow with the basis transform
and keeps the state in the span of the modes between steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grids import Field, Grid2D, GridError
from ..pod import PodBasis
from .darcy import SolverError


@dataclass(frozen=True)
class NlsProblem:
    grid: Grid2D
    epsilon: float
    V: Field
    T: float
    steps: int

    def __post_init__(self):
        if not self.grid.periodic:
            raise GridError("splitting solver needs a periodic grid")
        if not (-1.0 < self.epsilon < 0.5) or self.epsilon == 0.0:
            raise ValueError("epsilon must lie in (-1,0) u (0,1/2)")
        if self.steps < 1 or self.T <= 0:
            raise ValueError("need steps >= 1 and T > 0")
        if self.V.grid != self.grid or self.V.channels != 1:
            raise GridError("potential must be a scalar field on the problem grid")

    @property
    def dt(self) -> float:
        return self.T / self.steps


def _laplacian_symbol(grid: Grid2D) -> np.ndarray:
    kx, ky = grid.wavenumbers()
    return kx[None, :] ** 2 + ky[:, None] ** 2


def nonlinear_phase(u: np.ndarray, epsilon: float, V: np.ndarray) -> np.ndarray:
    """(2/eps)(|u|^eps - 1) - V, with the |u| = 0 limit patched to -V.

    The patched value is irrelevant (the flow multiplies u = 0) but keeps
    the exponential finite.
    """
    mag = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = (2.0 / epsilon) * (mag**epsilon - 1.0)
    term = np.where(mag > 0.0, term, 0.0)
    return term - V


def _b_flow(u: np.ndarray, dt: float, epsilon: float, V: np.ndarray) -> np.ndarray:
    return np.exp(-1j * dt * nonlinear_phase(u, epsilon, V)) * u


def lie_trotter_nls(p: NlsProblem, u0: np.ndarray, return_trajectory: bool = False):
    """Advance u0 by p.steps composed B-then-A steps; returns u(T).

    With return_trajectory=True, returns the list [u_0, u_1, ..., u_NT].
    """
    u = np.asarray(u0, dtype=np.complex128)
    if u.shape != (p.grid.ny, p.grid.nx):
        raise GridError("initial state shape does not match the grid")
    V = p.V.data[0]
    dt = p.dt
    exp_a = np.exp(-1j * dt * _laplacian_symbol(p.grid))
    traj = [u.copy()] if return_trajectory else None
    for it in range(1, p.steps + 1):
        u = _b_flow(u, dt, p.epsilon, V)
        u = np.fft.ifft2(exp_a * np.fft.fft2(u))
        if not np.all(np.isfinite(u.view(np.float64))):
            raise SolverError(f"non-finite state at step {it}")
        if return_trajectory:
            traj.append(u.copy())
    return traj if return_trajectory else u


def splitting_snapshots(p: NlsProblem, u0: np.ndarray, basis_type: int) -> list[np.ndarray]:
    """Snapshot recipes for the POD-accelerated scheme.

    type 1: initial and final states only;
    type 2: every time-step state;
    type 3: every state plus consecutive differences.
    """
    if basis_type not in (1, 2, 3):
        raise ValueError("basis_type must be 1, 2 or 3")
    traj = lie_trotter_nls(p, u0, return_trajectory=True)
    if basis_type == 1:
        return [traj[0], traj[-1]]
    if basis_type == 2:
        return traj
    diffs = [traj[i] - traj[i - 1] for i in range(1, len(traj))]
    return traj + diffs


def pod_lie_trotter_nls(p: NlsProblem, u0: np.ndarray, basis: PodBasis) -> np.ndarray:
    """Splitting steps with the A-flow conjugated into POD coefficient space.

    Each step maps w = B(dt)[u] to coefficients c = Phi^T w, applies the
    N x N propagator Phi^T A(dt) Phi, and returns to physical space, so the
    state stays in span(Phi) between steps. With a complete basis this
    reproduces the FFT splitting to roundoff.
    """
    if basis.grid != p.grid:
        raise GridError("basis grid does not match the problem grid")
    u = np.asarray(u0, dtype=np.complex128)
    if u.shape != (p.grid.ny, p.grid.nx):
        raise GridError("initial state shape does not match the grid")
    V = p.V.data[0]
    dt = p.dt
    exp_a = np.exp(-1j * dt * _laplacian_symbol(p.grid))

    # Propagator conjugated by the basis: evolve each mode once.
    phi = basis.modes  # [n_points, N]
    cols = phi.T.reshape(basis.n_modes, p.grid.ny, p.grid.nx)
    evolved = np.fft.ifft2(exp_a[None, :, :] * np.fft.fft2(cols, axes=(-2, -1)), axes=(-2, -1))
    a_coeff = phi.T @ evolved.reshape(basis.n_modes, -1).T  # [N, N] complex

    for it in range(1, p.steps + 1):
        w = _b_flow(u, dt, p.epsilon, V)
        c = phi.T @ w.ravel()
        u = (phi @ (a_coeff @ c)).reshape(p.grid.ny, p.grid.nx)
        if not np.all(np.isfinite(u.view(np.float64))):
            raise SolverError(f"non-finite state at step {it}")
    return u
