"""Snapshot matrices, POD bases via SVD, and the forward/inverse transforms.

The basis columns are orthonormal under the plain dot product; the uniform
cell-area quadrature factor cancels between the forward and inverse
transforms, so round trips are exact regardless of the grid spacing.
Complex snapshots contribute their real and imaginary parts as separate
columns, producing a single real basis that is applied channel-wise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grids import Field, Grid2D, GridError

# Singular values below this fraction of sigma_1 are treated as numerically
# zero: ill-conditioning shows up as a rapidly decaying tail.
RANK_TOL = 1e-12


class PodError(ValueError):
    """Snapshot/basis construction or shape errors."""


@dataclass(frozen=True)
class SnapshotMatrix:
    """Columns are flattened field channels, [n_points x M]."""

    data: np.ndarray
    grid: Grid2D
    meta: tuple = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != self.grid.n_points or data.shape[1] < 1:
            raise PodError(f"snapshot matrix shape {data.shape} invalid for grid "
                           f"with {self.grid.n_points} points")
        if not np.all(np.isfinite(data)):
            raise PodError("snapshot matrix contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal spatial modes with the full singular-value list.

    modes: [n_points x N] with orthonormal columns; sigma holds ALL
    min(n_points, M) singular values of the snapshot matrix, so energy
    ratios are exact at full rank. Eigenvalues of the sample covariance are
    lambda_k = sigma_k^2 / M.
    """

    modes: np.ndarray
    sigma: np.ndarray
    grid: Grid2D
    n_snapshots: int

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.sigma**2 / self.n_snapshots

    @property
    def total_energy(self) -> float:
        return float(np.sum(self.eigenvalues))

    @property
    def reliable_rank(self) -> int:
        """Number of singular values above the numerical-rank threshold."""
        if self.sigma.size == 0 or self.sigma[0] == 0.0:
            return 0
        return int(np.sum(self.sigma > RANK_TOL * self.sigma[0]))


def build_snapshots(inputs: list[Field], outputs: list[Field],
                    meta: tuple | None = None) -> SnapshotMatrix:
    """Concatenate input and output fields column-per-channel.

    A 2-channel (re, im) field contributes two columns; a scalar field one.
    """
    fields = list(inputs) + list(outputs)
    if not fields:
        raise PodError("need at least one snapshot")
    grid = fields[0].grid
    cols, tags = [], []
    for pos, f in enumerate(fields):
        if f.grid != grid:
            raise GridError("snapshot fields live on different grids")
        for c in range(f.channels):
            cols.append(f.data[c].ravel())
            tags.append(("input" if pos < len(inputs) else "output", pos, c))
    return SnapshotMatrix(np.stack(cols, axis=1), grid, tuple(meta) if meta else tuple(tags))


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    """Make the first nonzero entry of each column positive (determinism)."""
    out = modes.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > 0)
        if nz.size and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def compute_basis(X: SnapshotMatrix, N: int) -> PodBasis:
    """Principal left singular vectors of the snapshot matrix.

    Method of snapshots: eigendecompose the M x M Gram matrix X^T X when
    M < n_points, otherwise the n_points x n_points matrix X X^T. Near-zero
    singular values (below RANK_TOL * sigma_1) are reported via a warning
    when the requested N exceeds the numerical rank.
    """
    A = X.data
    n_points, M = A.shape
    r = min(n_points, M)
    if not (1 <= N <= r):
        raise PodError(f"N={N} outside [1, {r}]")

    if M < n_points:
        gram = A.T @ A
        evals, evecs = np.linalg.eigh(gram)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        sigma = np.sqrt(np.clip(evals, 0.0, None))
        cut = max(1, int(np.sum(sigma > RANK_TOL * max(sigma[0], np.finfo(float).tiny))))
        take = min(N, cut)
        modes = A @ evecs[:, :take] / sigma[:take]
        if take < N:
            # rank-deficient request: pad with an orthonormal completion
            modes = _complete_columns(modes, N)
    else:
        cov = A @ A.T
        evals, evecs = np.linalg.eigh(cov)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        sigma = np.sqrt(np.clip(evals[:r], 0.0, None))
        modes = evecs[:, :N]

    basis = PodBasis(_fix_signs(np.ascontiguousarray(modes)), sigma, X.grid, M)
    if basis.reliable_rank < N:
        warnings.warn(f"requested N={N} exceeds numerical rank {basis.reliable_rank}; "
                      "trailing modes are not trustworthy for inversion", stacklevel=2)
    return basis


def _complete_columns(modes: np.ndarray, N: int) -> np.ndarray:
    """Extend orthonormal columns to N via QR on random complements."""
    n_points, have = modes.shape
    rng = np.random.Generator(np.random.Philox(12345))
    extra = rng.standard_normal((n_points, N - have))
    extra -= modes @ (modes.T @ extra)
    q, _ = np.linalg.qr(extra)
    return np.hstack([modes, q[:, : N - have]])


def energy_ratio(b: PodBasis, N: int) -> float:
    """Captured-energy fraction: sum of the first N eigenvalues over all."""
    lam = b.eigenvalues
    if not (0 <= N <= lam.size):
        raise PodError(f"N={N} outside [0, {lam.size}]")
    total = lam.sum()
    if total == 0.0:
        return 1.0
    if N == lam.size:
        return 1.0
    return float(lam[:N].sum() / total)


def pod_forward(b: PodBasis, f: Field) -> np.ndarray:
    """Per-channel coefficients c[ch, k] = <mode_k, f[ch]> (plain dot)."""
    if f.grid != b.grid:
        raise GridError("field and basis grids differ")
    flat = f.data.reshape(f.channels, -1)
    return flat @ b.modes


def pod_inverse(b: PodBasis, c: np.ndarray) -> Field:
    """Superpose modes with the given coefficients, [ch, N] -> Field."""
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    if c.shape[1] != b.n_modes:
        raise PodError(f"coefficient length {c.shape[1]} != {b.n_modes} modes")
    flat = c @ b.modes.T
    return Field(b.grid, flat.reshape(c.shape[0], b.grid.ny, b.grid.nx))
