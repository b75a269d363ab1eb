"""Discrete Fourier transforms on periodic grids and mode bookkeeping.

Convention: the forward transform is the plain unnormalized sum

    F[f](k) = sum_j f(x_j) exp(-2*pi*i*(kx*jx/nx + ky*jy/ny)),

the inverse carries the 1/(nx*ny) factor, so idft2(dft2(f)) == f.
Mode truncation keeps the symmetric low-frequency set |k| < m per axis
(representative frequencies under DFT wrap-around); at m = n/2 this drops
the Nyquist row/column, which keeps truncated spectra Hermitian-closed
under arbitrary complex per-mode multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Field, Grid2D, GridError


class SpectralError(ValueError):
    """Invalid transform input (non-periodic grid, mode bounds, shapes)."""


@dataclass(frozen=True)
class Spectrum2D:
    """Complex DFT coefficients [channel, k_y, k_x] in standard DFT ordering."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim == 2:
            coeffs = coeffs[None, :, :]
        if coeffs.ndim != 3 or coeffs.shape[1] != self.grid.ny or coeffs.shape[2] != self.grid.nx:
            raise SpectralError(f"spectrum shape {coeffs.shape} does not match grid")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class ModeSet:
    """Retained mode counts per axis (low-frequency corner retention)."""

    mx: int
    my: int

    def validate(self, grid: Grid2D):
        if not (1 <= self.mx <= grid.nx // 2):
            raise SpectralError(f"mx={self.mx} outside [1, {grid.nx // 2}]")
        if not (1 <= self.my <= grid.ny // 2):
            raise SpectralError(f"my={self.my} outside [1, {grid.ny // 2}]")


def representative_frequencies(n: int) -> np.ndarray:
    """Signed representative frequency for each DFT index: 0..n/2, then negative."""
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n)


def dft2(f: Field) -> Spectrum2D:
    """Forward unnormalized DFT per channel. Requires a periodic grid."""
    if not f.grid.periodic:
        raise SpectralError("dft2 requires a periodic grid")
    return Spectrum2D(f.grid, np.fft.fft2(f.data, axes=(-2, -1)))


def idft2(s: Spectrum2D) -> Field:
    """Inverse DFT (1/n^2-scaled); imaginary residue is discarded.

    The residue is checked to be numerical dust only for spectra that are
    supposed to be Hermitian; callers needing complex output should work on
    raw arrays instead.
    """
    out = np.fft.ifft2(s.coeffs, axes=(-2, -1))
    return Field(s.grid, out.real)


def retained_mask(grid: Grid2D, m: ModeSet) -> np.ndarray:
    """Boolean [ny, nx] mask of modes with |k| < m per axis."""
    m.validate(grid)
    kx = np.abs(representative_frequencies(grid.nx))
    ky = np.abs(representative_frequencies(grid.ny))
    return (ky[:, None] < m.my) & (kx[None, :] < m.mx)


def truncate_modes(s: Spectrum2D, m: ModeSet) -> Spectrum2D:
    """Zero all modes outside the retained low-frequency set. Idempotent."""
    mask = retained_mask(s.grid, m)
    return Spectrum2D(s.grid, s.coeffs * mask[None, :, :])


def sorted_mode_index(n: int) -> np.ndarray:
    """Permutation of the n*n mode labels by ascending k_x + k_y.

    Frequencies are the nonnegative representatives 0..n/2 per axis
    (|k| under wrap-around); ties break on (k_x, k_y), then on the raw
    DFT indices (i_x, i_y) so the permutation is total. Labels are flat
    indices into a C-ordered [k_y, k_x] array.
    """
    idx = np.arange(n)
    rep = np.minimum(idx, n - idx)
    kx = np.broadcast_to(rep[None, :], (n, n)).ravel()
    ky = np.broadcast_to(rep[:, None], (n, n)).ravel()
    ix = np.broadcast_to(idx[None, :], (n, n)).ravel()
    iy = np.broadcast_to(idx[:, None], (n, n)).ravel()
    # lexsort: last key is primary
    return np.lexsort((iy, ix, ky, kx, kx + ky))
