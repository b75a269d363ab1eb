"""Uniform 2-D grids, multi-channel fields, and the discrete L2 pairing.

Conventions used throughout the package:

* field data is laid out ``[channel, y, x]`` in float64,
* periodic grids exclude the duplicate endpoint (spacing = length/n),
  non-periodic grids include both endpoints (spacing = length/(n-1)),
* the quadrature is the uniform cell-area rule: every node carries the
  weight dx*dy. On periodic grids this is the spectrally exact rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or grid/shape mismatch."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular discretization of [x_min,x_max] x [y_min,y_max].

    Immutable; safe to share across threads.
    """

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    periodic: bool

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GridError(f"grid needs at least 2 points per axis, got {self.nx}x{self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise GridError("domain bounds must be ordered")

    @property
    def dx(self) -> float:
        length = self.x_max - self.x_min
        return length / self.nx if self.periodic else length / (self.nx - 1)

    @property
    def dy(self) -> float:
        length = self.y_max - self.y_min
        return length / self.ny if self.periodic else length / (self.ny - 1)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        """Node coordinates along x (length nx)."""
        if self.periodic:
            return self.x_min + self.dx * np.arange(self.nx)
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        if self.periodic:
            return self.y_min + self.dy * np.arange(self.ny)
        return np.linspace(self.y_min, self.y_max, self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) node arrays of shape [ny, nx]."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Continuous angular wavenumbers 2*pi*k/L per axis, DFT ordering.

        Only meaningful on periodic grids.
        """
        if not self.periodic:
            raise GridError("wavenumbers are defined for periodic grids only")
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)
        return kx, ky


@dataclass(frozen=True)
class Field:
    """Multi-channel real sample on a Grid2D; data shape [channels, ny, nx]."""

    grid: Grid2D
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[None, :, :]
        if data.ndim != 3 or data.shape[1] != self.grid.ny or data.shape[2] != self.grid.nx:
            raise GridError(
                f"field data shape {np.asarray(self.data).shape} does not match "
                f"grid {self.grid.ny}x{self.grid.nx}"
            )
        if not np.all(np.isfinite(data)):
            raise GridError("field data contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    def channel(self, c: int) -> np.ndarray:
        return self.data[c]


@dataclass(frozen=True)
class ComplexView:
    """Interpret a channel pair of a Field as one complex function."""

    re_channel: int
    im_channel: int

    def __post_init__(self):
        if self.re_channel == self.im_channel:
            raise GridError("re and im channels must be distinct")
        if self.re_channel < 0 or self.im_channel < 0:
            raise GridError("channel indices must be nonnegative")

    def to_complex(self, f: Field) -> np.ndarray:
        if max(self.re_channel, self.im_channel) >= f.channels:
            raise GridError("channel index out of range for this field")
        return f.data[self.re_channel] + 1j * f.data[self.im_channel]


def make_grid(nx, ny, bounds, periodic) -> Grid2D:
    """Build a grid from (x_min, x_max, y_min, y_max) bounds."""
    x_min, x_max, y_min, y_max = bounds
    return Grid2D(nx=int(nx), ny=int(ny), x_min=float(x_min), x_max=float(x_max),
                  y_min=float(y_min), y_max=float(y_max), periodic=bool(periodic))


def field_from_complex(grid: Grid2D, z: np.ndarray) -> Field:
    """Pack a complex [ny, nx] array into a 2-channel (re, im) Field."""
    z = np.asarray(z)
    return Field(grid, np.stack([z.real.astype(np.float64), z.imag.astype(np.float64)]))


def complex_from_field(f: Field) -> np.ndarray:
    """Unpack a 2-channel (re, im) Field into a complex array."""
    if f.channels != 2:
        raise GridError(f"expected a 2-channel (re, im) field, got {f.channels} channels")
    return ComplexView(0, 1).to_complex(f)


def _check_compatible(f: Field, g: Field):
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    if f.channels != g.channels:
        raise GridError(f"channel count mismatch: {f.channels} vs {g.channels}")


def inner_product(f: Field, g: Field) -> float:
    """Discrete L2 pairing: sum over channels and nodes of f*g times cell area."""
    _check_compatible(f, g)
    return float(np.sum(f.data * g.data) * f.grid.cell_area)


def l2_norm(f: Field) -> float:
    """Discrete L2 norm, sqrt(inner_product(f, f))."""
    return float(np.sqrt(np.sum(f.data * f.data) * f.grid.cell_area))
