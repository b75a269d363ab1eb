"""Random problem-instance generators for the three experiment families.

Every sampler is a pure function of (seed, index): streams come from a
counter-based Philox generator keyed by (seed, sample index, purpose tag),
so datasets are reproducible under parallel generation.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .grids import Field, Grid2D, GridError, make_grid


@dataclass(frozen=True)
class RngSeed:
    """64-bit dataset seed."""

    seed: int


def stream(seed: int, index: int = 0, tag: str = "") -> np.random.Generator:
    """Deterministic counter-based generator keyed by (seed, index, tag)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(index) & 0xFFFFFFFFFFFFFFFF,
               zlib.crc32(tag.encode("utf-8"))]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class DarcyLaw:
    """Two-level permeability pushed forward from a smooth Gaussian field.

    The Gaussian measure is N(0, (-Lap + tau2*I)^(-power)) with zero Neumann
    boundary conditions on (0,1)^2; the level map sends z >= 0 to `hi` and
    z < 0 to `lo`.
    """

    tau2: float = 9.0
    power: float = 2.0
    hi: float = 12.0
    lo: float = 3.0

    def __post_init__(self):
        if not (self.hi > self.lo > 0):
            raise ValueError("need hi > lo > 0")


# Canonical cutoff multiplier: coefficient draws always come from the
# (8*side+1)^2 matrix so that truncations at smaller cutoffs reuse the same
# leading coefficients (truncation-consistency is testable).
_KL_CANONICAL_MULT = 8


def darcy_gaussian_preimage(grid: Grid2D, law: DarcyLaw, seed: int, index: int = 0,
                            cutoff_mult: int = 4) -> np.ndarray:
    """Sample the Gaussian field z via a Karhunen-Loeve cosine expansion.

    Eigenfunctions sqrt(2^{1[k1>0]} * 2^{1[k2>0]}) cos(pi k1 x) cos(pi k2 y),
    coefficient std (pi^2 (k1^2+k2^2) + tau2)^(-power/2); modes with
    k1, k2 <= cutoff_mult * side are retained.
    """
    if grid.periodic:
        raise GridError("the Darcy field lives on a non-periodic grid")
    if cutoff_mult > _KL_CANONICAL_MULT:
        raise ValueError(f"cutoff_mult capped at {_KL_CANONICAL_MULT}")
    side = max(grid.nx, grid.ny)
    k_canon = _KL_CANONICAL_MULT * side
    rng = stream(seed, index, "darcy-a")
    xi = rng.standard_normal((k_canon + 1, k_canon + 1))

    cutoff = cutoff_mult * side
    k = np.arange(cutoff + 1)
    xi = xi[: cutoff + 1, : cutoff + 1]
    std = (np.pi**2 * (k[:, None] ** 2 + k[None, :] ** 2) + law.tau2) ** (-law.power / 2.0)
    coeff = xi * std  # [k2(y), k1(x)] after the convention below

    scale = np.where(k > 0, np.sqrt(2.0), 1.0)
    bx = scale[:, None] * np.cos(np.pi * np.outer(k, grid.x))  # [k1, nx]
    by = scale[:, None] * np.cos(np.pi * np.outer(k, grid.y))  # [k2, ny]
    return by.T @ coeff @ bx  # [ny, nx]


def sample_darcy_a(grid: Grid2D, law: DarcyLaw, seed: int, index: int = 0,
                   cutoff_mult: int = 4) -> Field:
    """Draw a two-level permeability field; every node value is hi or lo."""
    z = darcy_gaussian_preimage(grid, law, seed, index, cutoff_mult)
    return Field(grid, np.where(z >= 0.0, law.hi, law.lo)[None, :, :])


@dataclass(frozen=True)
class NlsInitLaw:
    """Four Gaussian wave packets with random centers and a fixed drift pattern.

    beta components indexed (packet, axis); `beta_negative` marks which of the
    eight components draw from the negative interval, the rest use the
    positive one. Drift coefficients gamma are fixed: packets 1 and 3 carry
    (-2,-2), packets 2 and 4 carry (+2,+2).
    """

    alpha: float = 120.0
    beta_neg_interval: tuple = (-0.6, -0.4)
    beta_pos_interval: tuple = (0.4, 0.6)
    beta_negative: tuple = ((0, 0), (0, 1), (1, 1), (2, 0))
    gammas: tuple = ((-2.0, -2.0), (2.0, 2.0), (-2.0, -2.0), (2.0, 2.0))
    V0: float = 120.0
    zeta1: float = 60.0
    zeta2: float = 60.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def nls_packet(grid: Grid2D, alpha: float, beta: tuple, gamma: tuple) -> np.ndarray:
    """One Gaussian packet exp(-(alpha/2)[(x+b1)^2+(y+b2)^2+i(g1 x + g2 y)])."""
    X, Y = grid.meshgrid()
    b1, b2 = beta
    g1, g2 = gamma
    expo = -(alpha / 2.0) * ((X + b1) ** 2 + (Y + b2) ** 2 + 1j * (g1 * X + g2 * Y))
    return np.exp(expo)


def sample_nls_u0(grid: Grid2D, law: NlsInitLaw, seed: int, index: int = 0) -> Field:
    """Superpose the four packets; returns a 2-channel (re, im) field."""
    rng = stream(seed, index, "nls-u0")
    draws = rng.uniform(0.0, 1.0, size=8)
    neg = set(law.beta_negative)
    betas = np.empty((4, 2))
    for p in range(4):
        for ax in range(2):
            lo, hi = law.beta_neg_interval if (p, ax) in neg else law.beta_pos_interval
            betas[p, ax] = lo + (hi - lo) * draws[2 * p + ax]
    z = np.zeros((grid.ny, grid.nx), dtype=np.complex128)
    for p in range(4):
        z += nls_packet(grid, law.alpha, tuple(betas[p]), law.gammas[p])
    return Field(grid, np.stack([z.real, z.imag]))


def nls_potential(grid: Grid2D, law: NlsInitLaw) -> Field:
    """Deterministic separable cosine potential V0 cos(z1 x) cos(z2 y)."""
    X, Y = grid.meshgrid()
    return Field(grid, (law.V0 * np.cos(law.zeta1 * X) * np.cos(law.zeta2 * Y))[None, :, :])


@dataclass(frozen=True)
class KpInitLaw:
    """Odd-in-x ring profile 8x tanh(t1 r)/(r+delta) sech^2(t2 r)."""

    theta_range: tuple = (1.5, 2.5)
    delta: float = 1e-10

    def __post_init__(self):
        lo, hi = self.theta_range
        if not (0 < lo < hi):
            raise ValueError("theta_range must be positive and ordered")


def kp_profile(grid: Grid2D, theta1: float, theta2: float, delta: float) -> np.ndarray:
    X, Y = grid.meshgrid()
    r = np.sqrt(X**2 + Y**2)
    return 8.0 * X * np.tanh(theta1 * r) / (r + delta) / np.cosh(theta2 * r) ** 2


def sample_kp_u0(grid: Grid2D, law: KpInitLaw, seed: int, index: int = 0) -> Field:
    rng = stream(seed, index, "kp-u0")
    lo, hi = law.theta_range
    theta1, theta2 = rng.uniform(lo, hi, size=2)
    return Field(grid, kp_profile(grid, theta1, theta2, law.delta)[None, :, :])


def sample_epsilon(seed: int, index: int = 0) -> float:
    """Nonlinearity exponent, uniform on (-1, 0) u (0, 1/2), never 0.

    Mass is proportional to interval length (2/3 negative, 1/3 positive).
    """
    rng = stream(seed, index, "epsilon")
    while True:
        u = rng.uniform(0.0, 1.5)
        if u not in (0.0, 1.0):
            break
    return u - 1.0  # shifts (0,1) u (1,1.5) onto (-1,0) u (0,1/2)
