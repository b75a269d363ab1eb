"""Spectral operator network with interchangeable kernel backends.

The forward map is a lifting, L spectral layers with GELU between them
(none after the last), and a reduction:

    u = Q . layer_{L-1} . gelu . ... . gelu . layer_0 . P [a]

Each layer sums a pointwise affine path W v + b, a non-local kernel path
T^{-1}[R . T[v]] for an orthonormal transform T, and an optional constant
embedding of a scalar physical parameter. Two kernel backends:

* fourier: T is the truncated DFT. Complex weights are stored for the two
  low-frequency corner blocks (rows 0..my-1 and -my..-1, columns 0..mx-1);
  modes whose conjugate partner falls outside the stored blocks carry a
  weight-2 factor and the inverse transform takes the real part, which is
  an exact Hermitian closure: with identity weights and full blocks the
  kernel is the identity on band-limited real fields (Nyquist rows/columns
  are never retained).
* pod: T projects onto a precomputed orthonormal snapshot basis, applied
  channel-wise with real per-mode weights.

All parameters are float64 numpy arrays (complex128 for the Fourier
weights); evaluation is deterministic and allocation-light.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .datagen import stream
from .grids import Field, Grid2D, GridError
from .pod import PodBasis
from .spectral import ModeSet

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-CDF form, 0.5 x (1 + erf(x / sqrt(2)))."""
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_prime(x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    return cdf + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


class ModelError(ValueError):
    """Configuration or shape errors in the operator network."""


@dataclass(frozen=True)
class OperatorConfig:
    """Architecture description; kernel is 'fourier' or 'pod'.

    in_channels counts the raw input channels; two coordinate channels are
    appended when append_coords is set. epsilon_hidden defaults to width.
    """

    width: int
    layers: int
    in_channels: int
    out_channels: int
    kernel: str
    fourier_modes: tuple[int, int] | None = None  # (mx, my)
    pod_modes: int | None = None
    use_epsilon: bool = False
    append_coords: bool = True
    epsilon_hidden: int | None = None

    def __post_init__(self):
        if self.layers < 1 or self.width < 1:
            raise ModelError("need layers >= 1 and width >= 1")
        if self.kernel == "fourier":
            if self.fourier_modes is None:
                raise ModelError("fourier kernel needs fourier_modes=(mx, my)")
        elif self.kernel == "pod":
            if self.pod_modes is None or self.pod_modes < 1:
                raise ModelError("pod kernel needs pod_modes >= 1")
        else:
            raise ModelError(f"unknown kernel {self.kernel!r}")

    @property
    def lifted_in_channels(self) -> int:
        return self.in_channels + (2 if self.append_coords else 0)

    @property
    def eps_hidden(self) -> int:
        return self.epsilon_hidden if self.epsilon_hidden is not None else self.width

    @property
    def mode_set(self) -> ModeSet:
        mx, my = self.fourier_modes
        return ModeSet(mx=mx, my=my)


@dataclass
class OperatorParams:
    """All learnable tensors; layer lists have one entry per layer."""

    p1: np.ndarray
    p2: np.ndarray
    w: list
    b: list
    r: list
    q1: np.ndarray
    q2: np.ndarray
    ew1: list = field(default_factory=list)
    eb1: list = field(default_factory=list)
    ew2: list = field(default_factory=list)
    eb2: list = field(default_factory=list)

    def named_tensors(self):
        """Fixed-order (name, array) pairs; the checkpoint/optimizer order."""
        yield "p1", self.p1
        yield "p2", self.p2
        for l in range(len(self.w)):
            yield f"w{l}", self.w[l]
            yield f"b{l}", self.b[l]
            yield f"r{l}", self.r[l]
            if self.ew1:
                yield f"ew1_{l}", self.ew1[l]
                yield f"eb1_{l}", self.eb1[l]
                yield f"ew2_{l}", self.ew2[l]
                yield f"eb2_{l}", self.eb2[l]
        yield "q1", self.q1
        yield "q2", self.q2

    def get(self, name: str) -> np.ndarray:
        for n, a in self.named_tensors():
            if n == name:
                return a
        raise KeyError(name)

    def zeros_like(self) -> "OperatorParams":
        z = lambda a: np.zeros_like(a)
        return OperatorParams(
            p1=z(self.p1), p2=z(self.p2),
            w=[z(a) for a in self.w], b=[z(a) for a in self.b],
            r=[z(a) for a in self.r], q1=z(self.q1), q2=z(self.q2),
            ew1=[z(a) for a in self.ew1], eb1=[z(a) for a in self.eb1],
            ew2=[z(a) for a in self.ew2], eb2=[z(a) for a in self.eb2],
        )

    def copy(self) -> "OperatorParams":
        c = lambda a: a.copy()
        return OperatorParams(
            p1=c(self.p1), p2=c(self.p2),
            w=[c(a) for a in self.w], b=[c(a) for a in self.b],
            r=[c(a) for a in self.r], q1=c(self.q1), q2=c(self.q2),
            ew1=[c(a) for a in self.ew1], eb1=[c(a) for a in self.eb1],
            ew2=[c(a) for a in self.ew2], eb2=[c(a) for a in self.eb2],
        )


@dataclass
class OperatorModel:
    """Bundles architecture, grid, parameters, and the POD basis if used."""

    config: OperatorConfig
    grid: Grid2D
    params: OperatorParams
    basis: PodBasis | None = None

    def __post_init__(self):
        if self.config.kernel == "pod":
            if self.basis is None:
                raise ModelError("pod kernel needs a basis")
            if self.basis.n_modes < self.config.pod_modes:
                raise ModelError(f"basis holds {self.basis.n_modes} modes, "
                                 f"config wants {self.config.pod_modes}")


def init_params(config: OperatorConfig, seed: int = 0) -> OperatorParams:
    """Uniform init: affine maps in +-1/fan_in, kernel weights in +-1/width^2."""
    rng = stream(seed, 0, "model-init")
    d_v, d_in, d_out = config.width, config.lifted_in_channels, config.out_channels

    def unif(shape, bound):
        return rng.uniform(-bound, bound, size=shape)

    params = OperatorParams(
        p1=unif((d_v, d_in), 1.0 / d_in),
        p2=unif((d_v,), 1.0 / d_in),
        w=[], b=[], r=[],
        q1=unif((d_out, d_v), 1.0 / d_v),
        q2=unif((d_out,), 1.0 / d_v),
    )
    scale = 1.0 / d_v**2
    for _ in range(config.layers):
        params.w.append(unif((d_v, d_v), 1.0 / d_v))
        params.b.append(unif((d_v,), 1.0 / d_v))
        if config.kernel == "fourier":
            mx, my = config.fourier_modes
            re = unif((2, d_v, d_v, my, mx), scale)
            im = unif((2, d_v, d_v, my, mx), scale)
            params.r.append(re + 1j * im)
        else:
            params.r.append(unif((d_v, d_v, config.pod_modes), scale))
        if config.use_epsilon:
            h = config.eps_hidden
            params.ew1.append(unif((h,), 1.0))
            params.eb1.append(unif((h,), 1.0))
            params.ew2.append(unif((d_v, h), 1.0 / h))
            params.eb2.append(unif((d_v,), 1.0 / h))
    return params


def append_coordinates(grid: Grid2D, a: Field) -> np.ndarray:
    """Stack the physical (x, y) node coordinates under the input channels."""
    X, Y = grid.meshgrid()
    return np.concatenate([a.data, X[None, :, :], Y[None, :, :]], axis=0)


def lift(params: OperatorParams, data: np.ndarray) -> np.ndarray:
    """Pointwise affine lifting, [d_in, ny, nx] -> [width, ny, nx]."""
    if data.shape[0] != params.p1.shape[1]:
        raise ModelError(f"lift expects {params.p1.shape[1]} channels, got {data.shape[0]}")
    return np.einsum("vc,cyx->vyx", params.p1, data) + params.p2[:, None, None]


def reduce(params: OperatorParams, v: np.ndarray) -> np.ndarray:
    """Pointwise affine reduction, [width, ny, nx] -> [d_u, ny, nx]."""
    if v.shape[0] != params.q1.shape[1]:
        raise ModelError(f"reduce expects {params.q1.shape[1]} channels, got {v.shape[0]}")
    return np.einsum("uv,vyx->uyx", params.q1, v) + params.q2[:, None, None]


def embed_epsilon(params: OperatorParams, layer: int, eps: float):
    """Two affine maps with a GELU between; returns (eps_hat, cache)."""
    y = params.ew1[layer] * eps + params.eb1[layer]
    z = gelu(y)
    eps_hat = params.ew2[layer] @ z + params.eb2[layer]
    return eps_hat, (y, z)


# Paired-mode weights for the Hermitian closure, keyed by geometry.
_PAIR_CACHE: dict = {}


def _pair_weights(ny: int, nx: int, my: int, mx: int):
    key = (ny, nx, my, mx)
    if key not in _PAIR_CACHE:
        rows = np.concatenate([np.arange(my), np.arange(ny - my, ny)])
        cols = np.arange(mx)
        in_rows = np.zeros(ny, dtype=bool)
        in_rows[rows] = True
        in_cols = np.zeros(nx, dtype=bool)
        in_cols[cols] = True
        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        mirror_in = in_rows[(-rr) % ny] & in_cols[(-cc) % nx]
        weights = np.where(mirror_in, 1.0, 2.0)  # [2*my, mx]
        _PAIR_CACHE[key] = (weights[:my], weights[my:])
    return _PAIR_CACHE[key]


def kernel_fourier(r: np.ndarray, v: np.ndarray, modes: ModeSet):
    """DFT, per-mode matrix multiply on the stored blocks, inverse DFT.

    Returns (output, cache); output is exactly real for real input.
    """
    d_v, ny, nx = v.shape
    my, mx = modes.my, modes.mx
    if not (1 <= mx <= nx // 2 and 1 <= my <= ny // 2):
        raise ModelError(f"modes ({mx},{my}) out of range for {ny}x{nx} grid")
    vh = np.fft.fft2(v, axes=(-2, -1))
    w0, w1 = _pair_weights(ny, nx, my, mx)
    top = vh[:, :my, :mx]
    bot = vh[:, ny - my:, :mx]
    wh = np.zeros_like(vh)
    wh[:, :my, :mx] = np.einsum("ijyx,iyx->jyx", r[0], top) * w0
    wh[:, ny - my:, :mx] = np.einsum("ijyx,iyx->jyx", r[1], bot) * w1
    out = np.fft.ifft2(wh, axes=(-2, -1)).real
    return out, (top, bot)


def kernel_fourier_backward(r: np.ndarray, cache, g: np.ndarray, modes: ModeSet):
    """Adjoint of kernel_fourier; returns (g_v, g_r).

    g_r follows the convention real-part = d/d(Re), imag-part = d/d(Im),
    so gradients line up with the float view used by the optimizer.
    """
    top, bot = cache
    d_v, ny, nx = g.shape
    my, mx = modes.my, modes.mx
    w0, w1 = _pair_weights(ny, nx, my, mx)
    gh = np.fft.fft2(g, axes=(-2, -1)) / (ny * nx)
    g0 = gh[:, :my, :mx] * w0
    g1 = gh[:, ny - my:, :mx] * w1
    g_r = np.stack([
        np.einsum("iyx,jyx->ijyx", np.conj(top), g0),
        np.einsum("iyx,jyx->ijyx", np.conj(bot), g1),
    ])
    g_vh = np.zeros((d_v, ny, nx), dtype=np.complex128)
    g_vh[:, :my, :mx] = np.einsum("ijyx,jyx->iyx", np.conj(r[0]), g0)
    g_vh[:, ny - my:, :mx] = np.einsum("ijyx,jyx->iyx", np.conj(r[1]), g1)
    g_v = np.fft.ifft2(g_vh, axes=(-2, -1)).real * (ny * nx)
    return g_v, g_r


def kernel_pod(r: np.ndarray, v: np.ndarray, basis: PodBasis):
    """Basis projection, per-mode matrix multiply, superposition."""
    d_v, ny, nx = v.shape
    if ny * nx != basis.grid.n_points or (ny, nx) != (basis.grid.ny, basis.grid.nx):
        raise ModelError("field resolution does not match the basis grid")
    n = r.shape[2]
    phi = basis.modes[:, :n]
    coeff = v.reshape(d_v, -1) @ phi  # [d_v, n]
    out_c = np.einsum("ijk,ik->jk", r, coeff)
    out = (out_c @ phi.T).reshape(d_v, ny, nx)
    return out, coeff


def kernel_pod_backward(r: np.ndarray, cache, g: np.ndarray, basis: PodBasis):
    coeff = cache
    d_v, ny, nx = g.shape
    n = r.shape[2]
    phi = basis.modes[:, :n]
    g_outc = g.reshape(d_v, -1) @ phi
    g_r = np.einsum("ik,jk->ijk", coeff, g_outc)
    g_coeff = np.einsum("ijk,jk->ik", r, g_outc)
    g_v = (g_coeff @ phi.T).reshape(d_v, ny, nx)
    return g_v, g_r


def layer_apply(model: OperatorModel, layer: int, v: np.ndarray, eps):
    """One spectral layer (pre-activation): W v + b + kernel(v) + eps_hat."""
    params, config = model.params, model.config
    if config.kernel == "fourier":
        kout, kcache = kernel_fourier(params.r[layer], v, config.mode_set)
    else:
        kout, kcache = kernel_pod(params.r[layer], v, model.basis)
    s = np.einsum("uv,vyx->uyx", params.w[layer], v) + params.b[layer][:, None, None] + kout
    ecache = None
    if config.use_epsilon:
        if eps is None:
            raise ModelError("model embeds a physical parameter; eps is required")
        eps_hat, ecache = embed_epsilon(params, layer, float(eps))
        s = s + eps_hat[:, None, None]
    return s, kcache, ecache


def forward_with_cache(model: OperatorModel, a: Field, eps=None):
    """Full forward pass; returns (output Field, cache for the backward pass)."""
    config = model.config
    if a.channels != config.in_channels:
        raise ModelError(f"expected {config.in_channels} input channels, got {a.channels}")
    data = append_coordinates(a.grid, a) if config.append_coords else a.data
    vs = [lift(model.params, data)]
    pre_acts, kcaches, ecaches = [], [], []
    for l in range(config.layers):
        s, kc, ec = layer_apply(model, l, vs[-1], eps)
        pre_acts.append(s)
        kcaches.append(kc)
        ecaches.append(ec)
        vs.append(gelu(s) if l < config.layers - 1 else s)
    out = reduce(model.params, vs[-1])
    cache = {"input": data, "vs": vs, "pre_acts": pre_acts,
             "kcaches": kcaches, "ecaches": ecaches, "eps": eps, "grid": a.grid}
    return Field(a.grid, out), cache


def forward(model: OperatorModel, a: Field, eps=None) -> Field:
    out, _ = forward_with_cache(model, a, eps)
    return out


def backward_from_output(model: OperatorModel, cache, g_out: np.ndarray,
                         grads: OperatorParams):
    """Accumulate parameter gradients for one sample into `grads`.

    g_out is the loss gradient with respect to the model output array.
    """
    params, config = model.params, model.config
    vs, pre_acts = cache["vs"], cache["pre_acts"]
    grads.q1 += np.einsum("uyx,vyx->uv", g_out, vs[-1])
    grads.q2 += g_out.sum(axis=(1, 2))
    gv = np.einsum("uv,uyx->vyx", params.q1, g_out)
    for l in range(config.layers - 1, -1, -1):
        gs = gv * gelu_prime(pre_acts[l]) if l < config.layers - 1 else gv
        grads.w[l] += np.einsum("uyx,vyx->uv", gs, vs[l])
        grads.b[l] += gs.sum(axis=(1, 2))
        if config.use_epsilon:
            g_eps_hat = gs.sum(axis=(1, 2))
            y, z = cache["ecaches"][l]
            grads.ew2[l] += np.outer(g_eps_hat, z)
            grads.eb2[l] += g_eps_hat
            gy = (params.ew2[l].T @ g_eps_hat) * gelu_prime(y)
            grads.ew1[l] += gy * float(cache["eps"])
            grads.eb1[l] += gy
        if config.kernel == "fourier":
            g_v_k, g_r = kernel_fourier_backward(params.r[l], cache["kcaches"][l],
                                                 gs, config.mode_set)
        else:
            g_v_k, g_r = kernel_pod_backward(params.r[l], cache["kcaches"][l],
                                             gs, model.basis)
        grads.r[l] += g_r
        gv = np.einsum("uv,uyx->vyx", params.w[l], gs) + g_v_k
    grads.p1 += np.einsum("vyx,cyx->vc", gv, cache["input"])
    grads.p2 += gv.sum(axis=(1, 2))


def param_count(config: OperatorConfig):
    """Exact scalar count (complex weights count twice) with a breakdown."""
    d_v, d_in, d_out, L = (config.width, config.lifted_in_channels,
                           config.out_channels, config.layers)
    breakdown = {
        "lifting": d_v * d_in + d_v,
        "reduction": d_out * d_v + d_out,
        "pointwise": L * (d_v * d_v + d_v),
    }
    if config.kernel == "fourier":
        mx, my = config.fourier_modes
        breakdown["spectral_core"] = L * d_v * d_v * my * mx * 2 * 2
    else:
        breakdown["spectral_core"] = L * d_v * d_v * config.pod_modes
    if config.use_epsilon:
        h = config.eps_hidden
        breakdown["epsilon_mlp"] = L * (2 * h + d_v * h + d_v)
    else:
        breakdown["epsilon_mlp"] = 0
    return sum(breakdown.values()), breakdown
