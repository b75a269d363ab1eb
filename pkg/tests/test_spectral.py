import numpy as np
import pytest

from podnolab.grids import Field, make_grid
from podnolab.spectral import (ModeSet, SpectralError, Spectrum2D, dft2, idft2,
                               representative_frequencies, retained_mask,
                               sorted_mode_index, truncate_modes)


def naive_dft2(data):
    """O(n^4) double-sum transform, the independent oracle."""
    c, ny, nx = data.shape
    out = np.zeros((c, ny, nx), dtype=complex)
    for ch in range(c):
        for ky in range(ny):
            for kx in range(nx):
                s = 0.0 + 0.0j
                for jy in range(ny):
                    for jx in range(nx):
                        s += data[ch, jy, jx] * np.exp(-2j * np.pi * (ky * jy / ny + kx * jx / nx))
                out[ch, ky, kx] = s
    return out


@pytest.fixture
def grid16():
    return make_grid(16, 16, (-1, 1, -1, 1), True)


def test_dft2_constant_dc(grid16):
    g = make_grid(64, 64, (-1, 1, -1, 1), True)
    c = 2.5
    s = dft2(Field(g, np.full((1, 64, 64), c)))
    assert s.coeffs[0, 0, 0] == pytest.approx(c * 4096, rel=1e-12)
    rest = s.coeffs.copy()
    rest[0, 0, 0] = 0
    assert np.abs(rest).max() < 1e-9


def test_dft2_single_mode():
    n = 64
    g = make_grid(n, n, (0, 1, 0, 1), True)
    jx, jy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    wave = np.exp(2j * np.pi * (3 * jx + 5 * jy) / n)
    s_re = dft2(Field(g, wave.real[None]))
    s_im = dft2(Field(g, wave.imag[None]))
    coeffs = s_re.coeffs[0] + 1j * s_im.coeffs[0]
    assert coeffs[5, 3] == pytest.approx(n * n, rel=1e-12)
    coeffs[5, 3] = 0
    assert np.abs(coeffs).max() < 1e-8


def test_dft2_matches_naive_oracle(grid16):
    rng = np.random.default_rng(0)
    f = Field(grid16, rng.normal(size=(1, 16, 16)))
    got = dft2(f).coeffs
    ref = naive_dft2(f.data)
    assert np.abs(got - ref).max() / np.abs(ref).max() < 1e-10


def test_dft2_requires_periodic():
    g = make_grid(8, 8, (0, 1, 0, 1), False)
    with pytest.raises(SpectralError):
        dft2(Field(g, np.ones((1, 8, 8))))


def test_dft2_real_field_hermitian(grid16):
    rng = np.random.default_rng(1)
    c = dft2(Field(grid16, rng.normal(size=(1, 16, 16)))).coeffs[0]
    mirrored = np.conj(np.roll(c[::-1, ::-1], shift=(1, 1), axis=(0, 1)))
    assert np.abs(c - mirrored).max() < 1e-12 * np.abs(c).max()


def test_idft2_roundtrip(grid16):
    rng = np.random.default_rng(2)
    f = Field(grid16, rng.normal(size=(2, 16, 16)))
    back = idft2(dft2(f))
    assert np.abs(back.data - f.data).max() < 1e-12 * np.abs(f.data).max()


def test_idft2_dc_only_gives_constant(grid16):
    coeffs = np.zeros((1, 16, 16), dtype=complex)
    coeffs[0, 0, 0] = 16 * 16
    f = idft2(Spectrum2D(grid16, coeffs))
    assert np.abs(f.data - 1.0).max() < 1e-13


def test_idft2_of_symmetrized_spectrum_is_real(grid16):
    # symmetrize by brute force: average with the conjugate mirror
    rng = np.random.default_rng(3)
    raw = rng.normal(size=(1, 16, 16)) + 1j * rng.normal(size=(1, 16, 16))
    sym = np.empty_like(raw)
    for ky in range(16):
        for kx in range(16):
            sym[0, ky, kx] = 0.5 * (raw[0, ky, kx] + np.conj(raw[0, (-ky) % 16, (-kx) % 16]))
    out = np.fft.ifft2(sym[0])
    assert np.abs(out.imag).max() < 1e-12
    f = idft2(Spectrum2D(grid16, sym))
    assert np.abs(f.data[0] - out.real).max() < 1e-14


def test_truncate_full_modeset_only_drops_nyquist(grid16):
    rng = np.random.default_rng(4)
    f = Field(grid16, rng.normal(size=(1, 16, 16)))
    s = dft2(f)
    full = ModeSet(mx=8, my=8)
    t = truncate_modes(s, full)
    # all non-Nyquist modes untouched
    keep = retained_mask(grid16, full)
    assert np.array_equal(t.coeffs[0][keep], s.coeffs[0][keep])
    rep = representative_frequencies(16)
    nyq = (np.abs(rep)[:, None] == 8) | (np.abs(rep)[None, :] == 8)
    assert np.abs(t.coeffs[0][nyq]).max() == 0.0
    assert np.array_equal(keep, ~nyq)


def test_truncate_idempotent(grid16):
    rng = np.random.default_rng(5)
    s = Spectrum2D(grid16, rng.normal(size=(1, 16, 16)) + 1j * rng.normal(size=(1, 16, 16)))
    m = ModeSet(mx=3, my=5)
    once = truncate_modes(s, m)
    twice = truncate_modes(once, m)
    assert np.array_equal(once.coeffs, twice.coeffs)


def test_truncate_matches_index_enumeration_oracle(grid16):
    rng = np.random.default_rng(6)
    s = Spectrum2D(grid16, rng.normal(size=(1, 16, 16)) + 1j * rng.normal(size=(1, 16, 16)))
    got = truncate_modes(s, ModeSet(mx=3, my=3)).coeffs[0]
    # oracle: enumerate indices, keep |k| < 3 per axis under wrap-around
    ref = np.zeros_like(s.coeffs[0])
    for ky in range(16):
        for kx in range(16):
            rep_y = ky if ky <= 8 else ky - 16
            rep_x = kx if kx <= 8 else kx - 16
            if abs(rep_y) < 3 and abs(rep_x) < 3:
                ref[ky, kx] = s.coeffs[0, ky, kx]
    assert np.array_equal(got, ref)


def test_truncate_never_increases_energy(grid16):
    rng = np.random.default_rng(7)
    s = Spectrum2D(grid16, rng.normal(size=(1, 16, 16)) + 1j * rng.normal(size=(1, 16, 16)))
    for m in (ModeSet(1, 1), ModeSet(4, 2), ModeSet(8, 8)):
        t = truncate_modes(s, m)
        assert np.sum(np.abs(t.coeffs) ** 2) <= np.sum(np.abs(s.coeffs) ** 2)


def test_truncate_mode_bounds(grid16):
    s = Spectrum2D(grid16, np.zeros((1, 16, 16), dtype=complex))
    with pytest.raises(SpectralError):
        truncate_modes(s, ModeSet(mx=9, my=2))
    with pytest.raises(SpectralError):
        truncate_modes(s, ModeSet(mx=0, my=2))


def test_sorted_mode_index_n2():
    order = sorted_mode_index(2)
    # labels are flat indices into [k_y, k_x]; expect (0,0),(0,1),(1,0),(1,1)
    # as (k_x, k_y) pairs, i.e. flats 0, 2, 1, 3
    pairs = [(lbl % 2, lbl // 2) for lbl in order]  # (k_x, k_y)
    assert pairs == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_sorted_mode_index_first_is_dc():
    for n in (2, 8, 16, 64):
        assert sorted_mode_index(n)[0] == 0


def test_sorted_mode_index_matches_bruteforce_sort():
    n = 8
    order = sorted_mode_index(n)
    labels = []
    for iy in range(n):
        for ix in range(n):
            kx = min(ix, n - ix)
            ky = min(iy, n - iy)
            labels.append((kx + ky, kx, ky, ix, iy, iy * n + ix))
    ref = [t[-1] for t in sorted(labels)]
    assert list(order) == ref


def test_parseval(grid16):
    rng = np.random.default_rng(8)
    f = Field(grid16, rng.normal(size=(1, 16, 16)))
    s = dft2(f)
    phys = np.sum(f.data**2) * grid16.cell_area
    spec = grid16.cell_area / (16 * 16) * np.sum(np.abs(s.coeffs) ** 2)
    assert phys == pytest.approx(spec, rel=1e-12)


def test_transform_linearity(grid16):
    rng = np.random.default_rng(9)
    a = rng.normal(size=(1, 16, 16))
    b = rng.normal(size=(1, 16, 16))
    al, be = rng.normal(size=2)
    lhs = dft2(Field(grid16, al * a + be * b)).coeffs
    rhs = al * dft2(Field(grid16, a)).coeffs + be * dft2(Field(grid16, b)).coeffs
    assert np.abs(lhs - rhs).max() < 1e-12 * np.abs(rhs).max()
