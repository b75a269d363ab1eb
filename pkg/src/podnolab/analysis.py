"""Post-hoc diagnostics: per-mode error spectra, band summaries, ablations.

The spectrum diagnostic takes the unnormalized DFT of the prediction error,
orders the moduli by ascending k_x + k_y (nonnegative representative
frequencies), and keeps a low-frequency prefix: 3000 modes on a 64x64 grid
and the proportional count n^2 * 3000/4096 elsewhere, which suppresses the
least-resolved tail.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .grids import Field, GridError, complex_from_field
from .spectral import sorted_mode_index

# Prefix fraction of the mode count kept in spectrum reports (3000 of 4096).
PREFIX_FRACTION = 3000.0 / 4096.0


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumReport:
    """Per-mode error moduli in ascending k_x+k_y order, truncated."""

    labels: np.ndarray   # flat mode labels into the [k_y, k_x] plane
    values: np.ndarray   # |F[pred - truth]| at those modes
    prefix: int

    def __post_init__(self):
        if self.values.shape != (self.prefix,) or self.labels.shape != (self.prefix,):
            raise AnalysisError("report arrays must match the prefix length")


def _as_complex_plane(f: Field) -> np.ndarray:
    if f.channels == 1:
        return f.data[0].astype(np.complex128)
    if f.channels == 2:
        return complex_from_field(f)
    raise AnalysisError(f"expected 1 or 2 channels, got {f.channels}")


def spectrum_error(pred: Field, truth: Field) -> SpectrumReport:
    """Sorted moduli of the DFT of the prediction error."""
    if pred.grid != truth.grid or pred.channels != truth.channels:
        raise GridError("prediction and truth must share grid and channels")
    grid = pred.grid
    if not grid.periodic or grid.nx != grid.ny:
        raise AnalysisError("spectrum diagnostics need a square periodic grid")
    n = grid.nx
    diff = _as_complex_plane(pred) - _as_complex_plane(truth)
    moduli = np.abs(np.fft.fft2(diff)).ravel()
    order = sorted_mode_index(n)
    prefix = int(round(n * n * PREFIX_FRACTION))
    return SpectrumReport(labels=order[:prefix], values=moduli[order][:prefix],
                          prefix=prefix)


def band_error_summary(report: SpectrumReport, split_frac: float) -> tuple[float, float]:
    """Mean error modulus below and above the split index of the prefix."""
    if not (0.0 < split_frac < 1.0):
        raise AnalysisError("split fraction must lie strictly inside (0, 1)")
    idx = min(max(int(report.prefix * split_frac), 1), report.prefix - 1)
    return float(report.values[:idx].mean()), float(report.values[idx:].mean())


_AXES = ("modes", "snapshots", "resolution", "timesteps")


def ablation_sweep(axis: str, values, base_config: dict) -> list[dict]:
    """Re-run the training pipeline once per axis value with shared seeds.

    Returns rows {axis, value, test_error}; the base config is never
    mutated. Axis semantics: modes -> kernel size, snapshots -> snapshot
    pool for the basis, resolution -> grid side, timesteps -> ground-truth
    solver steps.
    """
    from .pipeline import run_experiment

    if axis not in _AXES:
        raise AnalysisError(f"axis must be one of {_AXES}")
    rows = []
    for value in values:
        dataset = base_config.get("dataset")
        cfg = {k: v for k, v in base_config.items() if k != "dataset"}
        cfg = copy.deepcopy(cfg)
        if dataset is not None and axis in ("modes", "snapshots"):
            cfg["dataset"] = dataset  # axis does not touch the data; reuse it
        if axis == "modes":
            cfg["modes"] = value
        elif axis == "snapshots":
            cfg["snapshot_count"] = int(value)
        elif axis == "resolution":
            cfg["grid_n"] = int(value)
        else:
            cfg.setdefault("solver", {})["steps"] = int(value)
        result = run_experiment(cfg)
        rows.append({"axis": axis, "value": value, "test_error": result["test_error"]})
    return rows
