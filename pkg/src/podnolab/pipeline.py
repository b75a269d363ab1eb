"""End-to-end experiment plumbing: dataset generation for the three problem
families, snapshot-basis construction, model building, and config-driven
training runs. The CLI and the ablation sweeps are thin layers over this
module.

A resolved config is a plain JSON-able dict; every run records it, so any
output can be regenerated bit-identically.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import datagen
from .dataio import Dataset
from .grids import Field, complex_from_field, field_from_complex, make_grid
from .neuralop import OperatorConfig, OperatorModel, init_params
from .pod import PodBasis, build_snapshots, compute_basis, energy_ratio
from .solvers import (DarcyProblem, KpProblem, NlsProblem, etdrk4_kp,
                      lie_trotter_nls, pod_lie_trotter_nls, solve_darcy,
                      splitting_snapshots)
from .training import TrainConfig, evaluate, train

THREADS_ENV = "PODNOLAB_THREADS"

FAMILY_DEFAULTS = {
    "darcy": {"grid": {"n": 85, "bounds": (0.0, 1.0, 0.0, 1.0), "periodic": False},
              "solver": {}, "channels": (1, 1), "use_epsilon": False},
    "nls": {"grid": {"n": 64, "bounds": (-1.0, 1.0, -1.0, 1.0), "periodic": True},
            "solver": {"T": 0.5, "steps": 1000}, "channels": (2, 2), "use_epsilon": True,
            "epsilon_pool": 30},
    "kp": {"grid": {"n": 64, "bounds": (-np.pi, np.pi, -np.pi, np.pi), "periodic": True},
           "solver": {"T": 0.3, "steps": 1000, "dispersion": 0.02},
           "channels": (1, 1), "use_epsilon": False},
}


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap is not None:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


def _map_indexed(fn, n: int):
    """Deterministic parallel map over sample indices (results by position)."""
    workers = worker_count()
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def family_grid(family: str, n: int):
    spec = FAMILY_DEFAULTS[family]
    return make_grid(n, n, spec["grid"]["bounds"], spec["grid"]["periodic"])


def generate_dataset(family: str, n_samples: int, seed: int, grid_n: int | None = None,
                     solver: dict | None = None, epsilon_pool: int | None = None) -> Dataset:
    """Draw inputs from the family law and solve for the matching outputs."""
    if family not in FAMILY_DEFAULTS:
        raise ValueError(f"unknown family {family!r}")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    spec = FAMILY_DEFAULTS[family]
    grid_n = grid_n or spec["grid"]["n"]
    grid = family_grid(family, grid_n)
    solver_cfg = dict(spec["solver"])
    solver_cfg.update(solver or {})

    if family == "darcy":
        law = datagen.DarcyLaw()

        def one(i):
            a = datagen.sample_darcy_a(grid, law, seed, i)
            u = solve_darcy(DarcyProblem(grid, a))
            return a.data, None, u.data

    elif family == "nls":
        law = datagen.NlsInitLaw()
        V = datagen.nls_potential(grid, law)
        pool_size = epsilon_pool if epsilon_pool is not None else spec["epsilon_pool"]
        eps_pool = [datagen.sample_epsilon(seed, j) for j in range(pool_size)]

        def one(i):
            u0 = datagen.sample_nls_u0(grid, law, seed, i)
            eps = eps_pool[i % len(eps_pool)]
            problem = NlsProblem(grid, eps, V, solver_cfg["T"], solver_cfg["steps"])
            u = lie_trotter_nls(problem, complex_from_field(u0))
            return u0.data, eps, field_from_complex(grid, u).data

    else:  # kp
        law = datagen.KpInitLaw()

        def one(i):
            u0 = datagen.sample_kp_u0(grid, law, seed, i)
            problem = KpProblem(grid, epsilon=solver_cfg["dispersion"],
                                T=solver_cfg["T"], steps=solver_cfg["steps"])
            u = etdrk4_kp(problem, u0)
            return u0.data, None, u.data

    rows = _map_indexed(one, n_samples)
    inputs = np.stack([r[0] for r in rows])
    outputs = np.stack([r[2] for r in rows])
    epsilons = (np.array([r[1] for r in rows], dtype=np.float64)
                if family == "nls" else None)
    manifest = {"seed": seed, "solver": solver_cfg, "grid_n": grid_n,
                "epsilon_pool": (epsilon_pool if epsilon_pool is not None
                                 else spec.get("epsilon_pool"))}
    return Dataset(grid=grid, family=family, inputs=inputs, outputs=outputs,
                   epsilons=epsilons, manifest=manifest)


def basis_from_dataset(ds: Dataset, n_modes: int, snapshot_count: int | None = None,
                       snapshot_fraction: float = 1.0) -> PodBasis:
    """Snapshot matrix from the leading (input, output) pairs, then SVD.

    Each channel of each field contributes one column, so complex-valued
    (re, im) pairs enter as two real columns.
    """
    if snapshot_count is None:
        snapshot_count = max(1, int(round(snapshot_fraction * ds.n_samples)))
    snapshot_count = min(snapshot_count, ds.n_samples)
    ins = [Field(ds.grid, ds.inputs[i]) for i in range(snapshot_count)]
    outs = [Field(ds.grid, ds.outputs[i]) for i in range(snapshot_count)]
    X = build_snapshots(ins, outs, meta=(("pairs", snapshot_count),))
    n_modes = min(n_modes, min(X.data.shape))
    return compute_basis(X, n_modes)


def model_config_for(ds: Dataset, kernel: str, modes, width: int = 32,
                     layers: int = 4) -> OperatorConfig:
    use_eps = ds.epsilons is not None
    if kernel == "fourier":
        fm = tuple(modes) if isinstance(modes, (tuple, list)) else (int(modes), int(modes))
        return OperatorConfig(width=width, layers=layers, in_channels=ds.in_channels,
                              out_channels=ds.out_channels, kernel="fourier",
                              fourier_modes=fm, use_epsilon=use_eps)
    return OperatorConfig(width=width, layers=layers, in_channels=ds.in_channels,
                          out_channels=ds.out_channels, kernel="pod",
                          pod_modes=int(modes), use_epsilon=use_eps)


def run_experiment(cfg: dict):
    """Dataset -> (basis) -> model -> train; returns a result bundle.

    cfg keys: family, n_samples, seed, grid_n, solver{}, kernel, modes,
    width, layers, epochs, lr, weight_decay, batch, n_train, n_test,
    model_seed, snapshot_count/snapshot_fraction, dataset (optional
    preloaded Dataset to reuse).
    """
    ds = cfg.get("dataset")
    if ds is None:
        ds = generate_dataset(cfg["family"], cfg["n_samples"], cfg["seed"],
                              grid_n=cfg.get("grid_n"), solver=cfg.get("solver"),
                              epsilon_pool=cfg.get("epsilon_pool"))
    tc = TrainConfig(
        epochs=cfg["epochs"], seed=cfg.get("model_seed", cfg.get("seed", 0)),
        lr=cfg.get("lr", 1e-3), weight_decay=cfg.get("weight_decay", 1e-4),
        batch=cfg.get("batch", 20), n_train=cfg["n_train"], n_test=cfg["n_test"],
    )
    basis = None
    if cfg["kernel"] == "pod":
        pool = cfg.get("snapshot_count")
        if pool is None:
            pool = max(1, int(round(cfg.get("snapshot_fraction", 1.0) * tc.n_train)))
        pool = min(pool, tc.n_train)  # never draw snapshots from the test split
        sub = Dataset(grid=ds.grid, family=ds.family, inputs=ds.inputs[:pool],
                      outputs=ds.outputs[:pool],
                      epsilons=None if ds.epsilons is None else ds.epsilons[:pool],
                      manifest=ds.manifest)
        basis = basis_from_dataset(sub, cfg["modes"], snapshot_count=pool)
        modes = min(int(cfg["modes"]), basis.n_modes)
    else:
        modes = cfg["modes"]
    mcfg = model_config_for(ds, cfg["kernel"], modes,
                            width=cfg.get("width", 32), layers=cfg.get("layers", 4))
    model = OperatorModel(config=mcfg, grid=ds.grid,
                          params=init_params(mcfg, seed=tc.seed), basis=basis)
    history = train(model, ds, tc)
    test_idx = range(tc.n_train, tc.n_train + tc.n_test)
    test_error, per_sample = evaluate(model, ds, test_idx)
    return {"dataset": ds, "model": model, "history": history,
            "test_error": test_error, "per_sample": per_sample,
            "train_config": tc, "basis": basis}


def splitting_error_curve(problem: NlsProblem, u0: np.ndarray, basis_type: int,
                          mode_counts) -> list[tuple[int, float]]:
    """Relative error of the POD-accelerated splitting against the FFT
    splitting, for a shared snapshot basis truncated to each mode count."""
    reference = lie_trotter_nls(problem, u0)
    ref_norm = float(np.linalg.norm(reference))
    snaps = splitting_snapshots(problem, u0, basis_type)
    fields = [field_from_complex(problem.grid, s) for s in snaps]
    X = build_snapshots(fields, [])
    probe = compute_basis(X, 1)  # cheap way to learn the numerical rank
    full = compute_basis(X, max(1, min(probe.reliable_rank, min(X.data.shape))))
    rows = []
    for n in mode_counts:
        n = min(int(n), full.n_modes)
        basis = PodBasis(modes=full.modes[:, :n], sigma=full.sigma,
                         grid=full.grid, n_snapshots=full.n_snapshots)
        approx = pod_lie_trotter_nls(problem, u0, basis)
        rows.append((n, float(np.linalg.norm(approx - reference) / ref_norm)))
    return rows
