"""Command-line surface tying the experiment pipeline together.

Every subcommand resolves its configuration (defaults < --config JSON <
explicit flags), writes its outputs under --out, and records a run manifest
(run.json) holding the fully resolved config, so any run can be reproduced
bit-identically via `--config <out>/run.json`. Failures print a
machine-readable JSON object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ablation_sweep, band_error_summary, spectrum_error
from .dataio import (Dataset, load_basis, load_checkpoint, load_dataset,
                     save_basis, save_checkpoint, save_dataset)
from .datagen import NlsInitLaw, nls_potential, sample_nls_u0
from .grids import Field, complex_from_field, field_from_complex
from .neuralop import forward
from .pipeline import (basis_from_dataset, family_grid, generate_dataset,
                       run_experiment, splitting_error_curve)
from .pod import energy_ratio
from .solvers import NlsProblem, lie_trotter_nls
from .training import evaluate


def _write_manifest(out: Path, command: str, resolved: dict):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run.json", "w", encoding="utf-8") as fh:
        json.dump({"command": command, "version": __version__, "config": resolved},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return data.get("config", data) if isinstance(data, dict) else data


def _resolve(args, defaults: dict, keys) -> dict:
    """defaults < config file < explicit flags."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        resolved.update({k: v for k, v in file_cfg.items() if k in keys or k in defaults})
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            resolved[key] = val
    return resolved


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _int_list(text: str):
    return [int(tok) for tok in text.replace(",", " ").split()]


# ------------------------------------------------------------- subcommands

def cmd_generate(args, family: str) -> int:
    defaults = {"n": 100, "seed": 0, "grid_n": None, "steps": None, "t_final": None,
                "epsilon_pool": None}
    cfg = _resolve(args, defaults, list(defaults))
    solver = {}
    if cfg["steps"] is not None:
        solver["steps"] = cfg["steps"]
    if cfg["t_final"] is not None:
        solver["T"] = cfg["t_final"]
    ds = generate_dataset(family, cfg["n"], cfg["seed"], grid_n=cfg["grid_n"],
                          solver=solver or None, epsilon_pool=cfg["epsilon_pool"])
    out = Path(args.out)
    _write_manifest(out, f"gen-{family}", cfg)
    save_dataset(out / "dataset.pdt", ds)
    print(f"wrote {ds.n_samples} {family} samples at {ds.grid.nx}x{ds.grid.ny} "
          f"to {out / 'dataset.pdt'}")
    return 0


def cmd_pod_basis(args) -> int:
    defaults = {"dataset": None, "modes": 64, "snapshot_count": None,
                "snapshot_fraction": 1.0}
    cfg = _resolve(args, defaults, list(defaults))
    if not cfg["dataset"]:
        raise ValueError("pod-basis needs --dataset")
    ds = load_dataset(Path(cfg["dataset"]) / "dataset.pdt"
                      if Path(cfg["dataset"]).is_dir() else cfg["dataset"])
    basis = basis_from_dataset(ds, cfg["modes"], snapshot_count=cfg["snapshot_count"],
                               snapshot_fraction=cfg["snapshot_fraction"])
    out = Path(args.out)
    _write_manifest(out, "pod-basis", cfg)
    save_basis(out / "basis.ckp", basis)
    rho = energy_ratio(basis, min(cfg["modes"], basis.n_modes))
    lam = basis.eigenvalues
    cum = np.cumsum(lam) / lam.sum()
    n99 = int(np.searchsorted(cum, 0.99) + 1)
    print(f"energy ratio rho({min(cfg['modes'], basis.n_modes)}) = {rho:.6f}")
    print(f"smallest N with rho >= 0.99: {n99}")
    if rho < 0.99:
        print(f"note: requested mode count captures {100 * rho:.2f}% < 99% of the energy")
    return 0


def cmd_train(args) -> int:
    defaults = {"dataset": None, "kernel": "pod", "modes": 64, "width": 32, "layers": 4,
                "epochs": 10, "lr": 1e-3, "weight_decay": 1e-4, "batch": 20,
                "n_train": 900, "n_test": 100, "seed": 0,
                "snapshot_count": None, "snapshot_fraction": 1.0}
    cfg = _resolve(args, defaults, list(defaults))
    if not cfg["dataset"]:
        raise ValueError("train needs --dataset")
    ds_path = Path(cfg["dataset"])
    ds = load_dataset(ds_path / "dataset.pdt" if ds_path.is_dir() else ds_path)
    run_cfg = {"dataset": ds, "family": ds.family, "kernel": cfg["kernel"],
               "modes": cfg["modes"], "width": cfg["width"], "layers": cfg["layers"],
               "epochs": cfg["epochs"], "lr": cfg["lr"],
               "weight_decay": cfg["weight_decay"], "batch": cfg["batch"],
               "n_train": cfg["n_train"], "n_test": cfg["n_test"],
               "seed": cfg["seed"], "model_seed": cfg["seed"],
               "snapshot_count": cfg["snapshot_count"],
               "snapshot_fraction": cfg["snapshot_fraction"],
               "n_samples": ds.n_samples}
    result = run_experiment(run_cfg)
    out = Path(args.out)
    _write_manifest(out, "train", cfg)
    save_checkpoint(out / "checkpoint.ckp", result["model"])
    _write_csv(out / "loss.csv", ["epoch", "train_loss", "test_error", "wall_seconds"],
               [(h["epoch"], h["train_loss"], h["test_error"], h["wall_seconds"])
                for h in result["history"]])
    print(f"final test relative error: {result['test_error']:.6e}")
    return 0


def _load_pair(args):
    ds_path = Path(args.dataset)
    ds = load_dataset(ds_path / "dataset.pdt" if ds_path.is_dir() else ds_path)
    ck_path = Path(args.checkpoint)
    model, _ = load_checkpoint(ck_path / "checkpoint.ckp" if ck_path.is_dir() else ck_path)
    if model.grid != ds.grid:
        raise ValueError("checkpoint and dataset grids differ")
    return ds, model


def cmd_eval(args) -> int:
    ds, model = _load_pair(args)
    mean, per_sample = evaluate(model, ds, range(ds.n_samples))
    out = Path(args.out)
    _write_manifest(out, "eval", {"dataset": args.dataset, "checkpoint": args.checkpoint})
    _write_csv(out / "errors.csv", ["sample", "relative_error"],
               list(enumerate(per_sample.tolist())))
    print(f"mean relative error over {ds.n_samples} samples: {mean:.6e}")
    return 0


def cmd_predict(args) -> int:
    ds, model = _load_pair(args)
    preds = np.stack([forward(model, ds.sample(i)[0], ds.sample(i)[1]).data
                      for i in range(ds.n_samples)])
    out = Path(args.out)
    _write_manifest(out, "predict", {"dataset": args.dataset, "checkpoint": args.checkpoint})
    pred_ds = Dataset(grid=ds.grid, family=ds.family, inputs=ds.inputs, outputs=preds,
                      epsilons=ds.epsilons, manifest={"predictions_of": str(args.dataset)})
    save_dataset(out / "predictions.pdt", pred_ds)
    print(f"wrote predictions for {ds.n_samples} samples")
    return 0


def cmd_spectrum(args) -> int:
    ds, model = _load_pair(args)
    split = args.split if args.split is not None else 0.5
    count = args.samples if args.samples is not None else ds.n_samples
    count = min(count, ds.n_samples)
    out = Path(args.out)
    _write_manifest(out, "spectrum", {"dataset": args.dataset,
                                      "checkpoint": args.checkpoint,
                                      "split": split, "samples": count})
    band_rows = []
    for i in range(count):
        a, eps, truth = ds.sample(i)
        report = spectrum_error(forward(model, a, eps), truth)
        low, high = band_error_summary(report, split)
        band_rows.append((i, low, high))
        _write_csv(out / f"spectrum_{i:04d}.csv", ["position", "mode_label", "value"],
                   [(j, int(report.labels[j]), float(report.values[j]))
                    for j in range(report.prefix)])
    _write_csv(out / "bands.csv", ["sample", "low_band_mean", "high_band_mean"], band_rows)
    lows = np.array([r[1] for r in band_rows])
    highs = np.array([r[2] for r in band_rows])
    print(f"mean low-band error {lows.mean():.6e}, mean high-band error {highs.mean():.6e}")
    return 0


def _nls_problem_from(cfg) -> tuple[NlsProblem, np.ndarray]:
    grid = family_grid("nls", cfg["grid_n"])
    law = NlsInitLaw()
    u0 = sample_nls_u0(grid, law, cfg["seed"], cfg.get("index", 0))
    problem = NlsProblem(grid, cfg["eps"], nls_potential(grid, law),
                         cfg["t_final"], cfg["steps"])
    return problem, complex_from_field(u0)


def cmd_split_solve(args) -> int:
    defaults = {"grid_n": 64, "eps": 0.25, "steps": 1000, "t_final": 0.5, "seed": 0}
    cfg = _resolve(args, defaults, list(defaults))
    problem, u0 = _nls_problem_from(cfg)
    u = lie_trotter_nls(problem, u0)
    out = Path(args.out)
    _write_manifest(out, "split-solve", cfg)
    ds = Dataset(grid=problem.grid, family="nls",
                 inputs=field_from_complex(problem.grid, u0).data[None],
                 outputs=field_from_complex(problem.grid, u).data[None],
                 epsilons=np.array([cfg["eps"]]), manifest={"solver": cfg})
    save_dataset(out / "solution.pdt", ds)
    print(f"advanced one instance to T={cfg['t_final']} in {cfg['steps']} steps")
    return 0


def cmd_pod_split_solve(args) -> int:
    defaults = {"grid_n": 32, "eps": 0.25, "steps": 200, "t_final": 0.5, "seed": 0,
                "basis_type": 2, "modes": "8 16 32 64"}
    cfg = _resolve(args, defaults, list(defaults))
    problem, u0 = _nls_problem_from(cfg)
    modes = cfg["modes"] if isinstance(cfg["modes"], list) else _int_list(str(cfg["modes"]))
    rows = splitting_error_curve(problem, u0, int(cfg["basis_type"]), modes)
    out = Path(args.out)
    _write_manifest(out, "pod-split-solve", cfg)
    _write_csv(out / "error_curve.csv", ["modes", "relative_error"], rows)
    for n, err in rows:
        print(f"N={n:5d}  relative error {err:.3e}")
    return 0


def cmd_ablate(args) -> int:
    if not args.config:
        raise ValueError("ablate needs --config with the base experiment")
    base = _load_config_file(args.config)
    values = _int_list(args.values)
    rows = ablation_sweep(args.axis, values, base)
    out = Path(args.out)
    _write_manifest(out, "ablate", {"base": base, "axis": args.axis, "values": values})
    _write_csv(out / "ablation.csv", ["axis", "value", "test_error"],
               [(r["axis"], r["value"], r["test_error"]) for r in rows])
    for r in rows:
        print(f"{r['axis']}={r['value']}: test error {r['test_error']:.4e}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podnolab",
                                     description="Operator-learning laboratory for "
                                                 "dispersive and elliptic PDEs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **flag_specs):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (or a run.json manifest)")
        p.add_argument("--out", required=True, help="output directory")
        for flag, kind in flag_specs.items():
            p.add_argument(f"--{flag}", type=kind)
        p.set_defaults(fn=fn)
        return p

    for family in ("darcy", "nls", "kp"):
        add(f"gen-{family}", lambda a, f=family: cmd_generate(a, f),
            n=int, seed=int, **{"grid-n": int, "steps": int, "t-final": float,
                                "epsilon-pool": int})
    add("pod-basis", cmd_pod_basis, dataset=str, modes=int,
        **{"snapshot-count": int, "snapshot-fraction": float})
    add("train", cmd_train, dataset=str, kernel=str, modes=int, width=int,
        layers=int, epochs=int, lr=float, batch=int, seed=int,
        **{"weight-decay": float, "n-train": int, "n-test": int,
           "snapshot-count": int, "snapshot-fraction": float})
    p = add("eval", cmd_eval, dataset=str, checkpoint=str)
    p = add("predict", cmd_predict, dataset=str, checkpoint=str)
    p = add("spectrum", cmd_spectrum, dataset=str, checkpoint=str,
            split=float, samples=int)
    add("split-solve", cmd_split_solve, eps=float, steps=int, seed=int,
        **{"grid-n": int, "t-final": float})
    add("pod-split-solve", cmd_pod_split_solve, eps=float, steps=int, seed=int,
        modes=str, **{"grid-n": int, "t-final": float, "basis-type": int})
    p = add("ablate", cmd_ablate, axis=str, values=str)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit as exc:  # argparse errors already printed usage
        return int(exc.code or 0)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


def main():
    raise SystemExit(cli_main())
