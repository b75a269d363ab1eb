"""Binary persistence for datasets, POD bases, and model checkpoints.

One container layout serves every artifact: a 4-byte magic ("PDT1" for
datasets, "CKP1" for checkpoints and bases) followed by named sections.
Each section is

    name_len: u16 LE | name: utf-8 | payload_len: u64 LE | crc32: u32 LE | payload

Metadata sections hold canonical JSON (sorted keys); array sections hold
raw little-endian values in C order. Every load verifies sizes and CRCs
and never returns a partially decoded artifact. No timestamps are written,
so identical runs produce bit-identical files.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .grids import Field, Grid2D, make_grid
from .neuralop import OperatorConfig, OperatorModel, OperatorParams, init_params
from .pod import PodBasis

DATASET_MAGIC = b"PDT1"
CHECKPOINT_MAGIC = b"CKP1"
SCHEMA_VERSION = 1


class FormatError(RuntimeError):
    """Corrupt, truncated, or wrong-version artifact file."""


# ---------------------------------------------------------------- container

def write_container(path, magic: bytes, sections):
    """sections: iterable of (name, bytes) written in order."""
    with open(path, "wb") as fh:
        fh.write(magic)
        for name, payload in sections:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(struct.pack("<I", zlib.crc32(payload)))
            fh.write(payload)


def read_container(path, magic: bytes) -> dict:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != magic:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {magic!r} (version mismatch?)")
    sections, pos = {}, 4
    while pos < len(blob):
        if pos + 2 > len(blob):
            raise FormatError("truncated section header")
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        if pos + 12 > len(blob):
            raise FormatError(f"truncated header of section {name!r}")
        payload_len, crc = struct.unpack_from("<QI", blob, pos)
        pos += 12
        payload = blob[pos:pos + payload_len]
        if len(payload) != payload_len:
            raise FormatError(f"section {name!r}: payload truncated "
                              f"({len(payload)} of {payload_len} bytes)")
        if zlib.crc32(payload) != crc:
            raise FormatError(f"section {name!r}: checksum failure")
        sections[name] = payload
        pos += payload_len
    return sections


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _array_bytes(arr: np.ndarray, dtype) -> bytes:
    return np.ascontiguousarray(arr, dtype=dtype).tobytes()


def _array_from(payload: bytes, dtype, shape, what: str) -> np.ndarray:
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(payload) != expected:
        raise FormatError(f"{what}: size mismatch ({len(payload)} bytes, expected {expected})")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def grid_descriptor(grid: Grid2D) -> dict:
    return {"nx": grid.nx, "ny": grid.ny, "x_min": grid.x_min, "x_max": grid.x_max,
            "y_min": grid.y_min, "y_max": grid.y_max, "periodic": grid.periodic}


def grid_from_descriptor(d: dict) -> Grid2D:
    return make_grid(d["nx"], d["ny"], (d["x_min"], d["x_max"], d["y_min"], d["y_max"]),
                     d["periodic"])


# ------------------------------------------------------------------ dataset

@dataclass
class Dataset:
    """Persisted triples (input, epsilon, output) plus generation metadata."""

    grid: Grid2D
    family: str
    inputs: np.ndarray    # [n, in_channels, ny, nx]
    outputs: np.ndarray   # [n, out_channels, ny, nx]
    epsilons: np.ndarray | None
    manifest: dict

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def in_channels(self) -> int:
        return self.inputs.shape[1]

    @property
    def out_channels(self) -> int:
        return self.outputs.shape[1]

    def sample(self, i: int):
        eps = float(self.epsilons[i]) if self.epsilons is not None else None
        return Field(self.grid, self.inputs[i]), eps, Field(self.grid, self.outputs[i])


def save_dataset(path, ds: Dataset):
    manifest = dict(ds.manifest)
    manifest.update({
        "schema_version": SCHEMA_VERSION,
        "family": ds.family,
        "grid": grid_descriptor(ds.grid),
        "n_samples": int(ds.n_samples),
        "in_channels": int(ds.in_channels),
        "out_channels": int(ds.out_channels),
        "has_epsilon": ds.epsilons is not None,
    })
    sections = [("manifest", _json_bytes(manifest)),
                ("inputs", _array_bytes(ds.inputs, "<f8")),
                ("outputs", _array_bytes(ds.outputs, "<f8"))]
    if ds.epsilons is not None:
        sections.append(("epsilons", _array_bytes(ds.epsilons, "<f8")))
    write_container(path, DATASET_MAGIC, sections)


def load_dataset(path) -> Dataset:
    sections = read_container(path, DATASET_MAGIC)
    try:
        manifest = json.loads(sections["manifest"])
    except KeyError:
        raise FormatError("dataset has no manifest section") from None
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema version {manifest.get('schema_version')}")
    n = manifest["n_samples"]
    if n < 1:
        raise FormatError("dataset holds zero samples")
    grid = grid_from_descriptor(manifest["grid"])
    ca, cu = manifest["in_channels"], manifest["out_channels"]
    inputs = _array_from(sections["inputs"], "<f8", (n, ca, grid.ny, grid.nx), "inputs")
    outputs = _array_from(sections["outputs"], "<f8", (n, cu, grid.ny, grid.nx), "outputs")
    epsilons = None
    if manifest["has_epsilon"]:
        if "epsilons" not in sections:
            raise FormatError("manifest promises epsilons but the section is missing")
        epsilons = _array_from(sections["epsilons"], "<f8", (n,), "epsilons")
    return Dataset(grid=grid, family=manifest["family"], inputs=inputs,
                   outputs=outputs, epsilons=epsilons, manifest=manifest)


# -------------------------------------------------------------------- basis

def _basis_sections(basis: PodBasis):
    meta = {"grid": grid_descriptor(basis.grid), "n_modes": int(basis.n_modes),
            "n_sigma": int(basis.sigma.size), "n_snapshots": int(basis.n_snapshots)}
    return [("basis_meta", _json_bytes(meta)),
            ("basis_modes", _array_bytes(basis.modes, "<f8")),
            ("basis_sigma", _array_bytes(basis.sigma, "<f8"))]


def _basis_from_sections(sections) -> PodBasis:
    meta = json.loads(sections["basis_meta"])
    grid = grid_from_descriptor(meta["grid"])
    modes = _array_from(sections["basis_modes"], "<f8",
                        (grid.n_points, meta["n_modes"]), "basis modes")
    sigma = _array_from(sections["basis_sigma"], "<f8", (meta["n_sigma"],), "basis sigma")
    return PodBasis(modes=modes, sigma=sigma, grid=grid, n_snapshots=meta["n_snapshots"])


def save_basis(path, basis: PodBasis):
    write_container(path, CHECKPOINT_MAGIC, _basis_sections(basis))


def load_basis(path) -> PodBasis:
    sections = read_container(path, CHECKPOINT_MAGIC)
    if "basis_meta" not in sections:
        raise FormatError("file holds no basis block")
    return _basis_from_sections(sections)


# --------------------------------------------------------------- checkpoint

def _config_dict(config: OperatorConfig) -> dict:
    return {
        "width": config.width, "layers": config.layers,
        "in_channels": config.in_channels, "out_channels": config.out_channels,
        "kernel": config.kernel,
        "fourier_modes": list(config.fourier_modes) if config.fourier_modes else None,
        "pod_modes": config.pod_modes, "use_epsilon": config.use_epsilon,
        "append_coords": config.append_coords, "epsilon_hidden": config.epsilon_hidden,
    }


def config_from_dict(d: dict) -> OperatorConfig:
    fm = d.get("fourier_modes")
    return OperatorConfig(
        width=d["width"], layers=d["layers"], in_channels=d["in_channels"],
        out_channels=d["out_channels"], kernel=d["kernel"],
        fourier_modes=tuple(fm) if fm else None, pod_modes=d.get("pod_modes"),
        use_epsilon=d.get("use_epsilon", False),
        append_coords=d.get("append_coords", True),
        epsilon_hidden=d.get("epsilon_hidden"),
    )


def save_checkpoint(path, model: OperatorModel, train_state: dict | None = None):
    """Ordered parameter table + raw little-endian blobs (+ basis, + optimizer)."""
    table, blobs = [], []
    for name, arr in model.params.named_tensors():
        dtype = "<c16" if np.iscomplexobj(arr) else "<f8"
        table.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        blobs.append(_array_bytes(arr, dtype))
    sections = [
        ("config", _json_bytes({"model": _config_dict(model.config),
                                "grid": grid_descriptor(model.grid)})),
        ("param_table", _json_bytes(table)),
        ("params", b"".join(blobs)),
    ]
    if model.basis is not None:
        sections.extend(_basis_sections(model.basis))
    if train_state is not None:
        sections.append(("train_state", _json_bytes(
            {"epoch": train_state["epoch"], "t": train_state["t"]})))
        sections.append(("adam_m", b"".join(
            _array_bytes(train_state["m"][n], "<f8") for n, _ in model.params.named_tensors())))
        sections.append(("adam_v", b"".join(
            _array_bytes(train_state["v"][n], "<f8") for n, _ in model.params.named_tensors())))
    write_container(path, CHECKPOINT_MAGIC, sections)


def _split_blob(blob: bytes, table, what: str):
    arrays, pos = {}, 0
    for entry in table:
        dtype = np.dtype(entry["dtype"])
        nbytes = int(np.prod(entry["shape"])) * dtype.itemsize
        chunk = blob[pos:pos + nbytes]
        if len(chunk) != nbytes:
            raise FormatError(f"{what}: blob truncated at {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(entry["shape"]).copy()
        pos += nbytes
    if pos != len(blob):
        raise FormatError(f"{what}: {len(blob) - pos} trailing bytes")
    return arrays


def load_checkpoint(path):
    """Returns (model, train_state-or-None)."""
    sections = read_container(path, CHECKPOINT_MAGIC)
    for required in ("config", "param_table", "params"):
        if required not in sections:
            raise FormatError(f"checkpoint misses section {required!r}")
    meta = json.loads(sections["config"])
    config = config_from_dict(meta["model"])
    grid = grid_from_descriptor(meta["grid"])
    table = json.loads(sections["param_table"])
    arrays = _split_blob(sections["params"], table, "params")

    params = init_params(config, seed=0)
    expected = [name for name, _ in params.named_tensors()]
    if expected != [e["name"] for e in table]:
        raise FormatError("parameter table does not match the configuration")
    _assign_params(params, arrays)

    basis = _basis_from_sections(sections) if "basis_meta" in sections else None
    model = OperatorModel(config=config, grid=grid, params=params, basis=basis)

    train_state = None
    if "train_state" in sections:
        ts = json.loads(sections["train_state"])
        fl_table = [{"name": e["name"],
                     "shape": [int(np.prod(e["shape"])) * (2 if e["dtype"] == "<c16" else 1)],
                     "dtype": "<f8"} for e in table]
        m = _split_blob(sections["adam_m"], fl_table, "adam_m")
        v = _split_blob(sections["adam_v"], fl_table, "adam_v")
        shapes = {e["name"]: e for e in table}
        for store in (m, v):
            for name in store:
                e = shapes[name]
                mult = 2 if e["dtype"] == "<c16" else 1
                shape = list(e["shape"])
                if mult == 2:
                    shape[-1] *= 2
                store[name] = store[name].reshape(shape)
        train_state = {"epoch": ts["epoch"], "t": ts["t"], "m": m, "v": v}
    return model, train_state


def _assign_params(params: OperatorParams, arrays: dict):
    for name, arr in params.named_tensors():
        src = arrays[name]
        if src.shape != arr.shape:
            raise FormatError(f"parameter {name!r}: shape {src.shape} != {arr.shape}")
        arr[...] = src
