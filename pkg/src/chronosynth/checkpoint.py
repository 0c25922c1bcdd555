"""Checkpoint directory format: flat binary arrays plus a JSON index.

Layout:
    <dir>/index.json   format version, step counter, embedded run config,
                       and one entry {name, shape, dtype, file} per array
    <dir>/arrays/*.bin raw little-endian buffers

Stored arrays cover generator and discriminator parameters and both Adam
states. Randomness is derived from (seed, step), so restoring those two
values restores the RNG stream and resumed runs reproduce uninterrupted
ones bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

FORMAT_VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64, "int64": np.int64}


class CheckpointError(Exception):
    pass


def _named_optimizer_state(module, optimizer):
    """Adam moment tensors keyed by parameter name."""
    out = {}
    for name, param in module.named_parameters():
        state = optimizer.state.get(param)
        if not state:
            continue
        out[f"{name}.step"] = state["step"].detach().clone()
        out[f"{name}.exp_avg"] = state["exp_avg"].detach().clone()
        out[f"{name}.exp_avg_sq"] = state["exp_avg_sq"].detach().clone()
    return out


def _restore_optimizer_state(module, optimizer, arrays, prefix):
    for name, param in module.named_parameters():
        key = f"{prefix}.{name}.step"
        if key not in arrays:
            continue
        optimizer.state[param] = {
            "step": arrays[key].clone(),
            "exp_avg": arrays[f"{prefix}.{name}.exp_avg"].clone(),
            "exp_avg_sq": arrays[f"{prefix}.{name}.exp_avg_sq"].clone(),
        }


def save_checkpoint(path, generator, discriminator=None, g_opt=None, d_opt=None,
                    step: int = 0, config: dict | None = None) -> None:
    path = Path(path)
    (path / "arrays").mkdir(parents=True, exist_ok=True)

    arrays = {}
    for name, p in generator.named_parameters():
        arrays[f"generator.{name}"] = p.detach()
    if discriminator is not None:
        for name, p in discriminator.named_parameters():
            arrays[f"discriminator.{name}"] = p.detach()
    if g_opt is not None:
        for k, v in _named_optimizer_state(generator, g_opt).items():
            arrays[f"g_opt.{k}"] = v
    if d_opt is not None and discriminator is not None:
        for k, v in _named_optimizer_state(discriminator, d_opt).items():
            arrays[f"d_opt.{k}"] = v

    index = {"format_version": FORMAT_VERSION, "step": int(step),
             "config": config or {}, "arrays": []}
    for i, (name, tensor) in enumerate(sorted(arrays.items())):
        arr = tensor.cpu().numpy()
        if arr.dtype.name not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for {name}")
        fname = f"arrays/{i:05d}.bin"
        arr.astype(arr.dtype, copy=False).tofile(path / fname)
        index["arrays"].append(
            {"name": name, "shape": list(arr.shape), "dtype": arr.dtype.name, "file": fname}
        )
    with open(path / "index.json", "w") as f:
        json.dump(index, f, indent=2)
        f.write("\n")


def read_index(path) -> dict:
    path = Path(path)
    index_file = path / "index.json"
    if not index_file.exists():
        raise CheckpointError(f"no checkpoint index at {index_file}")
    try:
        with open(index_file) as f:
            index = json.load(f)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"corrupt checkpoint index: {e}") from e
    if index.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {index.get('format_version')} != {FORMAT_VERSION}"
        )
    return index


def load_arrays(path) -> tuple[dict, dict]:
    """All stored arrays as torch tensors, plus the parsed index."""
    path = Path(path)
    index = read_index(path)
    arrays = {}
    for entry in index["arrays"]:
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"unsupported dtype {entry['dtype']} in index")
        raw = np.fromfile(path / entry["file"], dtype=dtype)
        want = int(np.prod(entry["shape"])) if entry["shape"] else 1
        if raw.size != want:
            raise CheckpointError(
                f"{entry['name']}: file holds {raw.size} values, index says {want}"
            )
        arrays[entry["name"]] = torch.from_numpy(raw.reshape(entry["shape"]).copy())
    return arrays, index


def _load_module(module, arrays, prefix):
    params = dict(module.named_parameters())
    missing = [n for n in params if f"{prefix}.{n}" not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint missing {prefix} arrays: {missing[:5]}")
    with torch.no_grad():
        for name, p in params.items():
            stored = arrays[f"{prefix}.{name}"]
            if tuple(stored.shape) != tuple(p.shape):
                raise CheckpointError(
                    f"config mismatch: {prefix}.{name} stored {tuple(stored.shape)} "
                    f"!= model {tuple(p.shape)}"
                )
            p.copy_(stored.to(p.dtype))


def load_checkpoint(path, generator, discriminator=None, g_opt=None, d_opt=None) -> dict:
    """Restore parameters (and optimizer moments) in place; returns the index."""
    arrays, index = load_arrays(path)
    _load_module(generator, arrays, "generator")
    if discriminator is not None:
        _load_module(discriminator, arrays, "discriminator")
    if g_opt is not None:
        _restore_optimizer_state(generator, g_opt, arrays, "g_opt")
    if d_opt is not None and discriminator is not None:
        _restore_optimizer_state(discriminator, d_opt, arrays, "d_opt")
    return index
