"""Model persistence: JSON manifest + one blob of little-endian float32, row-major."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dcnn import DcnnConfig, DcnnModel
from .recommend import RatingModel, SvdResult

FORMAT_VERSION = 1


def save_tensors(directory, name: str, tensors: dict[str, np.ndarray], meta: dict) -> Path:
    """Write ``<name>.json`` and ``<name>.bin``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blob = bytearray()
    for key, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": key, "shape": list(np.shape(arr)), "offset": offset})
        blob += data
        offset += len(data)
    manifest = {"format_version": FORMAT_VERSION, "blob": f"{name}.bin",
                "dtype": "float32-le", **meta, "tensors": entries}
    (directory / f"{name}.bin").write_bytes(bytes(blob))
    path = directory / f"{name}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_tensors(manifest_path) -> tuple[dict[str, np.ndarray], dict]:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported artifact version {manifest.get('format_version')}")
    blob = (manifest_path.parent / manifest["blob"]).read_bytes()
    tensors = {}
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=entry["offset"])
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
    return tensors, manifest


def save_dcnn(model: DcnnModel, directory, meta: dict, name: str = "model") -> Path:
    """Persist network parameters; ``meta`` should carry config hash, seed and vocabulary hash."""
    meta = dict(meta, kind="dcnn", architecture=model.config.to_dict())
    return save_tensors(directory, name, model.params, meta)


def load_dcnn(manifest_path) -> tuple[DcnnModel, dict]:
    tensors, manifest = load_tensors(manifest_path)
    if manifest.get("kind") != "dcnn":
        raise ValueError(f"{manifest_path} is not a network artifact")
    config = DcnnConfig.from_dict(manifest["architecture"])
    return DcnnModel(config, tensors), manifest


def save_rating_model(model: RatingModel, directory, meta: dict, name: str = "rating_model") -> Path:
    coo = model.ratings.tocoo()
    svd = model.svd
    tensors = {
        "P": svd.P, "Q": svd.Q, "singular_values": svd.singular_values,
        "user_means": svd.user_means, "item_means": svd.item_means,
        "global_mean": np.array([svd.global_mean]),
        "rows": coo.row, "cols": coo.col, "values": coo.data,
    }
    meta = dict(meta, kind="rating_model", user_ids=model.user_ids, item_ids=model.item_ids,
                k_nn=model.k_nn)
    return save_tensors(directory, name, tensors, meta)


def load_rating_model(manifest_path) -> tuple[RatingModel, dict]:
    t, manifest = load_tensors(manifest_path)
    if manifest.get("kind") != "rating_model":
        raise ValueError(f"{manifest_path} is not a rating-model artifact")
    users, items = manifest["user_ids"], manifest["item_ids"]
    ratings = sp.csr_matrix((t["values"], (t["rows"].astype(int), t["cols"].astype(int))),
                            shape=(len(users), len(items)))
    svd = SvdResult(t["P"], t["Q"], t["singular_values"], t["user_means"], t["item_means"],
                    float(t["global_mean"][0]))
    return RatingModel(users, items, ratings, svd, manifest["k_nn"]), manifest
