"""Versioned JSON model files.

Floats are written with 17 significant digits so every float64 survives a
save/load cycle bit for bit, and the output is canonical: saving a loaded
model reproduces the original bytes.

Document layout (schema_version 1)::

    {
      "schema_version": 1,
      "provenance": {...},                      # free-form, optional
      "grid": {"height": H, "width": W},
      "pca": {"k_max": K, "mean": [D floats],
              "components": [K lists of D floats],   # one list per component
              "variances": [K floats]},
      "k": k,
      "standardization": {"score_mean": [k], "score_sd": [k],
                          "target_mean": float, "target_sd": float},
      "nets": [{"depth": L, "width": w, "input_dim": k, "flat_params": [...]}],
      "history": [{"depth", "train_rmse", "val_rmse", "kept",
                   "iterations", "converged_by"}],
      "partition": {"train_years": [...], "val_years": [...],
                    "test_years": [...]} or null
    }
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .cascade import Cascade, CandidateRecord
from .dataset import Partition
from .errors import LoadError, SchemaVersionError
from .network import MlpSpec
from .pca import PcaModel

SCHEMA_VERSION = 1
ORTHONORMALITY_TOL = 1e-6


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    text = format(x, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj, indent: int = 1) -> str:
    return _encode(obj, indent, 0) + "\n"


def to_document(cascade: Cascade, provenance: dict | None = None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION}
    if provenance:
        doc["provenance"] = provenance
    part = cascade.partition
    doc.update(
        {
            "grid": {"height": cascade.height, "width": cascade.width},
            "pca": {
                "k_max": cascade.pca.k_max,
                "mean": cascade.pca.mean,
                "components": [cascade.pca.components[:, j] for j in range(cascade.pca.k_max)],
                "variances": cascade.pca.variances,
            },
            "k": cascade.k,
            "standardization": {
                "score_mean": cascade.score_mean,
                "score_sd": cascade.score_sd,
                "target_mean": cascade.target_mean,
                "target_sd": cascade.target_sd,
            },
            "nets": [
                {
                    "depth": spec.hidden_layers,
                    "width": spec.hidden_width,
                    "input_dim": spec.input_dim,
                    "flat_params": params,
                }
                for spec, params in cascade.nets
            ],
            "history": [
                {
                    "depth": rec.depth,
                    "train_rmse": rec.train_rmse,
                    "val_rmse": rec.val_rmse,
                    "kept": rec.kept,
                    "iterations": rec.iterations,
                    "converged_by": rec.converged_by,
                }
                for rec in cascade.history
            ],
            "partition": None
            if part is None
            else {
                "train_years": list(part.train_years),
                "val_years": list(part.val_years),
                "test_years": list(part.test_years),
            },
        }
    )
    return doc


def dumps(cascade: Cascade, provenance: dict | None = None) -> str:
    return canonical_json(to_document(cascade, provenance))


def save(cascade: Cascade, path, provenance: dict | None = None) -> Path:
    """Write ``cascade`` atomically (temporary file, then rename)."""
    path = Path(path)
    text = dumps(cascade, provenance)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _array(value, name, shape=None):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise LoadError(f"{name} must be numeric") from None
    if shape is not None and arr.shape != shape:
        raise LoadError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise LoadError(f"{name} contains non-finite values")
    return arr


def from_document(doc: dict) -> Cascade:
    """Rebuild a cascade, checking the invariants a valid model satisfies."""
    if not isinstance(doc, dict):
        raise LoadError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(version, SCHEMA_VERSION)
    try:
        height = int(doc["grid"]["height"])
        width = int(doc["grid"]["width"])
        d = 2 * height * width
        p = doc["pca"]
        k_max = int(p["k_max"])
        k = int(doc["k"])
        mean = _array(p["mean"], "pca.mean", (d,))
        comps = _array(p["components"], "pca.components", (k_max, d)).T.copy()
        variances = _array(p["variances"], "pca.variances", (k_max,))
        st = doc["standardization"]
        score_mean = _array(st["score_mean"], "standardization.score_mean", (k,))
        score_sd = _array(st["score_sd"], "standardization.score_sd", (k,))
        target_mean = float(st["target_mean"])
        target_sd = float(st["target_sd"])
        nets = []
        for i, net in enumerate(doc["nets"]):
            spec = MlpSpec(int(net["input_dim"]), int(net["depth"]), int(net["width"]))
            params = _array(net["flat_params"], f"nets[{i}].flat_params", (spec.n_params,))
            nets.append((spec, params))
        history = [
            CandidateRecord(
                int(h["depth"]),
                float(h["train_rmse"]),
                float(h["val_rmse"]),
                bool(h["kept"]),
                int(h.get("iterations", 0)),
                str(h.get("converged_by", "")),
            )
            for h in doc["history"]
        ]
        part_doc = doc.get("partition")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, LoadError):
            raise
        raise LoadError(f"malformed model document: {exc!r}") from None

    if not 1 <= k <= k_max:
        raise LoadError(f"invariant violated: k={k} outside [1, k_max={k_max}]")
    gram = comps.T @ comps
    dev = float(np.max(np.abs(gram - np.eye(k_max)))) if k_max else 0.0
    if dev > ORTHONORMALITY_TOL:
        raise LoadError(f"invariant violated: PCA components not orthonormal (max deviation {dev:.3e})")
    if np.any(variances < 0) or np.any(np.diff(variances) > 0):
        raise LoadError("invariant violated: PCA variances must be nonnegative and nonincreasing")
    if np.any(score_sd < 0) or not target_sd > 0:
        raise LoadError("invariant violated: standardization sd must be nonnegative (target sd positive)")
    if not nets:
        raise LoadError("invariant violated: cascade holds no nets")
    depths = [spec.hidden_layers for spec, _ in nets]
    if depths[0] != 0 or any(b <= a for a, b in zip(depths, depths[1:])):
        raise LoadError(f"invariant violated: net depths {depths} must start at 0 and increase")
    if any(spec.input_dim != k for spec, _ in nets):
        raise LoadError("invariant violated: every net must take k inputs")
    kept_val = [h.val_rmse for h in history if h.kept]
    if any(b >= a for a, b in zip(kept_val, kept_val[1:])):
        raise LoadError("invariant violated: kept validation RMSEs must strictly decrease")

    partition = None
    if part_doc is not None:
        # Indices are rebuilt from years against whatever dataset is used later.
        partition = Partition(
            np.array([], dtype=np.intp),
            np.array([], dtype=np.intp),
            np.array([], dtype=np.intp),
            tuple(float(y) for y in part_doc["train_years"]),
            tuple(float(y) for y in part_doc["val_years"]),
            tuple(float(y) for y in part_doc["test_years"]),
        )
    return Cascade(
        pca=PcaModel(mean, comps, variances),
        k=k,
        height=height,
        width=width,
        score_mean=score_mean,
        score_sd=score_sd,
        target_mean=target_mean,
        target_sd=target_sd,
        nets=nets,
        history=history,
        partition=partition,
    )


def loads(text: str) -> Cascade:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoadError(f"malformed JSON: {exc}") from None
    return from_document(doc)


def load(path) -> Cascade:
    """Read a model file. Raises ``OSError`` for I/O problems, ``LoadError`` otherwise."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads(text)


def read_provenance(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh).get("provenance", {})
