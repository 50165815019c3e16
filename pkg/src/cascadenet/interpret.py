"""Sensitivity maps: first-layer weights projected back through the PCA basis.

A first-layer unit sees the standardized scores ``z_c = s_c / sd_c``, so its
weight on component c corresponds to input-space direction
``(w_c / sd_c) * component_c``. Summing these gives the grid pattern the
unit responds to. The PCA mean is left out on purpose: the map is a
direction of sensitivity, not a field of values.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import network
from .errors import ParameterError

# Diverging blue-white-red palette, 256 entries. Entries 127 and 128 are both
# white so that zero maps to an exact white pixel.
PALETTE = np.array(
    [(round(255 * i / 127),) * 2 + (255,) for i in range(128)]
    + [(255,) + (round(255 * (255 - i) / 127),) * 2 for i in range(128, 256)],
    dtype=np.int64,
)


@dataclass(frozen=True)
class SensitivityMap:
    temp: np.ndarray
    precip: np.ndarray
    net_index: int
    unit_index: int

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.temp.ravel(), self.precip.ravel()])


def first_layer_units(cascade, net_index: int) -> int:
    spec, _ = cascade.nets[net_index]
    return spec.layer_sizes[1]


def weights_map(cascade, weights) -> np.ndarray:
    """Flattened input-space map for a vector of ``k`` first-layer weights."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (cascade.k,):
        raise ParameterError(f"expected {cascade.k} weights, got shape {weights.shape}")
    return cascade.pca.components[:, : cascade.k] @ (weights * cascade.score_scale)


def unit_map(cascade, net_index: int, unit_index: int) -> SensitivityMap:
    """Map of one first-layer unit; indices are 0-based.

    For the linear net the first layer is the output layer, so its only unit
    is index 0.
    """
    if not 0 <= net_index < len(cascade.nets):
        raise ParameterError(f"net_index {net_index} out of range for {len(cascade.nets)} nets")
    spec, params = cascade.nets[net_index]
    n_units = spec.layer_sizes[1]
    if not 0 <= unit_index < n_units:
        raise ParameterError(f"unit_index {unit_index} out of range for {n_units} first-layer units")
    w, _ = network.unpack(spec, params)[0]
    m = weights_map(cascade, w[:, unit_index])
    half = cascade.height * cascade.width
    return SensitivityMap(
        m[:half].reshape(cascade.height, cascade.width),
        m[half:].reshape(cascade.height, cascade.width),
        net_index,
        unit_index,
    )


def all_unit_maps(cascade) -> list[SensitivityMap]:
    return [
        unit_map(cascade, i, u)
        for i in range(len(cascade.nets))
        for u in range(first_layer_units(cascade, i))
    ]


def color_indices(grid) -> np.ndarray:
    """Palette index per cell on a symmetric scale of +-max|grid|."""
    grid = np.asarray(grid, dtype=np.float64)
    lim = float(np.max(np.abs(grid))) if grid.size else 0.0
    scaled = grid / lim if lim > 0 else np.zeros_like(grid)
    return np.clip(np.floor((scaled + 1.0) * 0.5 * 255 + 0.5), 0, 255).astype(np.int64)


def ppm_text(grid, comments=()) -> str:
    """Plain (P3) PPM rendering of a grid."""
    idx = color_indices(grid)
    h, w = idx.shape
    lines = ["P3"] + [f"# {c}" for c in comments] + [f"{w} {h}", "255"]
    rgb = PALETTE[idx]
    for row in rgb:
        lines.append(" ".join(f"{r} {g} {b}" for r, g, b in row))
    return "\n".join(lines) + "\n"


def grid_csv_text(grid, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    for row in np.asarray(grid, dtype=np.float64):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(lines) + "\n"


def load_grid_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append([float(v) for v in line.split(",")])
    return np.array(rows)


def _write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def export_maps(cascade, out_dir, comments=()) -> list[Path]:
    """Write a CSV grid and a PPM heatmap per (net, first-layer unit, channel).

    Files are named ``net{i}_unit{u}_{temp|precip}.{csv|ppm}`` with 0-based
    indices. Returns the written paths.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc
    written = []
    for smap in all_unit_maps(cascade):
        for channel in ("temp", "precip"):
            grid = getattr(smap, channel)
            stem = f"net{smap.net_index}_unit{smap.unit_index}_{channel}"
            for suffix, text in (("csv", grid_csv_text(grid, comments)), ("ppm", ppm_text(grid, comments))):
                path = out_dir / f"{stem}.{suffix}"
                _write(path, text)
                written.append(path)
    return written
