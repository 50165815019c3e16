"""Gridded two-channel samples: synthetic generation, CSV I/O, mean removal, splits.

Every sample holds a temperature grid and a precipitation grid of the same
shape, a scalar year (the regression target) and the index of the source
model that produced it. Flattened samples put the row-major temperature grid
first, then the row-major precipitation grid.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ParameterError, ParseError


@dataclass(frozen=True)
class GridSample:
    temp: np.ndarray
    precip: np.ndarray
    year: float
    source_model: int

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.temp.ravel(), self.precip.ravel()])


class Dataset(Sequence):
    """Immutable stack of grid samples backed by contiguous arrays."""

    def __init__(self, temp, precip, year, source_model):
        temp = np.asarray(temp, dtype=np.float64)
        precip = np.asarray(precip, dtype=np.float64)
        if temp.ndim != 3 or temp.shape != precip.shape:
            raise ParameterError(
                f"temp and precip must be matching (n, H, W) stacks, got {temp.shape} and {precip.shape}"
            )
        self.temp = temp
        self.precip = precip
        self.year = np.asarray(year, dtype=np.float64).reshape(-1)
        self.source_model = np.asarray(source_model, dtype=np.int64).reshape(-1)
        if not len(self.year) == len(self.source_model) == temp.shape[0]:
            raise ParameterError("year and source_model must have one entry per sample")
        for arr in (self.temp, self.precip, self.year, self.source_model):
            arr.setflags(write=False)

    @classmethod
    def from_samples(cls, samples: Iterable[GridSample]) -> "Dataset":
        samples = list(samples)
        if not samples:
            raise ParameterError("cannot build a dataset from zero samples")
        return cls(
            np.stack([s.temp for s in samples]),
            np.stack([s.precip for s in samples]),
            [s.year for s in samples],
            [s.source_model for s in samples],
        )

    @property
    def height(self) -> int:
        return self.temp.shape[1]

    @property
    def width(self) -> int:
        return self.temp.shape[2]

    @property
    def dim(self) -> int:
        return 2 * self.height * self.width

    @property
    def X(self) -> np.ndarray:
        n = len(self)
        return np.concatenate([self.temp.reshape(n, -1), self.precip.reshape(n, -1)], axis=1)

    def __len__(self):
        return self.temp.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(np.arange(len(self))[i])
        return GridSample(self.temp[i], self.precip[i], float(self.year[i]), int(self.source_model[i]))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.temp[idx], self.precip[idx], self.year[idx], self.source_model[idx])


# --------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings of the synthetic climate-like generator.

    Defaults give 5 models x 100 years on a 24 x 48 grid. ``first_year`` is
    the year label of normalized time 0; years are spaced by one.
    """

    height: int = 24
    width: int = 48
    n_models: int = 5
    n_years: int = 100
    linear_pattern_seed: int = 0
    noise_seed: int = 1
    nonlinear_amplitude: float = 4.0
    noise_sd: float = 1.0
    model_offset_sd: float = 1.0
    first_year: float = 1850.0

    def __post_init__(self):
        for name in ("height", "width"):
            if getattr(self, name) < 4:
                raise ParameterError(f"{name} must be >= 4, got {getattr(self, name)}")
        if self.n_models < 1:
            raise ParameterError(f"n_models must be >= 1, got {self.n_models}")
        if self.n_years < 2:
            raise ParameterError(f"n_years must be >= 2, got {self.n_years}")
        for name in ("nonlinear_amplitude", "noise_sd", "model_offset_sd"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def late_onset(t):
    """``max(0, t - 0.5)**2``: zero over the first half of the span, convex after."""
    t = np.asarray(t, dtype=np.float64)
    out = np.maximum(0.0, t - 0.5) ** 2
    return float(out) if out.ndim == 0 else out


def _smooth_field(rng, height, width, corr=3.0):
    # Longitude wraps around, latitude does not.
    raw = rng.standard_normal((height, width))
    field = gaussian_filter(raw, sigma=corr, mode=("nearest", "wrap"))
    field -= field.mean()
    return field / np.sqrt(np.mean(field**2))


def _bump(rng, height, width, lat_range, corr=3.0):
    """Nonnegative smooth blob centred at a random point inside ``lat_range``."""
    lat = np.arange(height)[:, None]
    lon = np.arange(width)[None, :]
    c_lat = rng.uniform(*lat_range) * (height - 1)
    c_lon = rng.uniform(0, width)
    d_lon = np.minimum(np.abs(lon - c_lon), width - np.abs(lon - c_lon))
    window = np.exp(-0.5 * (((lat - c_lat) / (0.12 * height)) ** 2 + (d_lon / (0.12 * width)) ** 2))
    texture = 1.0 + 0.5 * np.tanh(_smooth_field(rng, height, width, corr))
    return window * texture


@dataclass(frozen=True)
class SignalPatterns:
    """Ground-truth fields the generator combines; exposed for testing."""

    linear_temp: np.ndarray
    linear_precip: np.ndarray
    late_temp: np.ndarray
    late_precip: np.ndarray
    model_temp: np.ndarray  # (n_models, H, W), unit scale
    model_precip: np.ndarray

    def linear_pattern(self) -> np.ndarray:
        """Flattened linear pattern with each channel centred, as a per-sample mean removal sees it."""
        return np.concatenate(
            [
                (self.linear_temp - self.linear_temp.mean()).ravel(),
                (self.linear_precip - self.linear_precip.mean()).ravel(),
            ]
        )


def signal_rank(cfg: GeneratorConfig) -> int:
    """Rank of the noise-free, per-sample centred data.

    One direction for the linear trend, one for the late-onset term when its
    amplitude is nonzero, and one per contrast between model offsets.
    """
    late = 1 if cfg.nonlinear_amplitude > 0 else 0
    models = cfg.n_models - 1 if cfg.model_offset_sd > 0 else 0
    return 1 + late + models


def signal_patterns(cfg: GeneratorConfig) -> SignalPatterns:
    rng = np.random.default_rng(cfg.linear_pattern_seed)
    h, w = cfg.height, cfg.width
    lin_t = _smooth_field(rng, h, w)
    # Polar amplification: warming grows towards the northern rows.
    lin_t = lin_t + 1.5 * np.linspace(1.0, 0.0, h)[:, None] ** 2
    lin_p = _smooth_field(rng, h, w)
    # Late-onset change sits at high northern latitudes in temperature and
    # in the tropics in precipitation.
    late_t = _bump(rng, h, w, (0.05, 0.3))
    late_p = _bump(rng, h, w, (0.4, 0.6))
    scale = np.sqrt(np.sum(lin_t**2) + np.sum(lin_p**2)) / np.sqrt(np.sum(late_t**2) + np.sum(late_p**2))
    late_t, late_p = late_t * scale, late_p * scale
    model_t = np.stack([_smooth_field(rng, h, w) for _ in range(cfg.n_models)])
    model_p = np.stack([_smooth_field(rng, h, w) for _ in range(cfg.n_models)])
    return SignalPatterns(lin_t, lin_p, late_t, late_p, model_t, model_p)


def generate(cfg: GeneratorConfig | None = None) -> Dataset:
    """Synthetic samples for every (year, model) pair, year-major.

    For normalized time ``t`` in [0, 1] each channel is
    ``linear * t + nonlinear_amplitude * late * max(0, t - 0.5)**2
    + model_offset_sd * model_field + noise_sd * white_noise``.
    Patterns come from ``linear_pattern_seed``, noise from ``noise_seed``.
    """
    cfg = cfg or GeneratorConfig()
    pats = signal_patterns(cfg)
    noise_rng = np.random.default_rng(cfg.noise_seed)
    t = np.linspace(0.0, 1.0, cfg.n_years)
    g = late_onset(t)
    n = cfg.n_years * cfg.n_models
    h, w = cfg.height, cfg.width
    temp = np.empty((n, h, w))
    precip = np.empty((n, h, w))
    year = np.empty(n)
    model = np.empty(n, dtype=np.int64)
    i = 0
    for yi in range(cfg.n_years):
        for m in range(cfg.n_models):
            temp[i] = (
                pats.linear_temp * t[yi]
                + cfg.nonlinear_amplitude * pats.late_temp * g[yi]
                + cfg.model_offset_sd * pats.model_temp[m]
                + cfg.noise_sd * noise_rng.standard_normal((h, w))
            )
            precip[i] = (
                pats.linear_precip * t[yi]
                + cfg.nonlinear_amplitude * pats.late_precip * g[yi]
                + cfg.model_offset_sd * pats.model_precip[m]
                + cfg.noise_sd * noise_rng.standard_normal((h, w))
            )
            year[i] = cfg.first_year + yi
            model[i] = m
            i += 1
    return Dataset(temp, precip, year, model)


def normalized_time(years, first_year, n_years):
    return (np.asarray(years, dtype=np.float64) - first_year) / (n_years - 1)


# --------------------------------------------------------------------------
# preprocessing


def remove_sample_means(data: Dataset) -> Dataset:
    """Subtract each sample's own spatial mean, channel by channel."""
    temp = data.temp - data.temp.mean(axis=(1, 2), keepdims=True)
    precip = data.precip - data.precip.mean(axis=(1, 2), keepdims=True)
    return Dataset(temp, precip, data.year, data.source_model)


def remove_flat_means(x, height: int, width: int) -> np.ndarray:
    """Per-channel mean removal on flattened samples of shape (D,) or (N, D)."""
    x = np.array(x, dtype=np.float64, copy=True)
    half = height * width
    for sl in (slice(0, half), slice(half, 2 * half)):
        x[..., sl] -= x[..., sl].mean(axis=-1, keepdims=True)
    return x


@dataclass(frozen=True)
class Partition:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    train_years: tuple
    val_years: tuple
    test_years: tuple

    def names(self):
        return (("train", self.train_idx), ("val", self.val_idx), ("test", self.test_idx))

    def label_of(self, n: int) -> list[str]:
        labels = [""] * n
        for name, idx in self.names():
            for i in idx:
                labels[i] = name
        return labels

    def reindexed(self, years) -> "Partition":
        """Same year assignment, with indices recomputed for another year column."""
        return Partition.from_years(years, self.train_years, self.val_years, self.test_years)

    @classmethod
    def from_years(cls, years, train_years, val_years, test_years) -> "Partition":
        years = np.asarray(years)
        sets = [tuple(sorted(float(y) for y in s)) for s in (train_years, val_years, test_years)]
        idx = [np.flatnonzero(np.isin(years, s)) for s in sets]
        return cls(*idx, *sets)


def _quota(n: int, fractions, at_least_one: bool) -> tuple[int, int, int]:
    n_train = int(np.floor(fractions[0] * n + 0.5))
    n_val = int(np.floor(fractions[1] * n + 0.5))
    if at_least_one:
        n_train, n_val = max(1, n_train), max(1, n_val)
        while n_train + n_val > n - 1:
            if n_train >= n_val and n_train > 1:
                n_train -= 1
            else:
                n_val -= 1
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def _block_size(fractions, limit: int = 20):
    # Smallest run of consecutive years that the fractions split into whole numbers.
    for b in range(1, limit + 1):
        if all(abs(f * b - round(f * b)) < 1e-9 for f in fractions):
            return b
    return None


def partition_by_year(data, fractions=(0.5, 0.25, 0.25), seed: int = 0, stratify: bool = True) -> Partition:
    """Assign whole years to train/validation/test.

    Distinct years are shuffled with ``seed`` and dealt out by ``fractions``;
    all samples of a year, across source models, share its partition.

    With ``stratify`` (the default) the shuffle happens within consecutive
    blocks of years sized so the fractions split them exactly (4 years for
    50/25/25), so each partition spans the whole period. Leftover years at
    the end are dealt by the same fractions. Without it, all years are
    shuffled together.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ParameterError(f"fractions must be three nonnegative numbers summing to 1, got {fractions}")
    years_all = data.year if isinstance(data, Dataset) else np.asarray([s.year for s in data])
    years = np.unique(years_all)
    n = len(years)
    if n < 3:
        raise ParameterError(f"need at least 3 distinct years to partition, got {n}")
    rng = np.random.default_rng(seed)
    block = _block_size(fractions) if stratify else None
    if block is None or n < block or block < 3:
        block, n_blocks = n, 1
    else:
        n_blocks = n // block

    groups = ([], [], [])
    for b in range(n_blocks):
        chunk = years[b * block : (b + 1) * block]
        counts = _quota(len(chunk), fractions, at_least_one=n_blocks == 1)
        shuffled = chunk[rng.permutation(len(chunk))]
        pos = 0
        for group, c in zip(groups, counts):
            group.extend(shuffled[pos : pos + c])
            pos += c
    rest = years[n_blocks * block :]
    if len(rest):
        counts = _quota(len(rest), fractions, at_least_one=False)
        shuffled = rest[rng.permutation(len(rest))]
        pos = 0
        for group, c in zip(groups, counts):
            group.extend(shuffled[pos : pos + c])
            pos += c
    return Partition.from_years(years_all, *groups)


# --------------------------------------------------------------------------
# CSV I/O


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def save_csv(data: Dataset, path, comments: Sequence[str] = ()) -> None:
    """Write ``data`` using the dataset CSV layout.

    Lines starting with ``#`` are comments; ``comments`` are written first.
    """
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines.append(f"{data.height},{data.width},{len(data)}")
    x = data.X
    for i in range(len(data)):
        values = ",".join(_fmt(v) for v in x[i])
        lines.append(f"{_fmt(data.year[i])},{int(data.source_model[i])},{values}")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_csv(path) -> Dataset:
    """Read a dataset CSV, validating every row against the header."""
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                if len(cells) != 3:
                    raise ParseError("header must be 'height,width,n_samples'", lineno)
                try:
                    header = tuple(int(c) for c in cells)
                except ValueError:
                    raise ParseError(f"non-integer header cell in {line!r}", lineno) from None
                if header[0] < 1 or header[1] < 1 or header[2] < 0:
                    raise ParseError(f"invalid header values {header}", lineno)
                expected = 2 + 2 * header[0] * header[1]
                continue
            if len(cells) != expected:
                raise ParseError(f"expected {expected} values, got {len(cells)}", lineno)
            try:
                year = float(cells[0])
                model = int(cells[1])
                values = np.array([float(c) for c in cells[2:]])
            except ValueError as exc:
                raise ParseError(f"non-numeric cell ({exc})", lineno) from None
            if not (np.isfinite(year) and np.all(np.isfinite(values))):
                raise ParseError("non-finite value", lineno)
            rows.append((year, model, values))
    if header is None:
        raise ParseError("missing header line", 1)
    h, w, n = header
    if len(rows) != n:
        raise ParseError(f"header announces {n} samples but file has {len(rows)}")
    if n == 0:
        raise ParseError("dataset file holds no samples")
    x = np.stack([r[2] for r in rows])
    half = h * w
    return Dataset(
        x[:, :half].reshape(n, h, w),
        x[:, half:].reshape(n, h, w),
        [r[0] for r in rows],
        [r[1] for r in rows],
    )
