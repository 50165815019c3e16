"""Stagewise cascade of MLPs of increasing depth, fitted to residual targets.

Net 1 is linear. Net j has j-1 hidden layers and is trained, with all
earlier nets frozen, on what they leave unexplained. A candidate stays in
the cascade only if adding its output lowers the validation RMSE. The
cascade prediction is the sum of the kept nets' outputs.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import network, pca as pca_mod
from .dataset import Dataset, Partition, remove_flat_means
from .errors import NumericalError, ParameterError, ShapeError, TrainingError
from .network import MlpSpec
from .scg import ScgConfig, minimize

GATING_POLICIES = ("stop_at_first_rejection", "try_all_depths")

# Score columns whose training sd falls below this fraction of the largest
# are dropped (scaled by zero) rather than blown up by the standardization.
DEGENERATE_SD_RATIO = 1e-8

# Validation RMSE changes smaller than this fraction of the target sd count
# as ties. Dataset files carry 9 significant digits, so gains below about
# 1e-9 of the target scale cannot be told apart from rounding of the inputs
# or from what the optimizer's stopping rules leave behind.
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CascadeConfig:
    max_nets: int = 8
    hidden_width: int = 2
    gating: str = "stop_at_first_rejection"
    scg: ScgConfig = field(default_factory=ScgConfig)
    seed: int = 0
    restarts: int = 1

    def __post_init__(self):
        if self.max_nets < 1:
            raise ParameterError(f"max_nets must be >= 1, got {self.max_nets}")
        if self.hidden_width < 1:
            raise ParameterError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.gating not in GATING_POLICIES:
            raise ParameterError(f"gating must be one of {GATING_POLICIES}, got {self.gating!r}")
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True)
class CandidateRecord:
    depth: int
    train_rmse: float
    val_rmse: float
    kept: bool
    iterations: int = 0
    converged_by: str = ""


@dataclass
class Cascade:
    """A trained cascade together with its preprocessing.

    Attributes
    ----------
    pca : PcaModel
        Basis truncated to ``k`` components.
    k : int
    height, width : int
        Grid shape, needed for per-channel mean removal.
    score_mean, score_sd : ndarray, shape (k,)
        Training statistics of the PC scores. A zero sd marks a dropped column.
    target_mean, target_sd : float
    nets : list of (MlpSpec, ndarray)
        Kept nets in recruitment order; parameters act on standardized scores
        and produce standardized-target outputs.
    history : list of CandidateRecord
        Every candidate tried, kept or not.
    partition : Partition or None
        The split used for training, if known.
    """

    pca: pca_mod.PcaModel
    k: int
    height: int
    width: int
    score_mean: np.ndarray
    score_sd: np.ndarray
    target_mean: float
    target_sd: float
    nets: list = field(default_factory=list)
    history: list = field(default_factory=list)
    partition: Partition | None = None

    @property
    def dim(self) -> int:
        return 2 * self.height * self.width

    @property
    def score_scale(self) -> np.ndarray:
        """Multiplier taking centred scores to standardized inputs (0 for dropped columns)."""
        sd = np.asarray(self.score_sd)
        out = np.zeros_like(sd)
        np.divide(1.0, sd, out=out, where=sd > 0)
        return out

    def inputs(self, x) -> np.ndarray:
        """Standardized PC scores of raw flattened samples, shape (N, k) or (k,)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"sample length {x.shape[-1]} does not match D={self.dim}")
        scores = pca_mod.transform(self.pca, remove_flat_means(x, self.height, self.width), self.k)
        return (scores - self.score_mean) * self.score_scale

    def net_outputs(self, x) -> np.ndarray:
        """Standardized output of each kept net, shape (M, N)."""
        z = np.atleast_2d(self.inputs(x))
        return np.stack([network.forward(spec, params, z) for spec, params in self.nets])

    def predict(self, x, n_nets: int | None = None):
        """Predicted year(s) using the first ``n_nets`` kept nets (all by default)."""
        x = np.asarray(x, dtype=np.float64)
        outs = self.net_outputs(x)[: n_nets if n_nets is not None else len(self.nets)]
        y = self.target_mean + self.target_sd * outs.sum(axis=0)
        return float(y[0]) if x.ndim == 1 else y

    def cumulative_predictions(self, x) -> np.ndarray:
        """Row j holds the prediction of the first j+1 nets, shape (M, N)."""
        outs = self.net_outputs(x)
        return self.target_mean + self.target_sd * np.cumsum(outs, axis=0)


def predict(cascade: Cascade, sample) -> float:
    return cascade.predict(sample)


def residual_targets(t, net_outputs, j: int) -> np.ndarray:
    """Target of net ``j`` (1-based): ``t`` minus the outputs of nets 1..j-1."""
    t = np.asarray(t, dtype=np.float64)
    outs = list(net_outputs)[: j - 1]
    if len(outs) < j - 1:
        raise ShapeError(f"net {j} needs outputs of {j - 1} earlier nets, got {len(outs)}")
    resid = t.copy()
    for out in outs:
        out = np.asarray(out, dtype=np.float64)
        if out.shape != t.shape:
            raise ShapeError(f"net output shape {out.shape} does not match targets {t.shape}")
        resid -= out
    return resid


def _rmse(err) -> float:
    return float(np.sqrt(np.mean(np.square(err))))


def _init_seed(seed: int, net_index: int, restart: int) -> int:
    return int(np.random.SeedSequence([seed, net_index, restart]).generate_state(1)[0])


def _fit_candidate(spec, z, target, cfg, net_index):
    best = None
    for restart in range(cfg.restarts):
        start = network.init_params(spec, _init_seed(cfg.seed, net_index, restart))

        def oracle(w):
            return network.sse_and_gradient(spec, w, z, target)

        try:
            res = minimize(oracle, start, cfg.scg)
        except NumericalError as exc:
            raise TrainingError(
                f"net {net_index}: SCG failed at iteration {exc.iteration}: {exc}", net_index=net_index
            ) from exc
        if best is None or res.objective < best.objective:
            best = res
    return best


def _preprocessed(data: Dataset):
    x = data.X
    return remove_flat_means(x, data.height, data.width)


def train(
    data: Dataset,
    partition: Partition,
    k: int,
    cfg: CascadeConfig | None = None,
    pca_model: pca_mod.PcaModel | None = None,
    _centred=None,
) -> Cascade:
    """Train a cascade on ``k`` principal components.

    Parameters
    ----------
    data : Dataset
        Raw samples; per-sample channel means are removed here.
    partition : Partition
    k : int
    cfg : CascadeConfig, optional
    pca_model : PcaModel, optional
        Pre-fitted basis (on the training rows) with ``k_max >= k``. Fitted
        here with ``k_max = k`` when omitted.
    """
    cfg = cfg or CascadeConfig()
    for name, idx in partition.names():
        if len(idx) == 0:
            raise ParameterError(f"{name} partition is empty")
    x = _centred if _centred is not None else _preprocessed(data)
    if pca_model is None:
        pca_model = pca_mod.fit(x[partition.train_idx], k)
    if not 1 <= k <= pca_model.k_max:
        raise ParameterError(f"k={k} exceeds the fitted k_max={pca_model.k_max}")
    basis = pca_model.truncate(k)

    scores = pca_mod.transform(basis, x, k)
    train_scores = scores[partition.train_idx]
    score_mean = train_scores.mean(axis=0)
    score_sd = train_scores.std(axis=0, ddof=1)
    score_sd[score_sd <= DEGENERATE_SD_RATIO * max(float(score_sd.max()), 0.0)] = 0.0
    years = data.year
    target_mean = float(years[partition.train_idx].mean())
    target_sd = float(years[partition.train_idx].std(ddof=1))
    if not target_sd > 0:
        target_sd = 1.0

    cascade = Cascade(
        pca=basis,
        k=k,
        height=data.height,
        width=data.width,
        score_mean=score_mean,
        score_sd=score_sd,
        target_mean=target_mean,
        target_sd=target_sd,
        partition=partition,
    )
    z = (scores - score_mean) * cascade.score_scale
    y = (years - target_mean) / target_sd
    tr, va = partition.train_idx, partition.val_idx
    z_tr, z_va = z[tr], z[va]
    cum_tr = np.zeros(len(tr))
    cum_va = np.zeros(len(va))
    best_val = np.inf

    for j in range(1, cfg.max_nets + 1):
        spec = MlpSpec(input_dim=k, hidden_layers=j - 1, hidden_width=cfg.hidden_width)
        target = y[tr] - cum_tr
        res = _fit_candidate(spec, z_tr, target, cfg, j)
        out_tr = network.forward(spec, res.params, z_tr)
        out_va = network.forward(spec, res.params, z_va)
        train_rmse = target_sd * _rmse(y[tr] - cum_tr - out_tr)
        val_rmse = target_sd * _rmse(y[va] - cum_va - out_va)
        kept = val_rmse < best_val - TIE_TOLERANCE * target_sd
        cascade.history.append(
            CandidateRecord(j - 1, train_rmse, val_rmse, kept, res.iterations, res.converged_by)
        )
        if kept:
            cascade.nets.append((spec, res.params))
            cum_tr = cum_tr + out_tr
            cum_va = cum_va + out_va
            best_val = val_rmse
        elif cfg.gating == "stop_at_first_rejection":
            break
    return cascade


def partition_rmse(cascade: Cascade, data: Dataset, partition: Partition, n_nets=None) -> dict:
    pred = cascade.predict(data.X, n_nets)
    return {name: _rmse(pred[idx] - data.year[idx]) for name, idx in partition.names()}


@dataclass(frozen=True)
class SweepRecord:
    k: int
    train_rmse: float
    val_rmse: float
    test_rmse: float
    n_nets_kept: int


@dataclass
class SweepResult:
    records: list
    cascades: dict
    best_k: int

    @property
    def best(self) -> Cascade:
        return self.cascades[self.best_k]


def thread_cap(default: int = 1) -> int:
    value = os.environ.get("CASCADENET_THREADS")
    if value is None or value.strip() == "":
        return default
    try:
        n = int(value)
    except ValueError:
        raise ParameterError(f"CASCADENET_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise ParameterError(f"CASCADENET_THREADS must be >= 1, got {n}")
    return n


def select_k(records) -> int:
    """k with the lowest validation RMSE; ties go to the smaller k."""
    return min(records, key=lambda r: (r.val_rmse, r.k)).k


def sweep_pcs(data: Dataset, partition: Partition, k_values, cfg: CascadeConfig | None = None, threads=None) -> SweepResult:
    """Train one cascade per number of components and pick the best by validation RMSE.

    The basis is fitted once at ``max(k_values)`` and truncated for each k.
    Runs for distinct k are independent; ``threads`` (default: the
    ``CASCADENET_THREADS`` cap, else 1) trains several at once with
    identical results.
    """
    cfg = cfg or CascadeConfig()
    k_values = sorted(set(int(k) for k in k_values))
    if not k_values:
        raise ParameterError("k_values is empty")
    for name, idx in partition.names():
        if len(idx) == 0:
            raise ParameterError(f"{name} partition is empty")
    x = _preprocessed(data)
    basis = pca_mod.fit(x[partition.train_idx], max(k_values))

    def run(k):
        try:
            casc = train(data, partition, k, cfg, pca_model=basis, _centred=x)
        except TrainingError as exc:
            raise TrainingError(f"k={k}: {exc}", net_index=exc.net_index, k=k) from exc
        rm = partition_rmse(casc, data, partition)
        return casc, SweepRecord(k, rm["train"], rm["val"], rm["test"], len(casc.nets))

    threads = thread_cap() if threads is None else threads
    if threads > 1 and len(k_values) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(k_values))) as pool:
            results = list(pool.map(run, k_values))
    else:
        results = [run(k) for k in k_values]
    cascades = {rec.k: casc for casc, rec in results}
    records = [rec for _, rec in results]
    return SweepResult(records, cascades, select_k(records))
