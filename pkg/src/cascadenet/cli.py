"""Command-line driver: ``cascadenet {generate,train,maps,evaluate}``.

Settings come from an optional JSON file (``--config``) overlaid by flags;
flags win. The JSON file mirrors the flag groups::

    {"seed": 0, "data": "data.csv", "out": "run", "model": "run/model.json",
     "pcs": [1, 2, 5],
     "partition": {"fractions": [0.5, 0.25, 0.25], "stratify": true},
     "generator": {"height": 24, "noise_sd": 1.0, ...},
     "cascade": {"max_nets": 8, "hidden_width": 2, "gating": "stop_at_first_rejection",
                 "restarts": 1, "scg": {"max_iterations": 2000, ...}}}

Unknown keys are rejected. ``seed`` drives the year partition and the
weight initialisation; for ``generate`` it also sets the pattern seed to
``seed`` and the noise seed to ``seed + 1`` unless those are given
explicitly.

Exit codes: 0 success, 2 invalid configuration, input file or model schema,
3 training failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, persistence, reports
from .cascade import CascadeConfig, sweep_pcs
from .dataset import GeneratorConfig, Partition, generate, load_csv, partition_by_year, save_csv
from .errors import (
    ConfigError,
    ConvergenceError,
    LoadError,
    NumericalError,
    ParameterError,
    ParseError,
    TrainingError,
)
from .interpret import export_maps
from .scg import ScgConfig

EXIT_OK, EXIT_CONFIG, EXIT_TRAINING, EXIT_IO = 0, 2, 3, 4

DEFAULT_PCS = (1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 15, 20, 30)
DEFAULT_PATHS = {
    "generate": {"out": "data.csv"},
    "train": {"data": "data.csv", "out": "run"},
    "maps": {"model": "run/model.json", "out": "maps"},
    "evaluate": {"data": "data.csv", "model": "run/model.json", "out": "eval"},
}

_TOP_KEYS = {"seed", "data", "out", "model", "pcs", "partition", "generator", "cascade"}
_PARTITION_KEYS = {"fractions", "stratify"}
_CASCADE_KEYS = {"max_nets", "hidden_width", "gating", "restarts", "scg"}

# flag destination -> (section, key)
_FLAG_FIELDS = {
    "seed": (None, "seed"),
    "data": (None, "data"),
    "out": (None, "out"),
    "model": (None, "model"),
    "pcs": (None, "pcs"),
    "gating": ("cascade", "gating"),
    "max_nets": ("cascade", "max_nets"),
    "hidden_width": ("cascade", "hidden_width"),
    "restarts": ("cascade", "restarts"),
    "max_iterations": ("scg", "max_iterations"),
    "height": ("generator", "height"),
    "width": ("generator", "width"),
    "n_models": ("generator", "n_models"),
    "n_years": ("generator", "n_years"),
    "nonlinear_amplitude": ("generator", "nonlinear_amplitude"),
    "noise_sd": ("generator", "noise_sd"),
    "model_offset_sd": ("generator", "model_offset_sd"),
    "first_year": ("generator", "first_year"),
    "pattern_seed": ("generator", "linear_pattern_seed"),
    "noise_seed": ("generator", "noise_seed"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved and validated settings for one command."""

    command: str
    seed: int
    generator: GeneratorConfig
    cascade: CascadeConfig
    pcs: tuple
    fractions: tuple
    stratify: bool
    data: str | None = None
    out: str | None = None
    model: str | None = None

    def describe(self) -> dict:
        """Path-free summary stored as run provenance."""
        return {
            "seed": self.seed,
            "pcs": list(self.pcs),
            "partition": {"fractions": list(self.fractions), "stratify": self.stratify},
            "cascade": {
                "max_nets": self.cascade.max_nets,
                "hidden_width": self.cascade.hidden_width,
                "gating": self.cascade.gating,
                "restarts": self.cascade.restarts,
                "scg": asdict(self.cascade.scg),
            },
        }


# --------------------------------------------------------------------------
# configuration


def _check_keys(section: dict, allowed, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object", field=where or None)
    for key in section:
        if key not in allowed:
            name = f"{where}.{key}" if where else key
            raise ConfigError(f"unknown config key {name!r}", field=name)


def _as_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{name} must be an integer, got {value!r}", field=name)
    return value


def _as_float(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}", field=name)
    return float(value)


def _build(cls, values: dict, where: str):
    """Instantiate a config dataclass, turning type and range problems into ConfigError."""
    kwargs = {}
    for f in fields(cls):
        if f.name not in values:
            continue
        name = f"{where}.{f.name}"
        v = values[f.name]
        if f.type in ("int", int):
            v = _as_int(v, name)
        elif f.type in ("float", float):
            v = _as_float(v, name)
        kwargs[f.name] = v
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        bad = next((k for k in kwargs if k in str(exc)), None)
        field = f"{where}.{bad}" if bad else where
        raise ConfigError(f"invalid {field}: {exc}", field=field) from None


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}", field="config") from None
    _check_keys(data, _TOP_KEYS, "")
    for key, allowed in (("partition", _PARTITION_KEYS), ("cascade", _CASCADE_KEYS)):
        if key in data:
            _check_keys(data[key], allowed, key)
    if "generator" in data:
        _check_keys(data["generator"], set(GeneratorConfig.field_names()), "generator")
    if "scg" in data.get("cascade", {}):
        _check_keys(data["cascade"]["scg"], {f.name for f in fields(ScgConfig)}, "cascade.scg")
    return data


def parse_pcs(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"pcs must be a comma-separated list of integers, got {text!r}", field="pcs") from None
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config_file(args.config) if args.config else {}
    gen = dict(raw.get("generator", {}))
    casc = dict(raw.get("cascade", {}))
    scg = dict(casc.pop("scg", {}))
    top = {k: raw[k] for k in ("seed", "data", "out", "model", "pcs") if k in raw}
    part = dict(raw.get("partition", {}))
    sections = {None: top, "generator": gen, "cascade": casc, "scg": scg}
    for dest, (section, key) in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            sections[section][key] = value

    seed = _as_int(top.get("seed", 0), "seed")
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}", field="seed")
    gen.setdefault("linear_pattern_seed", seed)
    gen.setdefault("noise_seed", seed + 1)
    generator = _build(GeneratorConfig, gen, "generator")
    scg_cfg = _build(ScgConfig, scg, "cascade.scg")
    casc["scg"] = scg_cfg
    casc["seed"] = seed
    for key in ("max_nets", "hidden_width", "restarts"):
        if key in casc:
            casc[key] = _as_int(casc[key], f"cascade.{key}")
    try:
        cascade = CascadeConfig(**casc)
    except ParameterError as exc:
        bad = next((k for k in casc if k in str(exc)), "cascade")
        raise ConfigError(f"invalid cascade.{bad}: {exc}", field=f"cascade.{bad}") from None

    pcs = top.get("pcs", DEFAULT_PCS)
    if isinstance(pcs, str):
        pcs = parse_pcs(pcs)
    if not isinstance(pcs, (list, tuple)) or not pcs:
        raise ConfigError("pcs must be a non-empty list of integers", field="pcs")
    pcs = tuple(_as_int(k, "pcs") for k in pcs)
    if min(pcs) < 1:
        raise ConfigError(f"pcs entries must be >= 1, got {min(pcs)}", field="pcs")

    fractions = part.get("fractions", (0.5, 0.25, 0.25))
    if not isinstance(fractions, (list, tuple)) or len(fractions) != 3:
        raise ConfigError("partition.fractions must hold three numbers", field="partition.fractions")
    fractions = tuple(_as_float(f, "partition.fractions") for f in fractions)
    if min(fractions) < 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("partition.fractions must be nonnegative and sum to 1", field="partition.fractions")
    stratify = part.get("stratify", True)
    if not isinstance(stratify, bool):
        raise ConfigError("partition.stratify must be true or false", field="partition.stratify")

    paths = dict(DEFAULT_PATHS[args.command])
    for key in ("data", "out", "model"):
        if key in top:
            if not isinstance(top[key], str):
                raise ConfigError(f"{key} must be a path string", field=key)
            paths[key] = top[key]
    return RunConfig(
        command=args.command,
        seed=seed,
        generator=generator,
        cascade=cascade,
        pcs=pcs,
        fractions=fractions,
        stratify=stratify,
        data=paths.get("data"),
        out=paths.get("out"),
        model=paths.get("model"),
    )


# --------------------------------------------------------------------------
# commands


def _comments(cfg: RunConfig, argv) -> list[str]:
    return [
        "cascadenet " + " ".join(argv),
        f"seed: {cfg.seed}",
        f"schema_version: {persistence.SCHEMA_VERSION}",
    ]


def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def data_digest(data) -> str:
    """SHA-256 of the sample values, years and model labels."""
    h = hashlib.sha256()
    for arr in (data.X, data.year, data.source_model):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def _partition(cfg: RunConfig, data) -> Partition:
    return partition_by_year(data, cfg.fractions, seed=cfg.seed, stratify=cfg.stratify)


def _write_reports(out: Path, cascade, data, partition, comments) -> list[Path]:
    tables = {
        "per_net_rmse.csv": reports.per_net_rows(cascade, data, partition),
        "pred_vs_actual.csv": reports.prediction_rows(cascade, data, partition),
        "rmse_per_year.csv": reports.per_year_rows(cascade, data, partition),
    }
    written = []
    for name, rows in tables.items():
        path = out / name
        _write_text(path, reports.csv_text(rows, comments))
        written.append(path)
    return written


def cmd_generate(cfg: RunConfig, argv) -> int:
    data = generate(cfg.generator)
    path = Path(cfg.out)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, path, _comments(cfg, argv))
    print(f"wrote {len(data)} samples ({data.height}x{data.width} grid) to {path}")
    return EXIT_OK


def cmd_train(cfg: RunConfig, argv) -> int:
    data = load_csv(cfg.data)
    partition = _partition(cfg, data)
    sweep = sweep_pcs(data, partition, cfg.pcs, cfg.cascade)
    best = sweep.best
    out = _out_dir(cfg.out)
    provenance = {
        "tool": "cascadenet",
        "version": __version__,
        "command": "train",
        "data_sha256": data_digest(data),
        **cfg.describe(),
    }
    persistence.save(best, out / "model.json", provenance)
    comments = _comments(cfg, argv)
    _write_text(out / "rmse_vs_pcs.csv", reports.csv_text(reports.sweep_rows(sweep), comments))
    _write_reports(out, best, data, partition, comments)
    rec = {r.k: r for r in sweep.records}[sweep.best_k]
    print(
        f"best k={sweep.best_k}: {len(best.nets)} nets kept, "
        f"RMSE train {rec.train_rmse:.4g}, val {rec.val_rmse:.4g}, test {rec.test_rmse:.4g}; wrote {out}"
    )
    return EXIT_OK


def cmd_maps(cfg: RunConfig, argv) -> int:
    cascade = persistence.load(cfg.model)
    paths = export_maps(cascade, cfg.out, _comments(cfg, argv))
    print(f"wrote {len(paths)} map files to {cfg.out}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, argv) -> int:
    cascade = persistence.load(cfg.model)
    data = load_csv(cfg.data)
    if (data.height, data.width) != (cascade.height, cascade.width):
        raise ConfigError(
            f"dataset grid {data.height}x{data.width} does not match model grid "
            f"{cascade.height}x{cascade.width}",
            field="data",
        )
    if cascade.partition is not None:
        partition = cascade.partition.reindexed(data.year)
    else:
        partition = _partition(cfg, data)
    out = _out_dir(cfg.out)
    _write_reports(out, cascade, data, partition, _comments(cfg, argv))
    pred = cascade.predict(data.X)
    rm = {name: reports.rmse(pred[idx] - data.year[idx]) for name, idx in partition.names()}
    print("RMSE " + ", ".join(f"{k} {v:.4g}" for k, v in rm.items()) + f"; wrote {out}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "maps": cmd_maps, "evaluate": cmd_evaluate}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="JSON settings file; flags override it")
    g.add_argument("--seed", type=int, help="partition and initialisation seed (default 0)")
    g.add_argument("--data", help="dataset CSV to read")
    g.add_argument("--out", help="output file (generate) or directory")
    g.add_argument("--model", help="model JSON to read (maps, evaluate)")

    c = common.add_argument_group("cascade")
    c.add_argument("--pcs", type=parse_pcs, help="comma-separated numbers of components to sweep")
    c.add_argument("--gating", choices=["stop_at_first_rejection", "try_all_depths"])
    c.add_argument("--max-nets", type=int)
    c.add_argument("--hidden-width", type=int)
    c.add_argument("--restarts", type=int, help="random restarts per candidate net")
    c.add_argument("--max-iterations", type=int, help="SCG iteration limit per net")

    gen = common.add_argument_group("generator")
    gen.add_argument("--height", type=int)
    gen.add_argument("--width", type=int)
    gen.add_argument("--n-models", type=int)
    gen.add_argument("--n-years", type=int)
    gen.add_argument("--nonlinear-amplitude", type=float)
    gen.add_argument("--noise-sd", type=float)
    gen.add_argument("--model-offset-sd", type=float)
    gen.add_argument("--first-year", type=float)
    gen.add_argument("--pattern-seed", type=int)
    gen.add_argument("--noise-seed", type=int)

    parser = argparse.ArgumentParser(
        prog="cascadenet",
        description="Train cascades of small neural networks to date gridded climate-like fields.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write a synthetic dataset CSV",
        "train": "sweep the number of components, save the best cascade and reports",
        "maps": "export sensitivity maps of a saved model",
        "evaluate": "recompute reports from a saved model and a dataset",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _fail(message: str, code: int) -> int:
    print(f"cascadenet: error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, argv)
    except (ConfigError, ParameterError, ParseError, LoadError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except (TrainingError, NumericalError, ConvergenceError) as exc:
        return _fail(f"training failed: {exc}", EXIT_TRAINING)
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        return _fail(f"I/O error{where}: {exc.strerror or exc}", EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
