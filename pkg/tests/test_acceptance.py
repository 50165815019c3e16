"""End-to-end acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line (see ``conftest.py``) before asserting,
so the summary lists all eight criteria whatever the outcome.
"""
import json
import time

import numpy as np
import pytest
from conftest import record

from cascadenet import cli, network, pca, persistence
from cascadenet.cascade import sweep_pcs
from cascadenet.dataset import GeneratorConfig, generate, load_csv, partition_by_year, signal_patterns, signal_rank
from cascadenet.interpret import unit_map
from cascadenet.network import MlpSpec
from cascadenet.scg import minimize


def csv_table(path):
    rows = [line.split(",") for line in path.read_text().splitlines() if not line.startswith("#")]
    header, body = rows[0], rows[1:]
    return [dict(zip(header, r)) for r in body]


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    """The default pipeline through the command line: generate, then train."""
    root = tmp_path_factory.mktemp("acceptance")
    start = time.perf_counter()
    assert cli.main(["generate", "--out", str(root / "data.csv")]) == 0
    assert cli.main(["train", "--data", str(root / "data.csv"), "--out", str(root / "run")]) == 0
    return root, time.perf_counter() - start


def test_criterion_1_gradients():
    start = time.perf_counter()
    h = 1e-6
    worst = 0.0
    rng = np.random.default_rng(2024)
    for depth in range(4):
        spec = MlpSpec(input_dim=5, hidden_layers=depth, hidden_width=2)
        params = network.init_params(spec, seed=depth)
        x = rng.standard_normal((12, 5))
        t = rng.standard_normal(12)
        _, grad = network.sse_and_gradient(spec, params, x, t)
        for i in range(spec.n_params):
            up, down = params.copy(), params.copy()
            up[i] += h
            down[i] -= h
            fd = (network.sse_and_gradient(spec, up, x, t)[0] - network.sse_and_gradient(spec, down, x, t)[0]) / (2 * h)
            worst = max(worst, abs(grad[i] - fd) / max(abs(grad[i]), abs(fd), 1.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 10
    record(1, "gradient correctness", ok, f"max relative deviation {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_scg_least_squares():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n_in = int(rng.integers(1, 50))  # n_in weights plus one bias, at most 50
        m = 2 * n_in + 10
        x = rng.standard_normal((m, n_in))
        t = x @ rng.standard_normal(n_in) + 0.3 * rng.standard_normal(m)
        spec = MlpSpec(n_in, 0)
        res = minimize(lambda w: network.sse_and_gradient(spec, w, x, t), network.init_params(spec, seed))
        design = np.column_stack([x, np.ones(m)])
        exact = np.linalg.solve(design.T @ design, design.T @ t)
        worst = max(worst, float(np.max(np.abs(res.params - exact))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 5
    record(2, "SCG oracle equivalence", ok, f"max abs deviation {worst:.2e} over 20 problems, {elapsed:.2f} s")
    assert ok


def test_criterion_3_pca_routes():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((50, 20)) @ np.diag(np.linspace(3.0, 0.5, 20))
    k = 20
    gram = pca.fit(x, k, method="gram")
    cov = pca.fit(x, k, method="covariance")
    signs = np.sign(np.sum(gram.components * cov.components, axis=0))
    route_dev = float(np.max(np.abs(gram.components - cov.components * signs)))
    ortho_dev = max(
        float(np.max(np.abs(m.components.T @ m.components - np.eye(k)))) for m in (gram, cov)
    )
    total = float(np.trace(np.cov(x, rowvar=False)))
    var_sum = max(float(np.sum(m.variances)) for m in (gram, cov))
    ok = route_dev <= 1e-7 and ortho_dev <= 1e-8 and var_sum <= total * (1 + 1e-12)
    record(
        3,
        "PCA oracle equivalence",
        ok,
        f"route deviation {route_dev:.2e}, orthonormality {ortho_dev:.2e}, variance sum {var_sum:.6g} <= {total:.6g}",
    )
    assert ok


def test_criterion_4_gating(default_run):
    cfg = GeneratorConfig(nonlinear_amplitude=0, noise_sd=0)
    data = generate(cfg)
    part = partition_by_year(data, seed=0)
    sweep = sweep_pcs(data, part, cli.DEFAULT_PCS)
    best = sweep.best
    rec = {r.k: r for r in sweep.records}[sweep.best_k]
    normalized_test = rec.test_rmse / (cfg.n_years - 1)
    linear_ok = len(best.nets) == 1 and normalized_test < 1e-4

    root, _ = default_run
    rows = csv_table(root / "run" / "per_net_rmse.csv")
    kept_val = [float(r["val_rmse"]) for r in rows if r["kept"] == "1"]
    nonlinear_ok = len(kept_val) >= 2 and all(b < a for a, b in zip(kept_val, kept_val[1:]))
    ok = linear_ok and nonlinear_ok
    record(
        4,
        "cascade gating soundness",
        ok,
        f"noiseless linear: {len(best.nets)} net(s), normalized test RMSE {normalized_test:.2e}; "
        f"default: {len(kept_val)} nets kept, val RMSE " + " > ".join(f"{v:.3f}" for v in kept_val),
    )
    assert ok


def test_criterion_5_late_year_improvement(default_run):
    root, elapsed = default_run
    rows = csv_table(root / "run" / "rmse_per_year.csv")
    test_rows = [r for r in rows if r["partition"] == "test"]
    late = np.mean([float(r["improvement"]) for r in test_rows if float(r["t"]) > 0.5])
    early = np.mean([float(r["improvement"]) for r in test_rows if float(r["t"]) <= 0.5])
    ok = late > early and elapsed < 60
    record(
        5,
        "late-year improvement",
        ok,
        f"test-year mean improvement late {late:.3f} vs early {early:.3f} years; pipeline {elapsed:.1f} s",
    )
    assert ok


def test_criterion_6_pc_sweep_shape(default_run):
    root, _ = default_run
    rows = csv_table(root / "run" / "rmse_vs_pcs.csv")
    best = min(rows, key=lambda r: (float(r["val_rmse"]), int(r["k"])))
    k_star = int(best["k"])
    rank = signal_rank(GeneratorConfig())
    val, test = float(best["val_rmse"]), float(best["test_rmse"])
    gap = abs(test - val) / val
    ok = k_star <= rank + 5 and gap <= 0.10
    record(
        6,
        "PC sweep shape",
        ok,
        f"k*={k_star} (limit {rank + 5}); val {val:.3f}, test {test:.3f}, relative gap {gap:.1%} (limit 10%)",
    )
    assert ok


def test_criterion_7_map_recovery():
    cfg = GeneratorConfig(nonlinear_amplitude=0, noise_sd=0, model_offset_sd=0)
    data = generate(cfg)
    part = partition_by_year(data, seed=0)
    casc = sweep_pcs(data, part, cli.DEFAULT_PCS).best
    m = unit_map(casc, 0, 0).flat
    truth = signal_patterns(cfg).linear_pattern()
    cos = float(m @ truth / (np.linalg.norm(m) * np.linalg.norm(truth)))
    ok = cos >= 0.9
    record(7, "map recovery", ok, f"cosine similarity {cos:.6f} at k={casc.k}")
    assert ok


def test_criterion_8_determinism_and_persistence(default_run, tmp_path):
    root, _ = default_run
    assert cli.main(["train", "--data", str(root / "data.csv"), "--out", str(tmp_path / "again")]) == 0
    identical = (root / "run" / "model.json").read_bytes() == (tmp_path / "again" / "model.json").read_bytes()

    model = persistence.load(root / "run" / "model.json")
    data = load_csv(root / "data.csv")
    part = model.partition.reindexed(data.year)
    persistence.save(model, tmp_path / "copy.json")
    back = persistence.load(tmp_path / "copy.json")
    worst = max(float(np.max(np.abs(model.predict(data.X[idx]) - back.predict(data.X[idx])))) for _, idx in part.names())
    resaved = (tmp_path / "copy.json").read_text() == persistence.dumps(back)
    doc_roundtrip = json.loads((tmp_path / "copy.json").read_text())["schema_version"] == persistence.SCHEMA_VERSION
    ok = identical and worst <= 1e-15 and resaved and doc_roundtrip
    record(
        8,
        "determinism and persistence",
        ok,
        f"rerun JSON byte-identical: {identical}; max prediction change after roundtrip {worst:.1e}",
    )
    assert ok
