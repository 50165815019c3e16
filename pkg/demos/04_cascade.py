"""Training a cascade: a linear net, then deeper nets on what it misses.

Each candidate is trained on the residual of the nets already kept and is
recruited only if it lowers the validation RMSE. The sweep over the number
of principal components picks k by validation RMSE.
"""
import numpy as np

from cascadenet import reports
from cascadenet.cascade import sweep_pcs
from cascadenet.dataset import GeneratorConfig, generate, partition_by_year

cfg = GeneratorConfig()
data = generate(cfg)
part = partition_by_year(data, seed=0)
sweep = sweep_pcs(data, part, [1, 2, 4, 6, 8, 12, 20])

print(" k  train    val   test  nets")
for r in sweep.records:
    mark = " <- selected" if r.k == sweep.best_k else ""
    print(f"{r.k:2d} {r.train_rmse:6.2f} {r.val_rmse:6.2f} {r.test_rmse:6.2f} {r.n_nets_kept:5d}{mark}")

best = sweep.best
print("\ncandidates of the selected cascade:")
for row in reports.per_net_rows(best, data, part):
    status = "kept" if row["kept"] else "rejected"
    print(f"  depth {row['depth']}: val RMSE {row['val_rmse']:.3f} ({status})")

# The hidden-layer nets mostly help in the late years, where the
# late-onset signal lives.
rows = reports.per_year_rows(best, data, part, cfg.first_year, cfg.n_years)
late, early = reports.late_vs_early(rows)
print(f"\nmean per-year RMSE gain over the linear net on test years: early {early:.2f}, late {late:.2f}")
