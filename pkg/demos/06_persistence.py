"""Saving and reloading a model exactly.

Floats are written with 17 significant digits, so a reloaded model gives
bit-identical predictions and re-saving it reproduces the same bytes.
"""
import tempfile
from pathlib import Path

import numpy as np

from cascadenet import persistence
from cascadenet.cascade import CascadeConfig, train
from cascadenet.dataset import GeneratorConfig, generate, partition_by_year

data = generate(GeneratorConfig(height=12, width=24))
casc = train(data, partition_by_year(data, seed=0), k=6, cfg=CascadeConfig(max_nets=3))

with tempfile.TemporaryDirectory() as tmp:
    first = persistence.save(casc, Path(tmp) / "model.json", {"note": "demo"})
    back = persistence.load(first)
    second = persistence.save(back, Path(tmp) / "again.json", {"note": "demo"})
    print("re-saved file identical:", first.read_bytes() == second.read_bytes())
    print("largest prediction change:", float(np.max(np.abs(casc.predict(data.X) - back.predict(data.X)))))
    print("file size:", first.stat().st_size, "bytes")
