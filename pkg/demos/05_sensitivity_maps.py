"""Reading a trained net: project first-layer weights back onto the grid.

On noise-free linear data the linear net's map should point along the
generator's true warming pattern.
"""
import sys
import tempfile

import numpy as np

from cascadenet.cascade import train
from cascadenet.dataset import GeneratorConfig, generate, partition_by_year, signal_patterns
from cascadenet.interpret import export_maps, unit_map

cfg = GeneratorConfig(nonlinear_amplitude=0, noise_sd=0, model_offset_sd=0)
data = generate(cfg)
casc = train(data, partition_by_year(data, seed=0), k=2)
m = unit_map(casc, 0, 0)
truth = signal_patterns(cfg).linear_pattern()
cos = m.flat @ truth / (np.linalg.norm(m.flat) * np.linalg.norm(truth))
print(f"cosine between the linear net's map and the true pattern: {cos:.6f}")

# Export CSV grids and PPM heatmaps (blue negative, white zero, red positive).
out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="maps_")
paths = export_maps(casc, out)
print(f"wrote {len(paths)} files to {out}:", ", ".join(p.name for p in paths))
