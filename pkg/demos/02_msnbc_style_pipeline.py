"""
Full pipeline on MSNBC-style sequences
======================================

Runs the batch pipeline the way the CLI does. With the real
``msnbc990928.seq`` (UCI "MSNBC.com anonymous web data") pass its path as the
first argument; otherwise a synthetic file of the same shape is generated.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from coclick import PipelineConfig, run_pipeline

work = Path(tempfile.mkdtemp(prefix="coclick-demo-"))

if len(sys.argv) > 1:
    source = Path(sys.argv[1])
else:
    # a few latent interest profiles over the 17 categories
    rng = np.random.default_rng(0)
    profiles = rng.dirichlet(np.full(17, 0.4), size=6)
    lines = []
    for _ in range(5000):
        length = rng.geometric(0.08)
        seq = rng.choice(17, size=length, p=profiles[rng.integers(6)]) + 1
        lines.append(" ".join(map(str, seq)))
    source = work / "synthetic.seq"
    source.write_text("\n".join(lines) + "\n")

###############################################################################
# Defaults: keep users with at least 9 distinct categories, 10 user clusters,
# 3 page clusters, 10 seeded restarts per axis.
config = PipelineConfig(input=str(source), out=str(work / "out"))
manifest = run_pipeline(config)
print(json.dumps(manifest.stats, indent=2))
print("timings (s):", {k: round(v, 2) for k, v in manifest.timings.items()})

###############################################################################
# The two relation tables, as written to disk.
print((work / "out" / "r1.csv").read_text())
print((work / "out" / "r2.csv").read_text())

###############################################################################
# Page clusters by category name.
for cluster in json.loads((work / "out" / "clusters_pages.json").read_text()):
    print(cluster["cluster"], cluster["members"])
print("outputs in", work / "out")
