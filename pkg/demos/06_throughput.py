"""
Update throughput
=================

RHHH's per-packet work does not depend on the number of lattice nodes; the
baseline's grows linearly with it.  With V = 10 H only one packet in ten
touches a table at all.
"""

from rhhh.bench import measure_throughput, summarize
from rhhh.hierarchy import HierarchySpec
from rhhh.ingest import gen_zipf
from rhhh.sketch import FullUpdateSketch, RhhhSketch
from rhhh.stats import ConfidenceParams

n = 2_000_000
params = ConfidenceParams.from_eps_delta(0.01, 0.05)

for name in ("src-byte", "2d-byte"):
    spec = HierarchySpec.build(name)
    keys = gen_zipf(1.0, 100_000, n, seed=1, dims=spec.dims).packed()
    runs = {
        "rhhh V=H": lambda: RhhhSketch(spec, params),
        "rhhh V=10H": lambda: RhhhSketch(spec, params, v=10 * spec.h),
        "baseline": lambda: FullUpdateSketch(spec, params),
    }
    for label, factory in runs.items():
        mean, std = summarize(measure_throughput(factory, keys, repeats=3))
        print(f"{name:<9} H={spec.h:<3} {label:<11} {mean / 1e6:6.2f} +- {std / 1e6:.2f} Mpps")
