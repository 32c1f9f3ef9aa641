"""
Source/destination hierarchies
==============================

In two dimensions a prefix can be covered by selected prefixes along both
axes.  The conditioned estimate subtracts each and adds back their common
descendants so that no traffic is removed twice.
"""

import numpy as np

from rhhh.hierarchy import HierarchySpec, PacketKey, Prefix
from rhhh.oracle import conditioned_by_definition, conditioned_exact, count_exact, exact_hhh
from rhhh.sketch import RhhhSketch, pack_keys
from rhhh.stats import ConfidenceParams

spec = HierarchySpec.build("2d-byte")

flows = {("1.2.3.4", "5.6.7.8"): 10, ("1.2.9.9", "9.9.9.9"): 7,
         ("8.8.8.8", "5.6.1.1"): 5, ("7.7.7.7", "7.7.7.7"): 3}
stream = [PacketKey.parse(s, d) for (s, d), c in flows.items() for _ in range(c)]
counts = count_exact(stream, spec)

pset = {Prefix.parse("1.2.0.0/16|0.0.0.0/0"), Prefix.parse("0.0.0.0/0|5.6.0.0/16")}
root = Prefix.parse("0.0.0.0/0|0.0.0.0/0")
# 25 packets - 17 (source 1.2/16) - 15 (destination 5.6/16) + 10 (both)
print("closed form:", conditioned_exact(root, pset, counts))
print("set difference:", conditioned_by_definition(root, pset, counts))

# A larger synthetic stream: a few heavy source/destination blocks plus noise
rng = np.random.default_rng(0)
n = 300_000
src = rng.integers(0, 2**32, n, dtype=np.uint64).astype(np.uint32)
dst = rng.integers(0, 2**32, n, dtype=np.uint64).astype(np.uint32)
heavy = rng.random(n)
src[heavy < 0.2] = (10 << 24) | (src[heavy < 0.2] & 0xFFFF)              # 10.0.x.x -> anywhere
dst[(heavy >= 0.2) & (heavy < 0.35)] = (192 << 24) | (168 << 16) | 1     # anyone -> 192.168.0.1

params = ConfidenceParams.from_eps_delta(0.02, 0.05)
sketch = RhhhSketch(spec, params, seed=3)
sketch.update_many(src, dst)
print(f"\nN = {n}, psi = {sketch.psi:.0f}")
print("rhhh :", sorted(str(c.prefix) for c in sketch.output(0.1)))
print("exact:", sorted(map(str, exact_hhh(count_exact(pack_keys(src, dst), spec), 0.1))))
