"""
Space Saving counters
=====================

One table of k counters tracks approximate counts of a stream.  Every key's
true count lies between the lower and upper bound, and the overestimate is at
most n / k.
"""

from collections import Counter

import numpy as np

from rhhh.ingest import gen_zipf
from rhhh.spacesaving import SpaceSavingTable

# A full table hands the minimum counter to a newcomer
t = SpaceSavingTable(1)
for key in (7, 7, 7, 9):
    t.increment(key)
print(t.entries())  # {9: (count 4, error 3)}

# Heavy keys of a skewed stream survive in a small table
stream = gen_zipf(1.2, 10_000, 200_000, seed=0).src
table = SpaceSavingTable(50)
table.increment_many(stream)
exact = Counter(stream.tolist())

print(f"{'key':>12} {'exact':>8} {'lower':>8} {'upper':>8}")
for key, count in exact.most_common(8):
    print(f"{key:>12} {count:>8} {table.lower_bound(key):>8} {table.upper_bound(key):>8}")

worst = max(table.upper_bound(k) - c for k, c in exact.items())
print("worst overestimate:", worst, "bound n/k:", len(stream) / table.capacity)
table.check_invariants()
