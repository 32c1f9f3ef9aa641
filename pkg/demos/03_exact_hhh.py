"""
Exact hierarchical heavy hitters
================================

The oracle counts every prefix exactly.  A prefix is a hierarchical heavy
hitter when the traffic it covers, minus what more specific heavy hitters
already account for, reaches theta * N.
"""

from rhhh.hierarchy import HierarchySpec, PacketKey, Prefix, parse_ipv4
from rhhh.oracle import conditioned_exact, count_exact, exact_hhh

spec = HierarchySpec.build("src-byte")

# 102 packets spread thinly over 101.102.0.0/16, six more elsewhere in 101/8
stream = [PacketKey(parse_ipv4(f"101.102.{third}.{last}")) for third in (1, 2) for last in range(1, 52)]
stream += [PacketKey(parse_ipv4(f"101.7.7.{last}")) for last in range(1, 7)]
counts = count_exact(stream, spec)

wide, narrow = Prefix.parse("101.0.0.0/8"), Prefix.parse("101.102.0.0/16")
print("f(101/8) =", counts.freq(wide), " f(101.102/16) =", counts.freq(narrow))

# With theta * N = 100 no single address is heavy, 101.102/16 is, and 101/8
# is left with only six packets of its own.
theta = 100 / len(stream)
print("HHH:", sorted(map(str, exact_hhh(counts, theta))))
print("C(101/8 | {101.102/16}) =", conditioned_exact(wide, {narrow}, counts))

# A plain heavy hitter view would report both 101/8 and 101.102/16
print("plain heavy prefixes:", [str(p) for p in counts.all_prefixes() if counts.freq(p) >= 100])
