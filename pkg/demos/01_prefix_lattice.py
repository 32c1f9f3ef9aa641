"""
Prefixes and the generalization lattice
=======================================

A packet key is generalized by masking it to shorter prefixes.  The set of
mask combinations forms a lattice; each node later gets its own counter table.
"""

from rhhh.hierarchy import HierarchySpec, PacketKey, Prefix, PrefixPattern

# Byte-granularity source hierarchy: /32, /24, /16, /8, /0
spec = HierarchySpec.build("src-byte")
print(spec.describe())

key = PacketKey.parse("181.7.20.6")
for pattern in spec.nodes:
    print(f"level {spec.level_of(pattern)}:", spec.generalize(key, pattern))

# generalizes(p, q): p is a prefix of q in every dimension
print(spec.generalizes(Prefix.parse("181.7.0.0/16"), Prefix.parse("181.7.20.6/32")))
print(spec.generalizes(Prefix.parse("181.8.0.0/16"), Prefix.parse("181.7.20.6/32")))

# Two dimensions: (source, destination) pairs give a 5 x 5 grid of masks
two = HierarchySpec.build("2d-byte")
print(two.describe())
print([len(two.nodes_at_level(l)) for l in range(two.l + 1)])
pair = PacketKey.parse("181.7.20.6", "208.67.222.222")
print(two.generalize(pair, PrefixPattern(24, 32)))

# Greatest lower bound: the most general prefix covered by both arguments
a = Prefix.parse("1.2.0.0/16|0.0.0.0/0")
b = Prefix.parse("0.0.0.0/0|5.6.0.0/16")
print("glb:", two.glb(a, b))
print("disjoint:", two.glb(a, Prefix.parse("1.3.0.0/16|0.0.0.0/0")))

# G(q|P): the members of P that q most closely generalizes
pset = {Prefix.parse("142.14.13.0/24"), Prefix.parse("142.14.13.14/32")}
print([str(h) for h in spec.best_generalized(Prefix.parse("142.14.0.0/16"), pset)])
