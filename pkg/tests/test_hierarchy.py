import itertools
import random

import pytest

from rhhh.hierarchy import (HierarchySpec, PacketKey, Prefix, PrefixPattern, format_ipv4,
                            parse_ipv4)


def P(text):
    return Prefix.parse(text)


@pytest.mark.parametrize("name,h,l", [("src-byte", 5, 4), ("src-bit", 33, 32), ("2d-byte", 25, 8)])
def test_lattice_sizes(name, h, l):
    spec = HierarchySpec.build(name)
    assert (spec.h, spec.l) == (h, l)
    assert len(set(spec.nodes)) == h
    assert spec.level_of(spec.fully_specified) == 0
    assert spec.level_of(spec.fully_general) == l


def test_unknown_and_2d_bit_rejected():
    with pytest.raises(ValueError):
        HierarchySpec.build("2d-bit")
    with pytest.raises(ValueError):
        HierarchySpec.build("dst-byte")


def test_node_order(two_d):
    levels = [two_d.level_of(p) for p in two_d.nodes]
    assert levels == sorted(levels)
    assert two_d.nodes[1:3] == (PrefixPattern(32, 24), PrefixPattern(24, 32))


def test_prefix_text_roundtrip():
    for text in ["181.7.0.0/16", "0.0.0.0/0", "1.2.3.4/32", "181.7.20.0/24|208.67.222.222/32"]:
        assert str(P(text)) == text
    with pytest.raises(ValueError):
        P("181.7.20.6/16")  # host bits set


def test_generalize_examples(src_byte, two_d):
    key = PacketKey.parse("181.7.20.6")
    assert src_byte.generalize(key, PrefixPattern(16)) == P("181.7.0.0/16")
    assert src_byte.generalize(key, PrefixPattern(0)) == P("0.0.0.0/0")
    pair = PacketKey.parse("181.7.20.6", "208.67.222.222")
    assert two_d.generalize(pair, PrefixPattern(24, 32)) == P("181.7.20.0/24|208.67.222.222/32")


def test_generalize_rejects_mismatch(src_byte, two_d):
    with pytest.raises(ValueError):
        src_byte.generalize(PacketKey.parse("1.2.3.4", "5.6.7.8"), PrefixPattern(8))
    with pytest.raises(ValueError):
        two_d.generalize(PacketKey.parse("1.2.3.4"), PrefixPattern(8, 8))
    with pytest.raises(ValueError):
        src_byte.generalize(PacketKey.parse("1.2.3.4"), PrefixPattern(12))


def test_generalizes_examples(src_byte, two_d):
    assert src_byte.generalizes(P("181.7.0.0/16"), P("181.7.20.6/32"))
    assert not src_byte.generalizes(P("181.8.0.0/16"), P("181.7.20.6/32"))
    assert two_d.generalizes(P("181.7.0.0/16|0.0.0.0/0"), P("181.7.20.6/32|208.67.222.222/32"))
    # the relation as a partial order: q generalizes p written p ⪯ q
    assert src_byte.is_generalized_by(P("181.7.20.6/32"), P("181.7.0.0/16"))
    assert not src_byte.is_generalized_by(P("181.7.0.0/16"), P("181.7.20.6/32"))


def _random_prefixes(spec, rng, count):
    # addresses from a tiny alphabet so that random prefixes are often comparable
    out = []
    for _ in range(count):
        src = parse_ipv4(".".join(str(rng.choice((1, 2))) for _ in range(4)))
        dst = parse_ipv4(".".join(str(rng.choice((1, 2))) for _ in range(4))) if spec.dims == 2 else None
        out.append(spec.generalize(PacketKey(src, dst), rng.choice(spec.nodes)))
    return out


def test_partial_order_on_2d_lattice(two_d):
    rng = random.Random(3)
    ps = _random_prefixes(two_d, rng, 120)
    for a in ps:
        assert two_d.generalizes(a, a)
    for a, b in itertools.product(ps, repeat=2):
        if two_d.generalizes(a, b) and two_d.generalizes(b, a):
            assert a == b
    for a, b, c in itertools.product(ps[:40], repeat=3):
        if two_d.generalizes(a, b) and two_d.generalizes(b, c):
            assert two_d.generalizes(a, c)


def _maximal_chain_length(spec, pattern):
    # longest chain of single-step generalizations from the fully specified node
    steps = {spec.fully_specified: 0}
    for p in spec.nodes[1:]:
        parents = [q for q in spec.nodes if q in steps and _single_step(spec, q, p)]
        steps[p] = max(steps[q] for q in parents) + 1
    return steps[pattern]


def _single_step(spec, child, parent):
    d_src = child.src_len - parent.src_len
    d_dst = 0 if spec.dims == 1 else child.dst_len - parent.dst_len
    return sorted((d_src, d_dst)) == [0, spec.step]


@pytest.mark.parametrize("name", ["src-byte", "src-bit", "2d-byte"])
def test_level_matches_chain_enumeration(name):
    spec = HierarchySpec.build(name)
    for p in spec.nodes:
        assert spec.level_of(p) == _maximal_chain_length(spec, p)
        for q in spec.nodes:
            if _single_step(spec, p, q):
                assert spec.level_of(q) == spec.level_of(p) + 1


def test_level_examples(src_byte, two_d):
    assert src_byte.level_of(PrefixPattern(32)) == 0
    assert src_byte.level_of(PrefixPattern(0)) == 4
    assert two_d.level_of(PrefixPattern(24, 8)) == 4


def test_nodes_at_level(two_d):
    assert two_d.nodes_at_level(0) == [PrefixPattern(32, 32)]
    assert two_d.nodes_at_level(8) == [PrefixPattern(0, 0)]
    sizes = [len(two_d.nodes_at_level(l)) for l in range(9)]
    assert sizes == [1, 2, 3, 4, 5, 4, 3, 2, 1] and sum(sizes) == 25
    assert sorted(p for l in range(9) for p in two_d.nodes_at_level(l)) == sorted(two_d.nodes)
    with pytest.raises(ValueError):
        two_d.nodes_at_level(9)


def test_best_generalized_examples(src_byte):
    q = P("142.14.0.0/16")
    assert src_byte.best_generalized(q, {P("142.14.13.0/24"), P("142.14.13.14/32")}) == {P("142.14.13.0/24")}
    assert src_byte.best_generalized(q, set()) == set()
    assert src_byte.best_generalized(P("142.14.13.14/32"), {P("142.14.13.14/32")}) == set()


def _g_brute(spec, q, pset):
    below = [h for h in pset if h != q and spec.generalizes(q, h)]
    return {h for h in below
            if not any(m != h and spec.generalizes(m, h) for m in below)}


@pytest.mark.parametrize("name", ["src-byte", "src-bit", "2d-byte"])
def test_best_generalized_brute_force(name):
    spec = HierarchySpec.build(name)
    rng = random.Random(11)
    for _ in range(200):
        pset = set(_random_prefixes(spec, rng, rng.randint(0, 8)))
        q = _random_prefixes(spec, rng, 1)[0]
        g = spec.best_generalized(q, pset)
        assert g == _g_brute(spec, q, pset)
        for a, b in itertools.combinations(g, 2):
            assert not spec.generalizes(a, b) and not spec.generalizes(b, a)


def test_glb_examples(two_d):
    assert two_d.glb(P("1.2.0.0/16|0.0.0.0/0"), P("0.0.0.0/0|5.6.0.0/16")) == P("1.2.0.0/16|5.6.0.0/16")
    assert two_d.glb(P("1.2.0.0/16|5.0.0.0/8"), P("1.2.3.0/24|0.0.0.0/0")) == P("1.2.3.0/24|5.0.0.0/8")
    assert two_d.glb(P("1.2.0.0/16|0.0.0.0/0"), P("1.3.0.0/16|0.0.0.0/0")) is None


def test_glb_brute_force(two_d):
    # common descendants enumerated over every lattice node applied to a small key set
    octets = (1, 2)
    addrs = [parse_ipv4(f"{a}.{b}.{c}.{d}") for a, b, c, d in itertools.product(octets, repeat=4)]
    rng = random.Random(5)
    keys = [PacketKey(rng.choice(addrs), rng.choice(addrs)) for _ in range(30)]
    universe = {two_d.generalize(k, p) for k in keys for p in two_d.nodes}
    ps = _random_prefixes(two_d, rng, 60)
    for h, h2 in itertools.combinations(ps, 2):
        g = two_d.glb(h, h2)
        common = [c for c in universe if two_d.generalizes(h, c) and two_d.generalizes(h2, c)]
        if g is None:
            assert common == []
            continue
        assert two_d.generalizes(h, g) and two_d.generalizes(h2, g)
        for c in common:
            assert two_d.generalizes(g, c)


def test_ipv4_helpers():
    assert format_ipv4(parse_ipv4("208.67.222.222")) == "208.67.222.222"
    with pytest.raises(ValueError):
        parse_ipv4("300.1.1.1")
