"""IPv4 prefix lattices: patterns, generalization order, levels and glb.

A lattice node is a :class:`PrefixPattern` (one prefix length per
dimension).  A :class:`Prefix` is a packet key masked to a pattern.  Three
lattices are supported: one-dimensional source prefixes at byte (H=5) or bit
(H=33) granularity, and source/destination pairs at byte granularity (H=25).

Throughout, ``e ⪯ p`` reads "e is generalized by p": every dimension of p
is a (possibly equal) prefix of the corresponding dimension of e.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Optional

__all__ = [
    "PacketKey",
    "PrefixPattern",
    "Prefix",
    "HierarchySpec",
    "HIERARCHIES",
    "parse_ipv4",
    "format_ipv4",
    "mask32",
]

_FULL32 = 0xFFFFFFFF


def mask32(length: int) -> int:
    """Netmask with the ``length`` high bits set."""
    if not 0 <= length <= 32:
        raise ValueError(f"prefix length must be in [0, 32], got {length}")
    return (_FULL32 << (32 - length)) & _FULL32


def parse_ipv4(text: str) -> int:
    return int(ipaddress.IPv4Address(text.strip()))


def format_ipv4(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


class PacketKey(NamedTuple):
    """Identity of one packet: source address and optional destination."""

    src: int
    dst: Optional[int] = None

    @classmethod
    def parse(cls, src: str, dst: Optional[str] = None) -> "PacketKey":
        return cls(parse_ipv4(src), None if dst is None else parse_ipv4(dst))


class PrefixPattern(NamedTuple):
    """A lattice node: prefix length per dimension (``dst_len`` None in 1D)."""

    src_len: int
    dst_len: Optional[int] = None

    @property
    def dims(self) -> int:
        return 1 if self.dst_len is None else 2


class Prefix(NamedTuple):
    pattern: PrefixPattern
    src_bits: int
    dst_bits: Optional[int] = None

    def __str__(self) -> str:
        src = f"{format_ipv4(self.src_bits)}/{self.pattern.src_len}"
        if self.pattern.dst_len is None:
            return src
        return f"{src}|{format_ipv4(self.dst_bits)}/{self.pattern.dst_len}"

    @property
    def key64(self) -> int:
        """Packed ``src << 32 | dst`` form used by the counter tables."""
        return (self.src_bits << 32) | (self.dst_bits or 0)

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        """Inverse of ``str()``: ``"a.b.c.d/len"`` or ``"a.b.c.d/len|e.f.g.h/len"``."""
        parts = text.strip().split("|")
        if len(parts) > 2:
            raise ValueError(f"bad prefix {text!r}")
        nets = [ipaddress.IPv4Network(part, strict=True) for part in parts]
        if len(nets) == 1:
            return cls(PrefixPattern(nets[0].prefixlen), int(nets[0].network_address))
        return cls(
            PrefixPattern(nets[0].prefixlen, nets[1].prefixlen),
            int(nets[0].network_address),
            int(nets[1].network_address),
        )


def _is_prefix_of(short_bits: int, short_len: int, long_bits: int, long_len: int) -> bool:
    return short_len <= long_len and (long_bits & mask32(short_len)) == short_bits


@dataclass(frozen=True)
class HierarchySpec:
    """One prefix lattice.

    ``nodes`` are ordered by level ascending, then by source length
    descending, then destination length descending; a node's position in
    that list is its counter-table index.
    """

    name: str
    dims: int
    granularity: str
    nodes: tuple[PrefixPattern, ...] = field(repr=False)

    @classmethod
    def build(cls, name: str) -> "HierarchySpec":
        """Construct ``"src-byte"``, ``"src-bit"`` or ``"2d-byte"``."""
        if name == "src-byte":
            dims, granularity = 1, "byte"
        elif name == "src-bit":
            dims, granularity = 1, "bit"
        elif name == "2d-byte":
            dims, granularity = 2, "byte"
        elif name == "2d-bit":
            raise ValueError("two-dimensional bit-granularity lattices are not supported")
        else:
            raise ValueError(f"unknown hierarchy {name!r}")
        step = 8 if granularity == "byte" else 1
        lengths = list(range(32, -1, -step))
        if dims == 1:
            patterns = [PrefixPattern(s) for s in lengths]
        else:
            patterns = [PrefixPattern(s, d) for s in lengths for d in lengths]

        def level(p: PrefixPattern) -> int:
            return ((32 - p.src_len) + (32 - (p.dst_len if p.dst_len is not None else 32))) // step

        patterns.sort(key=lambda p: (level(p), -p.src_len, -(p.dst_len or 0)))
        return cls(name=name, dims=dims, granularity=granularity, nodes=tuple(patterns))

    @property
    def step(self) -> int:
        return 8 if self.granularity == "byte" else 1

    @property
    def h(self) -> int:
        return len(self.nodes)

    @property
    def l(self) -> int:  # noqa: E743 - hierarchy depth, conventional name
        return self.dims * 32 // self.step

    @cached_property
    def index(self) -> dict[PrefixPattern, int]:
        return {p: i for i, p in enumerate(self.nodes)}

    @cached_property
    def masks64(self) -> list[int]:
        """Per node ``src_mask << 32 | dst_mask``, aligned with ``nodes``."""
        return [(mask32(p.src_len) << 32) | (mask32(p.dst_len) if p.dst_len is not None else 0)
                for p in self.nodes]

    @property
    def fully_specified(self) -> PrefixPattern:
        return self.nodes[0]

    @property
    def fully_general(self) -> PrefixPattern:
        return self.nodes[-1]

    # -- patterns ---------------------------------------------------------

    def _check_pattern(self, pattern: PrefixPattern) -> None:
        if pattern not in self.index:
            raise ValueError(f"pattern {pattern} is not a node of the {self.name} lattice")

    def level_of(self, pattern: PrefixPattern) -> int:
        """0 for the fully specified node, ``l`` for the fully general one."""
        self._check_pattern(pattern)
        dst_len = pattern.dst_len if pattern.dst_len is not None else 32
        return ((32 - pattern.src_len) + (32 - dst_len)) // self.step

    @cached_property
    def _levels(self) -> list[list[PrefixPattern]]:
        levels: list[list[PrefixPattern]] = [[] for _ in range(self.l + 1)]
        for p in self.nodes:
            levels[self.level_of(p)].append(p)
        return levels

    def nodes_at_level(self, level: int) -> list[PrefixPattern]:
        if not 0 <= level <= self.l:
            raise ValueError(f"level must be in [0, {self.l}], got {level}")
        return list(self._levels[level])

    def pattern_generalizes(self, general: PrefixPattern, specific: PrefixPattern) -> bool:
        """True when ``general`` is no longer than ``specific`` in every dimension."""
        if general.src_len > specific.src_len:
            return False
        if self.dims == 2 and general.dst_len > specific.dst_len:
            return False
        return True

    @cached_property
    def _between(self) -> dict[tuple[PrefixPattern, PrefixPattern], tuple[PrefixPattern, ...]]:
        # Nodes strictly between two comparable patterns; used for G(q|P).
        table = {}
        for lo in self.nodes:
            for hi in self.nodes:
                if lo == hi or not self.pattern_generalizes(hi, lo):
                    continue
                table[(lo, hi)] = tuple(
                    m for m in self.nodes
                    if m != lo and m != hi
                    and self.pattern_generalizes(m, lo) and self.pattern_generalizes(hi, m)
                )
        return table

    @cached_property
    def ancestor_masks(self) -> dict[PrefixPattern, tuple[tuple[PrefixPattern, int], ...]]:
        """Per node, ``(pattern, mask64)`` of every node generalizing it, itself included."""
        return {lo: tuple((hi, self.masks64[self.index[hi]]) for hi in self.nodes
                          if self.pattern_generalizes(hi, lo))
                for lo in self.nodes}

    def strict_ancestors(self, pattern: PrefixPattern) -> list[PrefixPattern]:
        """Nodes that strictly generalize ``pattern``."""
        return [m for m in self.nodes if m != pattern and self.pattern_generalizes(m, pattern)]

    # -- prefixes ---------------------------------------------------------

    def generalize(self, key: PacketKey, pattern: PrefixPattern) -> Prefix:
        """Mask ``key`` down to ``pattern``."""
        self._check_pattern(pattern)
        if (key.dst is None) != (self.dims == 1):
            raise ValueError(f"key {key} does not match the {self.dims}-dimensional {self.name} lattice")
        src = key.src & mask32(pattern.src_len)
        if self.dims == 1:
            return Prefix(pattern, src)
        return Prefix(pattern, src, key.dst & mask32(pattern.dst_len))

    def truncate(self, p: Prefix, pattern: PrefixPattern) -> Prefix:
        """Coarsen prefix ``p`` to the more general ``pattern``."""
        if not self.pattern_generalizes(pattern, p.pattern):
            raise ValueError(f"{pattern} does not generalize {p.pattern}")
        src = p.src_bits & mask32(pattern.src_len)
        if self.dims == 1:
            return Prefix(pattern, src)
        return Prefix(pattern, src, p.dst_bits & mask32(pattern.dst_len))

    def from_key64(self, pattern: PrefixPattern, key64: int) -> Prefix:
        if self.dims == 1:
            return Prefix(pattern, key64 >> 32)
        return Prefix(pattern, key64 >> 32, key64 & _FULL32)

    def generalizes(self, p: Prefix, q: Prefix) -> bool:
        """True when ``p`` is, in every dimension, a (possibly equal) prefix of ``q``.

        >>> spec = HierarchySpec.build("src-byte")
        >>> spec.generalizes(Prefix.parse("181.7.0.0/16"), Prefix.parse("181.7.20.6/32"))
        True
        """
        if not _is_prefix_of(p.src_bits, p.pattern.src_len, q.src_bits, q.pattern.src_len):
            return False
        if self.dims == 2:
            return _is_prefix_of(p.dst_bits, p.pattern.dst_len, q.dst_bits, q.pattern.dst_len)
        return True

    def is_generalized_by(self, p: Prefix, q: Prefix) -> bool:
        """``p ⪯ q``: q generalizes p (reflexive)."""
        return self.generalizes(q, p)

    def best_generalized(self, q: Prefix, pset: Iterable[Prefix]) -> set[Prefix]:
        """G(q|P): members of ``pset`` strictly below q with no P-member in between."""
        members = set(pset)
        below = [h for h in members if h != q and self.generalizes(q, h)]
        return {h for h in below if not self._has_member_between(h, q, members)}

    def _has_member_between(self, h: Prefix, q: Prefix, members: set[Prefix]) -> bool:
        for m in self._between[(h.pattern, q.pattern)]:
            if self.truncate(h, m) in members:
                return True
        return False

    def glb(self, h: Prefix, h2: Prefix) -> Optional[Prefix]:
        """Greatest common descendant of ``h`` and ``h2``, or None if they are disjoint."""
        if self.generalizes(h, h2):
            return h2
        if self.generalizes(h2, h):
            return h
        if self.dims == 1:
            return None
        if _is_prefix_of(h.src_bits, h.pattern.src_len, h2.src_bits, h2.pattern.src_len):
            src_len, src = h2.pattern.src_len, h2.src_bits
        elif _is_prefix_of(h2.src_bits, h2.pattern.src_len, h.src_bits, h.pattern.src_len):
            src_len, src = h.pattern.src_len, h.src_bits
        else:
            return None
        if _is_prefix_of(h.dst_bits, h.pattern.dst_len, h2.dst_bits, h2.pattern.dst_len):
            dst_len, dst = h2.pattern.dst_len, h2.dst_bits
        elif _is_prefix_of(h2.dst_bits, h2.pattern.dst_len, h.dst_bits, h.pattern.dst_len):
            dst_len, dst = h.pattern.dst_len, h.dst_bits
        else:
            return None
        return Prefix(PrefixPattern(src_len, dst_len), src, dst)

    def prefix_level(self, p: Prefix) -> int:
        return self.level_of(p.pattern)

    def describe(self) -> dict:
        return {"name": self.name, "dims": self.dims, "granularity": self.granularity,
                "H": self.h, "L": self.l}


HIERARCHIES = ("src-byte", "src-bit", "2d-byte")
