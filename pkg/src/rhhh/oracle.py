"""Exact ground truth for validating the sketches.

Counts every generalization of every packet, computes conditioned
frequencies both by direct set difference over fully specified keys and by
the closed forms over G(q|P), and builds the exact HHH set level by level.
Memory grows with the number of distinct keys, so this is for desk-scale
streams only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .hierarchy import HierarchySpec, PacketKey, Prefix, PrefixPattern
from .sketch import glb_corrections, pack_keys

__all__ = [
    "ExactCounts",
    "count_exact",
    "covered_mask",
    "conditioned_by_definition",
    "conditioned_all",
    "conditioned_exact",
    "exact_hhh",
]


@dataclass
class ExactCounts:
    """Exact frequencies of all prefixes of the observed keys.

    ``keys``/``weights`` hold the distinct fully specified keys (packed
    int64) and their packet counts; ``per_node`` maps each lattice node to
    ``{packed prefix: frequency}``.
    """

    spec: HierarchySpec
    n: int
    keys: np.ndarray
    weights: np.ndarray
    per_node: dict[PrefixPattern, dict[int, int]] = field(repr=False)

    def freq(self, p: Prefix) -> int:
        return self.per_node[p.pattern].get(p.key64, 0)

    def prefixes(self, pattern: PrefixPattern) -> list[Prefix]:
        return [self.spec.from_key64(pattern, k) for k in sorted(self.per_node[pattern])]

    def all_prefixes(self) -> list[Prefix]:
        return [p for pattern in self.spec.nodes for p in self.prefixes(pattern)]


def _masked(keys: np.ndarray, mask: int) -> np.ndarray:
    return keys & np.array([mask], dtype=np.uint64).view(np.int64)[0]


def count_exact(stream, spec: HierarchySpec) -> ExactCounts:
    """Exact counts for a stream of :class:`PacketKey` or a packed int64 array."""
    if isinstance(stream, np.ndarray):
        packed = np.ascontiguousarray(stream, dtype=np.int64)
    else:
        stream = list(stream)
        for key in stream:
            if (key.dst is None) != (spec.dims == 1):
                raise ValueError(f"key {key} does not match the {spec.name} lattice")
        src = [k.src for k in stream]
        dst = None if spec.dims == 1 else [k.dst for k in stream]
        packed = pack_keys(src, dst) if stream else np.empty(0, dtype=np.int64)
    keys, weights = np.unique(packed, return_counts=True)
    per_node = {}
    for pattern, mask in zip(spec.nodes, spec.masks64):
        prefixes, inverse = np.unique(_masked(keys, mask), return_inverse=True)
        sums = np.bincount(inverse.ravel(), weights=weights, minlength=len(prefixes))
        per_node[pattern] = {int(k) & ((1 << 64) - 1): int(s) for k, s in zip(prefixes, sums)}
    return ExactCounts(spec=spec, n=int(packed.shape[0]), keys=keys,
                       weights=weights.astype(np.int64), per_node=per_node)


def _as_int64(key64: int) -> np.int64:
    return np.array([key64], dtype=np.uint64).view(np.int64)[0]


def covered_mask(counts: ExactCounts, pset: Iterable[Prefix]) -> np.ndarray:
    """Boolean mask over ``counts.keys``: key generalized by some member of ``pset``."""
    spec = counts.spec
    by_node: dict[PrefixPattern, list[int]] = {}
    for p in pset:
        by_node.setdefault(p.pattern, []).append(p.key64)
    covered = np.zeros(counts.keys.shape[0], dtype=bool)
    for pattern, members in by_node.items():
        mask = spec.masks64[spec.index[pattern]]
        wanted = np.array(members, dtype=np.uint64).view(np.int64)
        covered |= np.isin(_masked(counts.keys, mask), wanted)
    return covered


def conditioned_by_definition(q: Prefix, pset: Iterable[Prefix], counts: ExactCounts) -> int:
    """Packets generalized by ``q`` but by no member of ``pset`` (set difference)."""
    spec = counts.spec
    covered = covered_mask(counts, pset)
    mask = spec.masks64[spec.index[q.pattern]]
    under = _masked(counts.keys, mask) == _as_int64(q.key64)
    return int(counts.weights[under & ~covered].sum())


def conditioned_all(counts: ExactCounts, pset: Iterable[Prefix],
                    patterns: Iterable[PrefixPattern] | None = None) -> dict[PrefixPattern, dict[int, int]]:
    """Set-difference conditioned frequency of every observed prefix at once.

    Members of ``pset`` themselves come out as 0.
    """
    spec = counts.spec
    uncovered = ~covered_mask(counts, pset)
    keys = counts.keys[uncovered]
    weights = counts.weights[uncovered]
    result = {}
    for pattern in (spec.nodes if patterns is None else patterns):
        mask = spec.masks64[spec.index[pattern]]
        prefixes, inverse = np.unique(_masked(keys, mask), return_inverse=True)
        sums = np.bincount(inverse.ravel(), weights=weights, minlength=len(prefixes))
        result[pattern] = {int(k) & ((1 << 64) - 1): int(s) for k, s in zip(prefixes, sums)}
    return result


def conditioned_exact(q: Prefix, pset: Iterable[Prefix], counts: ExactCounts) -> int:
    """Closed-form conditioned frequency over G(q|P).

    One dimension: ``f_q - sum f_h``.  Two dimensions additionally adds back
    ``f_glb(h, h')`` for every pair whose glb is not inside a third member of
    G.  Agrees with :func:`conditioned_by_definition` whenever every member
    of ``pset`` that overlaps q lies below q.
    """
    spec = counts.spec
    g = spec.best_generalized(q, pset)
    total = counts.freq(q) - sum(counts.freq(h) for h in g)
    if spec.dims == 2:
        total += sum(counts.freq(m) for m in glb_corrections(g, spec))
    return total


def exact_hhh(counts: ExactCounts, theta: float) -> set[Prefix]:
    """Exact hierarchical heavy hitters, built from the fully specified level up.

    Level-l prefixes join when their conditioned frequency with respect to
    the prefixes selected at levels below l reaches ``theta * n``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
    spec = counts.spec
    threshold = theta * counts.n
    selected: set[Prefix] = set()
    for level in range(spec.l + 1):
        patterns = spec.nodes_at_level(level)
        masses = conditioned_all(counts, selected, patterns)
        chosen = [spec.from_key64(pattern, key)
                  for pattern in patterns
                  for key, mass in masses[pattern].items() if mass >= threshold]
        selected.update(chosen)
    return selected
