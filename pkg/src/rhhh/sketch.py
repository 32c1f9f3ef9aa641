"""Randomized HHH sketch and the full-update baseline.

:class:`RhhhSketch` keeps one Space Saving table per lattice node.  For each
packet it draws ``d`` uniformly from ``[0, V)`` and, when ``d < H``, counts the
packet's generalization to node ``d`` in table ``d``; other draws touch
nothing.  Frequencies are recovered by scaling table counts by ``V``.

:class:`FullUpdateSketch` is the deterministic baseline that counts every
packet in all ``H`` tables.

Both share the output procedure: walk the lattice from fully specified
prefixes upward, estimate each monitored prefix's conditioned frequency with
respect to the prefixes already selected, and select it when the estimate
reaches ``theta * N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np
from numba import njit

from .hierarchy import HierarchySpec, PacketKey, Prefix
from .spacesaving import CounterBank, increment
from .stats import ConfidenceParams, normal_quantile, psi

__all__ = [
    "HhhCandidate",
    "RhhhSketch",
    "FullUpdateSketch",
    "calc_pred_1d",
    "calc_pred_2d",
    "glb_corrections",
    "conditioned_confidence_term",
    "counter_capacity",
    "pack_keys",
]


# -- random numbers ---------------------------------------------------------
# xoshiro256** seeded through splitmix64; state lives in a uint64[4] array so
# that single-packet and batched updates consume the same sequence.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SM1 = np.uint64(0xBF58476D1CE4E5B9)
_SM2 = np.uint64(0x94D049BB133111EB)


def seed_state(seed: int) -> np.ndarray:
    mask = (1 << 64) - 1
    x = seed & mask
    state = np.empty(4, dtype=np.uint64)
    for i in range(4):
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        state[i] = z ^ (z >> 31)
    if not state.any():
        state[0] = 1
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, inline="always")
def _next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, inline="always")
def _below(s, bound, threshold):
    # unbiased: reject the 2**64 mod bound lowest outputs
    while True:
        x = _next_u64(s)
        if x >= threshold:
            return np.int64(x % bound)


@njit(cache=True)
def _random_update(S, masks, keys, v, r, s):
    h = masks.shape[0]
    bound = np.uint64(v)
    threshold = (np.uint64(0) - bound) % bound
    for i in range(keys.shape[0]):
        x = keys[i]
        for _ in range(r):
            d = _below(s, bound, threshold)
            if d < h:
                increment(S, d, x & masks[d])


@njit(cache=True)
def _full_update(S, masks, keys):
    h = masks.shape[0]
    for i in range(keys.shape[0]):
        x = keys[i]
        for d in range(h):
            increment(S, d, x & masks[d])


@njit(cache=True)
def _draws(s, v, count):
    bound = np.uint64(v)
    threshold = (np.uint64(0) - bound) % bound
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        out[i] = _below(s, bound, threshold)
    return out


def pack_keys(src, dst=None) -> np.ndarray:
    """Pack address arrays into the ``src << 32 | dst`` int64 keys the kernels use."""
    src = np.asarray(src, dtype=np.uint64)
    packed = src << np.uint64(32)
    if dst is not None:
        packed |= np.asarray(dst, dtype=np.uint64)
    return packed.view(np.int64)


# -- formulas -----------------------------------------------------------------

def counter_capacity(epsilon_a: float, epsilon_s: float = 0.0) -> int:
    """Counters per table: ``ceil((1 + epsilon_s) / epsilon_a)``.

    Shrinking the counter error to ``epsilon_a / (1 + epsilon_s)`` absorbs a
    table receiving up to ``(1 + epsilon_s) N / V`` updates.
    """
    if not 0.0 < epsilon_a < 1.0:
        raise ValueError("epsilon_a must lie in (0, 1)")
    return max(1, math.ceil((1.0 + epsilon_s) / epsilon_a - 1e-9))


def conditioned_confidence_term(n: int, v: int, delta: float, mode: str = "analysis",
                                r: int = 1) -> float:
    """Additive sampling slack ``2 Z sqrt(N V / r)`` for conditioned estimates.

    ``mode="analysis"`` uses ``Z_{1 - delta/8}`` (what the coverage proof
    needs); ``mode="literal"`` uses ``Z_{1 - delta}``; ``mode="none"`` gives 0.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if mode == "none" or n == 0:
        return 0.0
    if mode == "analysis":
        z = normal_quantile(1.0 - delta / 8.0)
    elif mode == "literal":
        z = normal_quantile(1.0 - delta)
    else:
        raise ValueError(f"unknown confidence mode {mode!r}")
    return 2.0 * z * math.sqrt(n * v / r)


def calc_pred_1d(g: Iterable[Prefix], lower: Callable[[Prefix], float]) -> float:
    """Subtract the lower frequency bound of every closest selected descendant.

    ``g`` is G(p|P), see :meth:`HierarchySpec.best_generalized`.
    """
    return -sum(lower(h) for h in g)


def glb_corrections(g: Iterable[Prefix], spec: HierarchySpec) -> Iterator[Prefix]:
    """The common descendants added back by two-dimensional inclusion-exclusion.

    Yields glb(h, h') for every unordered pair of ``g`` whose glb exists and
    lies inside no third member of ``g``.
    """
    g = sorted(g)
    members = {(h.pattern, h.key64) for h in g}
    for i in range(len(g)):
        for j in range(i + 1, len(g)):
            q = spec.glb(g[i], g[j])
            if q is None:
                continue
            # g[i] and g[j] always contain q; a third hit means another member does too
            hits = 0
            key = q.key64
            for pattern, mask in spec.ancestor_masks[q.pattern]:
                if (pattern, key & mask) in members:
                    hits += 1
                    if hits > 2:
                        break
            if hits == 2:
                yield q


def calc_pred_2d(g: Iterable[Prefix], spec: HierarchySpec,
                 lower: Callable[[Prefix], float],
                 upper: Callable[[Prefix], float]) -> float:
    """Inclusion-exclusion over G(p|P) in two dimensions.

    Each pair's common descendant is added back once, unless a third member
    of G already contains it.
    """
    g = list(g)
    return -sum(lower(h) for h in g) + sum(upper(q) for q in glb_corrections(g, spec))


# -- output -------------------------------------------------------------------

@dataclass(frozen=True)
class HhhCandidate:
    prefix: Prefix
    lower: float
    upper: float
    conditioned: float

    @property
    def estimate(self) -> float:
        """Frequency estimate used for accuracy checks (the counter's upper bound)."""
        return self.upper

    def as_dict(self) -> dict:
        return {"prefix": str(self.prefix), "lower": self.lower, "upper": self.upper,
                "conditioned": self.conditioned}


class _Snapshot:
    """Frozen view of all tables, used during one output() call."""

    def __init__(self, sketch: "_LatticeSketch"):
        self.spec = sketch.spec
        self.scale = sketch.scale
        self.tables = []
        self.floor = []
        for row in range(sketch.spec.h):
            table = sketch.bank.table(row)
            keys, counts, errors = table.arrays()
            self.tables.append({int(k): (int(c), int(e)) for k, c, e in zip(keys, counts, errors)})
            self.floor.append(table.min_count() if table.full else 0)

    def upper(self, p: Prefix) -> float:
        row = self.spec.index[p.pattern]
        entry = self.tables[row].get(p.key64)
        return (entry[0] if entry else self.floor[row]) * self.scale

    def lower(self, p: Prefix) -> float:
        entry = self.tables[self.spec.index[p.pattern]].get(p.key64)
        return (entry[0] - entry[1]) * self.scale if entry else 0.0


class _SelectedSet:
    """The growing output set P with an index of members under each prefix."""

    def __init__(self, spec: HierarchySpec):
        self.spec = spec
        self.members: set[Prefix] = set()
        self.below: dict[Prefix, list[Prefix]] = {}
        self._ancestors = {p: spec.strict_ancestors(p) for p in spec.nodes}

    def add(self, p: Prefix) -> None:
        self.members.add(p)
        for pattern in self._ancestors[p.pattern]:
            self.below.setdefault(self.spec.truncate(p, pattern), []).append(p)

    def best_generalized(self, q: Prefix) -> list[Prefix]:
        members = self.members
        spec = self.spec
        return [h for h in self.below.get(q, ())
                if not spec._has_member_between(h, q, members)]


class _LatticeSketch:
    """Shared state and output path of the randomized and full-update sketches."""

    algorithm = "abstract"

    def __init__(self, spec: HierarchySpec, params: ConfidenceParams, capacity: int):
        self.spec = spec
        self.params = params
        self.capacity = capacity
        self.bank = CounterBank(spec.h, capacity)
        self.masks = np.array(spec.masks64, dtype=np.uint64).view(np.int64)
        self.n = 0

    # subclasses define: scale, confidence(), _ingest(keys)
    scale: float = 1.0

    def confidence(self) -> float:
        return 0.0

    @property
    def tables(self) -> list:
        return [self.bank.table(i) for i in range(self.spec.h)]

    def _key(self, key: PacketKey) -> np.ndarray:
        if (key.dst is None) != (self.spec.dims == 1):
            raise ValueError(f"key {key} does not match the {self.spec.name} lattice")
        return pack_keys([key.src], None if key.dst is None else [key.dst])

    def update(self, key: PacketKey) -> None:
        self._ingest(self._key(key))

    def update_many(self, src, dst=None) -> None:
        """Feed a batch of packets given as address arrays."""
        if (dst is None) != (self.spec.dims == 1):
            raise ValueError(f"expected {self.spec.dims}-dimensional keys")
        self._ingest(pack_keys(src, dst))

    def update_packed(self, keys: np.ndarray) -> None:
        """Feed pre-packed int64 keys (see :func:`pack_keys`)."""
        self._ingest(np.ascontiguousarray(keys, dtype=np.int64))

    def output(self, theta: float, extended: bool = False) -> list[HhhCandidate]:
        """Return the HHH candidates in selection order.

        Candidates at each level are the prefixes monitored by that level's
        tables.  With ``extended=True``, generalizations of prefixes monitored
        at more specific nodes are also tried, using the table's unmonitored
        upper bound.
        """
        if not 0.0 < theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {theta!r}")
        if self.n <= 0:
            raise ValueError("output() needs at least one packet")
        spec = self.spec
        snap = _Snapshot(self)
        selected = _SelectedSet(spec)
        threshold = theta * self.n
        slack = self.confidence()
        out: list[HhhCandidate] = []
        seen_keys: list[set[int]] = [set(t) for t in snap.tables]
        for level in range(spec.l + 1):
            for pattern in spec.nodes_at_level(level):
                row = spec.index[pattern]
                keys = seen_keys[row]
                if extended:
                    for lower_row, lower_keys in enumerate(snap.tables):
                        if spec.pattern_generalizes(pattern, spec.nodes[lower_row]) and lower_row != row:
                            mask = spec.masks64[row]
                            keys = keys | {k & mask for k in lower_keys}
                for key in sorted(keys):
                    p = spec.from_key64(pattern, key)
                    g = selected.best_generalized(p)
                    if spec.dims == 1:
                        pred = calc_pred_1d(g, snap.lower)
                    else:
                        pred = calc_pred_2d(g, spec, snap.lower, snap.upper)
                    conditioned = snap.upper(p) + pred + slack
                    if conditioned >= threshold:
                        selected.add(p)
                        out.append(HhhCandidate(p, snap.lower(p), snap.upper(p), conditioned))
        return out

    def frequency_bounds(self, p: Prefix) -> tuple[float, float]:
        """Scaled (lower, upper) frequency bounds for any prefix of the lattice."""
        table = self.bank.table(self.spec.index[p.pattern])
        return table.lower_bound(p.key64) * self.scale, table.upper_bound(p.key64) * self.scale

    def config(self) -> dict:
        return {"algorithm": self.algorithm, "hierarchy": self.spec.name, "H": self.spec.h,
                "capacity": self.capacity, **self.params.as_dict()}


class RhhhSketch(_LatticeSketch):
    """Randomized HHH: at most ``r`` table updates per packet.

    Args:
        spec: lattice to monitor.
        params: error budget; the counter capacity defaults to
            ``ceil((1 + epsilon_s) / epsilon_a)``.
        v: number of slots ``V >= H``; defaults to ``H``.
        seed: 64-bit PRNG seed.
        r: independent update draws per packet.
        capacity: override the counters per table.
        confidence_mode: ``"analysis"`` (Z_{1-delta/8}), ``"literal"``
            (Z_{1-delta}) or ``"none"``.
    """

    algorithm = "rhhh"

    def __init__(self, spec: HierarchySpec, params: ConfidenceParams, v: Optional[int] = None,
                 seed: int = 0, r: int = 1, capacity: Optional[int] = None,
                 confidence_mode: str = "analysis"):
        v = spec.h if v is None else int(v)
        if v < spec.h:
            raise ValueError(f"V must be at least H={spec.h}, got {v}")
        if r < 1:
            raise ValueError("r must be >= 1")
        if capacity is None:
            capacity = counter_capacity(params.epsilon_a, params.epsilon_s)
        super().__init__(spec, params, capacity)
        self.v = v
        self.r = int(r)
        self.seed = int(seed)
        self.confidence_mode = confidence_mode
        conditioned_confidence_term(1, v, params.delta, confidence_mode)  # validates mode
        self._rng = seed_state(self.seed)

    @property
    def scale(self) -> float:
        return self.v / self.r

    def confidence(self) -> float:
        return conditioned_confidence_term(self.n, self.v, self.params.delta,
                                           self.confidence_mode, self.r)

    @property
    def psi(self) -> float:
        """Packets needed before the sampling guarantees hold."""
        return psi(self.params, self.v) / self.r

    def _ingest(self, keys: np.ndarray) -> None:
        _random_update(self.bank.state, self.masks, keys, self.v, self.r, self._rng)
        self.n += int(keys.shape[0])

    def draw_slots(self, count: int) -> np.ndarray:
        """Draw from a copy of the sketch's generator (for inspection; state untouched)."""
        return _draws(self._rng.copy(), self.v, count)

    def config(self) -> dict:
        return {**super().config(), "V": self.v, "r": self.r, "seed": self.seed,
                "confidence_mode": self.confidence_mode, "psi": self.psi}


class FullUpdateSketch(_LatticeSketch):
    """Deterministic baseline: every packet updates all ``H`` tables.

    Capacity defaults to ``ceil(1 / epsilon_a)``; no sampling slack is added.
    """

    algorithm = "baseline"
    scale = 1.0

    def __init__(self, spec: HierarchySpec, params: ConfidenceParams,
                 capacity: Optional[int] = None):
        if capacity is None:
            capacity = counter_capacity(params.epsilon_a)
        super().__init__(spec, params, capacity)

    def _ingest(self, keys: np.ndarray) -> None:
        _full_update(self.bank.state, self.masks, keys)
        self.n += int(keys.shape[0])

    def update_all(self, key: PacketKey) -> None:
        self.update(key)
