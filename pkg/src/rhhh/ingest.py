"""Packet sources: CSV traces and seeded synthetic streams.

CSV traces hold one packet per line, either ``src`` or ``src,dst`` in
dotted-quad notation.  Lines that are blank or start with ``#`` are skipped.
Synthetic streams draw keys i.i.d. from a Zipf (or uniform) law over a fixed
set of random addresses; everything is determined by the seed.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .hierarchy import PacketKey
from .sketch import pack_keys

__all__ = ["Trace", "TraceSource", "TraceFormatError", "TraceDimensionError", "read_csv", "load_csv",
           "gen_zipf", "gen_uniform"]


class TraceFormatError(ValueError):
    """A CSV line could not be parsed; ``line`` is 1-based."""

    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


class TraceDimensionError(TraceFormatError):
    """A CSV line has one address where two are expected, or vice versa."""


@dataclass(frozen=True)
class Trace:
    """An in-memory packet stream as parallel address arrays (uint32)."""

    src: np.ndarray
    dst: Optional[np.ndarray] = None

    @property
    def dims(self) -> int:
        return 1 if self.dst is None else 2

    def __len__(self) -> int:
        return int(self.src.shape[0])

    def __iter__(self) -> Iterator[PacketKey]:
        if self.dst is None:
            for s in self.src.tolist():
                yield PacketKey(s)
        else:
            for s, d in zip(self.src.tolist(), self.dst.tolist()):
                yield PacketKey(s, d)

    def packed(self) -> np.ndarray:
        return pack_keys(self.src, self.dst)

    def head(self, n: int) -> "Trace":
        return Trace(self.src[:n], None if self.dst is None else self.dst[:n])


def _parse_addr(text: str) -> int:
    return int(ipaddress.IPv4Address(text.strip()))


def read_csv(path, dims: int) -> Iterator[PacketKey]:
    """Yield packets from a CSV trace in file order.

    Raises:
        TraceFormatError: malformed address or wrong number of fields.
    """
    if dims not in (1, 2):
        raise ValueError("dims must be 1 or 2")
    with open(path, encoding="ascii", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != dims:
                error = TraceDimensionError if len(fields) in (1, 2) else TraceFormatError
                raise error(path, lineno,
                                       f"expected {dims} address field(s), got {len(fields)}")
            try:
                addrs = [_parse_addr(f) for f in fields]
            except ValueError as exc:
                raise TraceFormatError(path, lineno, str(exc)) from None
            yield PacketKey(addrs[0], addrs[1] if dims == 2 else None)


def load_csv(path, dims: int) -> Trace:
    keys = list(read_csv(path, dims))
    src = np.fromiter((k.src for k in keys), dtype=np.uint32, count=len(keys))
    dst = None
    if dims == 2:
        dst = np.fromiter((k.dst for k in keys), dtype=np.uint32, count=len(keys))
    return Trace(src, dst)


def _universe(rng: np.random.Generator, universe: int, dims: int):
    # distinct random (src[, dst]) identities in a seeded, arbitrary order
    if dims == 1:
        src = rng.choice(1 << 32, size=universe, replace=False).astype(np.uint32)
        return src, None
    draw = lambda size: rng.integers(0, 1 << 64, size=size, dtype=np.uint64)  # noqa: E731
    packed = np.unique(draw(universe))
    while packed.shape[0] < universe:
        packed = np.unique(np.concatenate([packed, draw(universe - packed.shape[0])]))
    packed = rng.permutation(packed)
    src = (packed >> np.uint64(32)).astype(np.uint32)
    dst = (packed & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    return src, dst


def _zipf_ranks(rng: np.random.Generator, alpha: float, universe: int, n: int) -> np.ndarray:
    weights = 1.0 / np.arange(1, universe + 1, dtype=np.float64) ** alpha
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    ranks = np.searchsorted(cdf, rng.random(n), side="right")
    return np.minimum(ranks, universe - 1)


def gen_zipf(alpha: float, universe: int, n: int, seed: int, dims: int = 1) -> Trace:
    """``n`` packets whose keys follow Zipf(``alpha``) over ``universe`` random identities.

    Rank 1 (the most frequent key) is the first identity drawn from the seed.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if universe < 1 or n < 1:
        raise ValueError("universe and n must be at least 1")
    rng = np.random.default_rng(seed)
    src, dst = _universe(rng, universe, dims)
    ranks = _zipf_ranks(rng, alpha, universe, n)
    return Trace(src[ranks], None if dst is None else dst[ranks])


def gen_uniform(universe: int, n: int, seed: int, dims: int = 1) -> Trace:
    if universe < 1 or n < 1:
        raise ValueError("universe and n must be at least 1")
    rng = np.random.default_rng(seed)
    src, dst = _universe(rng, universe, dims)
    ranks = rng.integers(0, universe, size=n)
    return Trace(src[ranks], None if dst is None else dst[ranks])


@dataclass(frozen=True)
class TraceSource:
    """Where packets come from: ``csv`` file or a ``zipf``/``uniform`` generator."""

    kind: str
    path: Optional[str] = None
    alpha: float = 1.0
    universe: int = 10_000
    packets: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("csv", "zipf", "uniform"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ValueError("csv source needs a path")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.universe < 1:
            raise ValueError("universe must be at least 1")
        if self.kind != "csv" and self.packets < 1:
            raise ValueError("packets must be at least 1")

    @classmethod
    def parse(cls, text: str, **synthetic) -> "TraceSource":
        """``"csv:PATH"``, ``"zipf"`` or ``"uniform"`` (parameters as keywords)."""
        if text.startswith("csv:"):
            return cls(kind="csv", path=text[4:])
        return cls(kind=text, **synthetic)

    def load(self, dims: int) -> Trace:
        if self.kind == "csv":
            if not Path(self.path).is_file():
                raise FileNotFoundError(self.path)
            return load_csv(self.path, dims)
        if self.kind == "zipf":
            return gen_zipf(self.alpha, self.universe, self.packets, self.seed, dims)
        return gen_uniform(self.universe, self.packets, self.seed, dims)

    def describe(self) -> dict:
        if self.kind == "csv":
            return {"kind": "csv", "path": self.path}
        out = {"kind": self.kind, "universe": self.universe, "packets": self.packets,
               "seed": self.seed}
        if self.kind == "zipf":
            out["alpha"] = self.alpha
        return out
