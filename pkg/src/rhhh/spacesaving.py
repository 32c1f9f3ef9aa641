"""Space Saving counters backed by a numba stream-summary.

Each table keeps ``capacity`` counters.  Counters with equal counts share a
bucket; buckets form a doubly linked list ordered by count, so the minimum
is always the head bucket and an increment moves a counter to the adjacent
bucket.  A linear-probing hash index maps keys to counters.  Every increment
is O(1) worst case.

Several tables of the same capacity live side by side in a
:class:`CounterBank` so that the per-packet sketch kernels can address a
table by its row number.  Keys are unsigned 64-bit integers; the sketch
packs a masked ``(src, dst)`` pair as ``src << 32 | dst``.

Ties on the minimum count are broken FIFO: the evicted counter is the one
that has sat in the minimum bucket longest.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["CounterBank", "SpaceSavingTable"]

# Each table is one int64 row of a 2-D array.  Header, then sections of
# length k (counters), k + 1 (buckets) and m (hash slots):
#   keys | counts | errors | cnext | cprev | cbucket
#   bval | bhead | btail | bnext | bprev | bfree | slots | chome
# chome caches each counter's home slot so evictions never rehash.
_K = 0
_M = 1
_SIZE = 2
_UPDATES = 3
_MINB = 4
_NFREE = 5
_HEADER = 6

_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)


@njit(cache=True, inline="always")
def _mix(key):
    h = np.uint64(key)
    h = h ^ (h >> _S33)
    h = h * _M1
    h = h ^ (h >> _S33)
    h = h * _M2
    return h ^ (h >> _S33)


@njit(cache=True, inline="always")
def _home(key, m):
    return np.int64(_mix(key) & np.uint64(m - 1))


# section offsets, all derived from k
@njit(cache=True, inline="always")
def _counts(k):
    return _HEADER + k


@njit(cache=True, inline="always")
def _errors(k):
    return _HEADER + 2 * k


@njit(cache=True, inline="always")
def _cnext(k):
    return _HEADER + 3 * k


@njit(cache=True, inline="always")
def _cprev(k):
    return _HEADER + 4 * k


@njit(cache=True, inline="always")
def _cbucket(k):
    return _HEADER + 5 * k


@njit(cache=True, inline="always")
def _bval(k):
    return _HEADER + 6 * k


@njit(cache=True, inline="always")
def _bhead(k):
    return _HEADER + 7 * k + 1


@njit(cache=True, inline="always")
def _btail(k):
    return _HEADER + 8 * k + 2


@njit(cache=True, inline="always")
def _bnext(k):
    return _HEADER + 9 * k + 3


@njit(cache=True, inline="always")
def _bprev(k):
    return _HEADER + 10 * k + 4


@njit(cache=True, inline="always")
def _bfree(k):
    return _HEADER + 11 * k + 5


@njit(cache=True, inline="always")
def _slots(k):
    return _HEADER + 12 * k + 6


@njit(cache=True, inline="always")
def _chome(k, m):
    return _HEADER + 12 * k + 6 + m


def _row_width(k: int, m: int) -> int:
    return _HEADER + 13 * k + 6 + m


@njit(cache=True, inline="always")
def _bump(S, t, c):
    """Move counter ``c`` to the bucket holding its count + 1."""
    k = S[t, _K]
    b = S[t, _cbucket(k) + c]
    value = S[t, _counts(k) + c] + 1
    nb = S[t, _MINB] if b == -1 else S[t, _bnext(k) + b]
    if nb == -1 or S[t, _bval(k) + nb] != value:
        S[t, _NFREE] -= 1
        new = S[t, _bfree(k) + S[t, _NFREE]]
        S[t, _bval(k) + new] = value
        S[t, _bhead(k) + new] = -1
        S[t, _btail(k) + new] = -1
        S[t, _bprev(k) + new] = b
        S[t, _bnext(k) + new] = nb
        if nb != -1:
            S[t, _bprev(k) + nb] = new
        if b == -1:
            S[t, _MINB] = new
        else:
            S[t, _bnext(k) + b] = new
        nb = new
    if b != -1:
        prv = S[t, _cprev(k) + c]
        nxt = S[t, _cnext(k) + c]
        if prv == -1:
            S[t, _bhead(k) + b] = nxt
        else:
            S[t, _cnext(k) + prv] = nxt
        if nxt == -1:
            S[t, _btail(k) + b] = prv
        else:
            S[t, _cprev(k) + nxt] = prv
        if S[t, _bhead(k) + b] == -1:
            # unlink and free the emptied bucket
            bn = S[t, _bnext(k) + b]
            bp = S[t, _bprev(k) + b]
            if bp == -1:
                S[t, _MINB] = bn
            else:
                S[t, _bnext(k) + bp] = bn
            if bn != -1:
                S[t, _bprev(k) + bn] = bp
            S[t, _bfree(k) + S[t, _NFREE]] = b
            S[t, _NFREE] += 1
    tail = S[t, _btail(k) + nb]
    S[t, _cprev(k) + c] = tail
    S[t, _cnext(k) + c] = -1
    if tail == -1:
        S[t, _bhead(k) + nb] = c
    else:
        S[t, _cnext(k) + tail] = c
    S[t, _btail(k) + nb] = c
    S[t, _cbucket(k) + c] = nb
    S[t, _counts(k) + c] = value


@njit(cache=True, inline="always")
def _find_slot(S, t, key, pos):
    """Probe from home slot ``pos`` for ``key`` or the first empty slot."""
    m = S[t, _M]
    base = _slots(S[t, _K])
    while True:
        c = S[t, base + pos]
        if c == -1 or S[t, _HEADER + c] == key:
            return pos
        pos = (pos + 1) & (m - 1)


@njit(cache=True, inline="always")
def _hash_delete(S, t, c):
    # backward-shift deletion keeps linear probing tombstone-free
    k = S[t, _K]
    m = S[t, _M]
    base = _slots(k)
    homes = _chome(k, m)
    i = S[t, homes + c]
    while S[t, base + i] != c:
        i = (i + 1) & (m - 1)
    j = i
    while True:
        j = (j + 1) & (m - 1)
        d = S[t, base + j]
        if d == -1:
            break
        home = S[t, homes + d]
        if i <= j:
            skip = i < home <= j
        else:
            skip = home > i or home <= j
        if skip:
            continue
        S[t, base + i] = d
        i = j
    S[t, base + i] = -1


@njit(cache=True, inline="always")
def increment(S, t, key):
    """Count one occurrence of ``key`` (an int64 bit pattern) in table ``t``."""
    k = S[t, _K]
    m = S[t, _M]
    S[t, _UPDATES] += 1
    home = _home(key, m)
    pos = _find_slot(S, t, key, home)
    c = S[t, _slots(k) + pos]
    if c != -1:
        _bump(S, t, c)
        return
    size = S[t, _SIZE]
    if size < k:
        c = size
        S[t, _SIZE] = size + 1
        S[t, _counts(k) + c] = 0
        S[t, _errors(k) + c] = 0
    else:
        c = S[t, _bhead(k) + S[t, _MINB]]
        _hash_delete(S, t, c)
        S[t, _errors(k) + c] = S[t, _counts(k) + c]
        pos = _find_slot(S, t, key, home)
    S[t, _HEADER + c] = key
    S[t, _chome(k, m) + c] = home
    S[t, _slots(k) + pos] = c
    _bump(S, t, c)


@njit(cache=True)
def increment_many(S, t, keys):
    for i in range(keys.shape[0]):
        increment(S, t, keys[i])


@njit(cache=True)
def lookup(S, t, key):
    """Return (count, error) for ``key``, or (-1, -1) when unmonitored."""
    k = S[t, _K]
    c = S[t, _slots(k) + _find_slot(S, t, key, _home(key, S[t, _M]))]
    if c == -1:
        return -1, -1
    return S[t, _counts(k) + c], S[t, _errors(k) + c]


def _slot_count(capacity: int) -> int:
    # load factor <= 0.25 keeps probe and shift chains short on eviction-heavy streams
    return 1 << int(4 * capacity - 1).bit_length()


def new_state(rows: int, capacity: int) -> np.ndarray:
    if rows < 1 or capacity < 1:
        raise ValueError("rows and capacity must be positive")
    k = capacity
    m = _slot_count(k)
    S = np.full((rows, _row_width(k, m)), -1, dtype=np.int64)
    S[:, _K] = k
    S[:, _M] = m
    S[:, _SIZE] = 0
    S[:, _UPDATES] = 0
    S[:, _MINB] = -1
    S[:, _NFREE] = k + 1
    S[:, _HEADER:_HEADER + 3 * k] = 0
    bfree = _HEADER + 11 * k + 5
    S[:, bfree:bfree + k + 1] = np.arange(k, -1, -1)
    return S


def as_key_array(keys) -> np.ndarray:
    """uint64 keys as the int64 bit patterns the kernels store."""
    return np.ascontiguousarray(keys, dtype=np.uint64).view(np.int64)


def _key_scalar(key: int) -> np.int64:
    return np.array([key], dtype=np.uint64).view(np.int64)[0]


def _key_out(values: np.ndarray) -> np.ndarray:
    return values.astype(np.int64).view(np.uint64)


class CounterBank:
    """``rows`` independent Space Saving tables sharing one capacity."""

    def __init__(self, rows: int, capacity: int):
        self.rows = rows
        self.capacity = capacity
        self.state = new_state(rows, capacity)

    def table(self, row: int) -> "SpaceSavingTable":
        if not 0 <= row < self.rows:
            raise IndexError(row)
        return SpaceSavingTable(self.capacity, _bank=self, _row=row)

    def total_counters(self) -> int:
        return self.rows * self.capacity


class SpaceSavingTable:
    """A single Space Saving table (or a view of one row of a bank).

    Keys are unsigned 64-bit integers.

    >>> t = SpaceSavingTable(1)
    >>> for key in (7, 7, 7, 9):
    ...     t.increment(key)
    >>> t.entries()
    {9: (4, 3)}
    """

    def __init__(self, capacity: int, *, _bank: CounterBank | None = None, _row: int = 0):
        self._bank = _bank if _bank is not None else CounterBank(1, capacity)
        self._row = _row
        self.capacity = self._bank.capacity

    @property
    def _row_state(self) -> np.ndarray:
        return self._bank.state[self._row]

    def increment(self, key: int) -> None:
        increment_many(self._bank.state, self._row, as_key_array([key]))

    def increment_many(self, keys) -> None:
        increment_many(self._bank.state, self._row, as_key_array(keys))

    @property
    def updates(self) -> int:
        return int(self._row_state[_UPDATES])

    def __len__(self) -> int:
        return int(self._row_state[_SIZE])

    def __contains__(self, key: int) -> bool:
        return lookup(self._bank.state, self._row, _key_scalar(key))[0] >= 0

    @property
    def full(self) -> bool:
        return len(self) == self.capacity

    def min_count(self) -> int:
        """Smallest monitored count, 0 if the table is empty."""
        row = self._row_state
        b = row[_MINB]
        return 0 if b == -1 else int(row[_HEADER + 6 * self.capacity + b])

    def upper_bound(self, key: int) -> int:
        count, _ = lookup(self._bank.state, self._row, _key_scalar(key))
        if count >= 0:
            return int(count)
        return self.min_count() if self.full else 0

    def lower_bound(self, key: int) -> int:
        count, error = lookup(self._bank.state, self._row, _key_scalar(key))
        return int(count - error) if count >= 0 else 0

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Copies of (keys as uint64, counts, errors) for the monitored counters."""
        row, k, n = self._row_state, self.capacity, len(self)
        keys = _key_out(row[_HEADER:_HEADER + n])
        counts = row[_HEADER + k:_HEADER + k + n].copy()
        errors = row[_HEADER + 2 * k:_HEADER + 2 * k + n].copy()
        return keys, counts, errors

    def entries(self) -> dict[int, tuple[int, int]]:
        keys, counts, errors = self.arrays()
        return {int(key): (int(c), int(e)) for key, c, e in zip(keys, counts, errors)}

    def check_invariants(self) -> None:
        """Walk the bucket list and hash index; raise AssertionError on corruption."""
        row, k, n = self._row_state, self.capacity, len(self)
        counts = row[_HEADER + k:]
        errors = row[_HEADER + 2 * k:]
        cnext = row[_HEADER + 3 * k:]
        cbucket = row[_HEADER + 5 * k:]
        bval = row[_HEADER + 6 * k:]
        bhead = row[_HEADER + 7 * k + 1:]
        bnext = row[_HEADER + 9 * k + 3:]
        slots = row[_HEADER + 12 * k + 6:_HEADER + 12 * k + 6 + row[_M]]
        seen = 0
        b = row[_MINB]
        prev_value = 0
        while b != -1:
            value = bval[b]
            assert value > prev_value, "bucket values must strictly increase"
            prev_value = value
            c = bhead[b]
            assert c != -1, "empty bucket left in list"
            while c != -1:
                assert counts[c] == value and cbucket[c] == b
                assert 0 <= errors[c] <= counts[c]
                seen += 1
                c = cnext[c]
            b = bnext[b]
        assert seen == n, f"bucket list holds {seen} counters, size is {n}"
        keys, _, _ = self.arrays()
        for key in keys:
            assert int(key) in self, "counter missing from hash index"
        assert int(np.count_nonzero(slots >= 0)) == n
