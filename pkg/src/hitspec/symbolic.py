"""Symbol streams, patterns and the three recurrence-time scanners.

Positions are 1-based throughout: ``hitting_time`` returns the smallest
``j >= 1`` such that the stream symbols ``j .. j + n - 1`` spell the pattern,
counted from the first unread symbol of the cursor.  ``return_time`` reports
``k >= 2`` on the same scale (``k = 2`` is a re-occurrence one step later).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import _kernels

SYMBOL_DTYPE = np.uint8

_MIN_BLOCK = 1024
_MAX_BLOCK = 1 << 20


def as_symbols(word) -> np.ndarray:
    """Convert a word to a symbol array.

    Strings of digits map ``'0' -> 0``, other strings map ``'a' -> 0``,
    ``'b' -> 1`` and so on.  Whitespace is ignored.
    """
    if isinstance(word, np.ndarray):
        return word.astype(SYMBOL_DTYPE, copy=False)
    if isinstance(word, str):
        chars = [c for c in word if not c.isspace()]
        if all(c.isdigit() for c in chars):
            return np.array([int(c) for c in chars], dtype=SYMBOL_DTYPE)
        return np.array([ord(c) - ord("a") for c in chars], dtype=SYMBOL_DTYPE)
    return np.asarray(list(word), dtype=SYMBOL_DTYPE)


@dataclass(frozen=True)
class Censored:
    """Scan exhausted its budget without a match.

    ``bound`` is the smallest value the true (uncensored) time could take.
    """

    budget: int
    bound: int

    def __int__(self):
        return self.bound


ScanResult = Union[int, Censored]


def is_censored(value) -> bool:
    return isinstance(value, Censored)


class Pattern:
    """A finite word ``a_1 .. a_n`` with its border table."""

    __slots__ = ("word", "_pi", "_dfa")

    def __init__(self, word):
        w = as_symbols(word)
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValueError("pattern must be a non-empty 1-d word")
        self.word = np.ascontiguousarray(w)
        self.word.setflags(write=False)
        self._pi = None
        self._dfa = None

    def __len__(self):
        return self.word.shape[0]

    def __repr__(self):
        return f"Pattern({''.join(str(int(a)) for a in self.word)!r})"

    def __eq__(self, other):
        return isinstance(other, Pattern) and np.array_equal(self.word, other.word)

    def __hash__(self):
        return hash(self.word.tobytes())

    @property
    def borders(self) -> np.ndarray:
        if self._pi is None:
            self._pi = _kernels.prefix_function(self.word)
        return self._pi

    @property
    def automaton(self) -> np.ndarray:
        """Transition table ``delta[state, symbol]`` of the matching automaton."""
        if self._dfa is None:
            delta = _kernels.build_dfa(self.word, self.borders)
            self._dfa = (delta, _kernels.flatten_dfa(delta))
        return self._dfa[0]

    def _flat(self):
        self.automaton
        return self._dfa[1], self._dfa[0].shape[1]

    @property
    def min_period(self) -> int:
        return min_period(self)

    def prefix(self, n: int) -> "Pattern":
        return Pattern(self.word[:n])


def _as_pattern(pattern) -> Pattern:
    return pattern if isinstance(pattern, Pattern) else Pattern(pattern)


class StreamCursor:
    """Pull-based symbol producer with a hard budget.

    Parameters
    ----------
    producer : callable
        ``producer(size)`` returns the next ``size`` symbols.  Successive calls
        must concatenate to the same stream whatever the sizes requested.
    budget : int
        Maximum number of symbols that may ever be consumed.
    """

    def __init__(self, producer: Callable[[int], np.ndarray], budget: int):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self._producer = producer
        self.budget = int(budget)
        self.position = 0
        self._generated = 0
        self._buf = np.empty(0, dtype=SYMBOL_DTYPE)
        self._off = 0

    @classmethod
    def from_sequence(cls, seq, budget: int | None = None) -> "StreamCursor":
        data = as_symbols(seq)
        if budget is None:
            budget = data.shape[0]
        if budget > data.shape[0]:
            raise ValueError("budget exceeds the length of the supplied sequence")
        state = {"i": 0}

        def produce(size):
            i = state["i"]
            state["i"] = i + size
            return data[i:i + size]

        return cls(produce, budget)

    @property
    def remaining(self) -> int:
        return self.budget - self.position

    def peek(self, max_len: int) -> np.ndarray:
        """Upcoming symbols (at most ``max_len``) without consuming them."""
        want = min(int(max_len), self.remaining)
        have = self._buf.shape[0] - self._off
        if have < want:
            need = min(want - have, self.budget - self._generated)
            fresh = np.asarray(self._producer(need), dtype=SYMBOL_DTYPE)
            self._generated += fresh.shape[0]
            self._buf = np.concatenate((self._buf[self._off:], fresh))
            self._off = 0
        return self._buf[self._off:self._off + want]

    def advance(self, k: int) -> None:
        if k > self._buf.shape[0] - self._off:
            raise ValueError("cannot advance past peeked symbols")
        self._off += k
        self.position += k

    def take(self, k: int) -> np.ndarray:
        out = self.peek(k).copy()
        self.advance(out.shape[0])
        return out

    def pull(self) -> int:
        if self.remaining <= 0:
            raise EOFError("stream budget exhausted")
        return int(self.take(1)[0])

    def blocks(self, first: int = _MIN_BLOCK) -> Iterable[np.ndarray]:
        """Yield peeked blocks of doubling size; caller must ``advance``."""
        size = first
        while self.remaining > 0:
            yield self.peek(size)
            size = min(size * 2, _MAX_BLOCK)


def _scan(pattern: Pattern, stream: StreamCursor, state: int, max_matches: int):
    """Feed the stream until ``max_matches`` matches are seen or the budget ends.

    Returns ``(end_positions, state)`` with 1-based end positions relative to
    the cursor position at entry.
    """
    start = stream.position
    table, width = pattern._flat()
    state *= width
    ends: list[np.ndarray] = []
    found_total = 0
    buf = np.empty(_MAX_BLOCK, dtype=np.int64)
    for block in stream.blocks(max(_MIN_BLOCK, 4 * len(pattern))):
        base = stream.position - start
        limit = min(max_matches - found_total, buf.shape[0]) if max_matches > 0 else buf.shape[0]
        state, found, consumed = _kernels.feed(block, table, width, state, buf, limit)
        if found:
            ends.append(buf[:found] + base + 1)
            found_total += found
        stream.advance(consumed)
        if max_matches > 0 and found_total >= max_matches:
            break
    out = np.concatenate(ends) if ends else np.empty(0, dtype=np.int64)
    return out, state // width


def hitting_time(pattern, stream: StreamCursor) -> ScanResult:
    """First ``j >= 1`` with ``stream[j .. j+n-1] == pattern``.

    Consumes exactly ``j + n - 1`` symbols on success.
    """
    pattern = _as_pattern(pattern)
    n = len(pattern)
    budget = stream.remaining
    if budget < n:
        raise ValueError("stream budget smaller than the pattern length")
    ends, _ = _scan(pattern, stream, 0, 1)
    if ends.shape[0] == 0:
        return Censored(budget, budget - n + 2)
    return int(ends[0]) - n + 1


def return_time(stream: StreamCursor, n: int) -> ScanResult:
    """Smallest ``k >= 2`` with ``x[k .. k+n-1] == x[1 .. n]``."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    budget = stream.remaining
    if budget < 2 * n:
        raise ValueError("return_time needs a budget of at least 2n")
    pattern = Pattern(stream.take(n))
    ends, _ = _scan(pattern, stream, n, 1)
    if ends.shape[0] == 0:
        return Censored(budget, budget - n + 2)
    return int(ends[0]) + 1


def non_overlapping_return_time(stream: StreamCursor, n: int) -> ScanResult:
    """Smallest block index ``k >= 1`` whose ``n``-block equals block 0."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    budget = stream.remaining
    if budget < 2 * n:
        raise ValueError("non_overlapping_return_time needs a budget of at least 2n")
    head = stream.take(n)
    k = 0
    n_blocks = max(1, _MIN_BLOCK // n)
    while stream.remaining >= n:
        n_blocks = min(n_blocks, stream.remaining // n)
        chunk = stream.peek(n_blocks * n)
        hits = np.flatnonzero((chunk.reshape(n_blocks, n) == head).all(axis=1))
        if hits.shape[0]:
            stream.advance((int(hits[0]) + 1) * n)
            return k + int(hits[0]) + 1
        stream.advance(n_blocks * n)
        k += n_blocks
        n_blocks = min(2 * n_blocks, max(1, _MAX_BLOCK // n))
    return Censored(budget, budget // n)


def min_period(pattern) -> int:
    """Smallest shift ``p >= 1`` under which the word overlaps itself (``n`` if none)."""
    pattern = _as_pattern(pattern)
    n = len(pattern)
    return n - int(pattern.borders[n - 1])


def scan_all(pattern, stream: StreamCursor) -> list[int]:
    """All (overlapping) match start positions within the remaining budget."""
    pattern = _as_pattern(pattern)
    ends, _ = _scan(pattern, stream, 0, 0)
    return [int(e) - len(pattern) + 1 for e in ends]


def naive_scan_all(pattern: Sequence[int], text: Sequence[int]) -> list[int]:
    """Direct re-comparison oracle for :func:`scan_all` (1-based starts)."""
    p = list(as_symbols(pattern))
    t = list(as_symbols(text))
    n = len(p)
    return [j + 1 for j in range(len(t) - n + 1) if t[j:j + n] == p]
