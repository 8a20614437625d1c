"""Compiled inner loops: prefix-function scanning and symbol emission."""

import numpy as np
from numba import njit


@njit(cache=True)
def prefix_function(pattern):
    """Border lengths: ``pi[i]`` is the longest proper border of ``pattern[:i + 1]``."""
    n = pattern.shape[0]
    pi = np.zeros(n, dtype=np.int64)
    k = 0
    for i in range(1, n):
        while k > 0 and pattern[k] != pattern[i]:
            k = pi[k - 1]
        if pattern[k] == pattern[i]:
            k += 1
        pi[i] = k
    return pi


@njit(cache=True)
def build_dfa(pattern, pi):
    """Matching automaton from the prefix function.

    Row ``s`` holds the successor of state ``s`` (matched prefix length) for
    every symbol value below ``width``; the last column stands for all larger
    symbols.  State ``n`` is the accepting state.
    """
    n = pattern.shape[0]
    width = 2
    for i in range(n):
        if pattern[i] + 2 > width:
            width = pattern[i] + 2
    delta = np.zeros((n + 1, width), dtype=np.int32)
    delta[0, pattern[0]] = 1
    for s in range(1, n + 1):
        back = pi[s - 1]
        for a in range(width):
            if s < n and a == pattern[s]:
                delta[s, a] = s + 1
            else:
                delta[s, a] = delta[back, a]
    return delta


@njit(cache=True)
def flatten_dfa(delta):
    """Row-major table whose entries are premultiplied row offsets."""
    n1, width = delta.shape
    flat = np.empty(n1 * width, dtype=np.int32)
    for s in range(n1):
        for a in range(width):
            flat[s * width + a] = delta[s, a] * width
    return flat


@njit(cache=True)
def feed(chunk, table, width, state, matches, max_matches):
    """Advance the automaton over ``chunk``.

    ``state`` is a row offset (``prefix_length * width``) into ``table``.
    Match end offsets (0-based, into ``chunk``) are written to ``matches``;
    scanning stops right after the ``max_matches``-th match.
    Returns ``(state, n_found, n_consumed)``.
    """
    accept = table.shape[0] - width
    top = width - 1
    found = 0
    m = chunk.shape[0]
    for i in range(m):
        c = chunk[i]
        if c > top:
            c = top
        state = table[state + c]
        if state == accept:
            matches[found] = i
            found += 1
            if found == max_matches:
                return state, found, i + 1
    return state, found, m


@njit(cache=True)
def emit_iid(draws, thresholds, out):
    """Independent symbols from 32-bit draws and cumulative ``2**32``-scaled thresholds."""
    A1 = thresholds.shape[0]
    for i in range(draws.shape[0]):
        u = np.uint64(draws[i])
        a = 0
        for j in range(A1):
            a += np.uint8(u >= thresholds[j])
        out[i] = a


@njit(cache=True)
def emit_markov(draws, thresholds, next_context, context, out):
    """Kernel-driven emission, one 32-bit draw per symbol.

    ``thresholds[c, j]`` is ``P(symbol <= j | c)`` scaled to ``2**32``;
    ``next_context[c, a]`` is the context after emitting ``a`` from ``c``.
    Returns the final context.
    """
    A1 = thresholds.shape[1]
    for i in range(draws.shape[0]):
        u = np.uint64(draws[i])
        a = 0
        for j in range(A1):
            a += np.int64(u >= thresholds[context, j])
        out[i] = a
        context = next_context[context, a]
    return context


@njit(cache=True)
def emit_mp(x, alpha, threshold, out):
    """Iterate ``x -> x + x**(1 + alpha) mod 1`` emitting the branch symbol."""
    one_plus = 1.0 + alpha
    for i in range(out.shape[0]):
        if x < threshold:
            out[i] = 0
        else:
            out[i] = 1
        x = x + x ** one_plus
        if x >= 1.0:
            x -= 1.0
        if x <= 0.0:
            # exact landing on the indifferent fixed point; smallest representable landing
            x = 2.0 ** -53
    return x


@njit(cache=True)
def mp_iterate(x, alpha, steps):
    one_plus = 1.0 + alpha
    for _ in range(steps):
        x = x + x ** one_plus
        if x >= 1.0:
            x -= 1.0
        if x <= 0.0:
            x = 2.0 ** -53
    return x


@njit(cache=True)
def run_lengths(symbols, value):
    """Lengths of maximal runs of ``value`` (runs touching either end are kept)."""
    out = np.empty(symbols.shape[0], dtype=np.int64)
    k = 0
    run = 0
    for i in range(symbols.shape[0]):
        if symbols[i] == value:
            run += 1
        elif run > 0:
            out[k] = run
            k += 1
            run = 0
    if run > 0:
        out[k] = run
        k += 1
    return out[:k]


@njit(cache=True)
def time_to_symbol(symbols, value):
    """``tau[i] = min{j >= 1: symbols[i + j - 1] == value}`` (1-based, as hitting times).

    Positions after the last occurrence have no finite value and are cut off.
    """
    m = symbols.shape[0]
    last = m - 1
    while last >= 0 and symbols[last] != value:
        last -= 1
    out = np.empty(last + 1, dtype=np.int64)
    nxt = last
    for i in range(last, -1, -1):
        if symbols[i] == value:
            nxt = i
        out[i] = nxt - i + 1
    return out
