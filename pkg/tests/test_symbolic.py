import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitspec.symbolic import (Censored, Pattern, StreamCursor, as_symbols, hitting_time, is_censored, min_period,
                              naive_scan_all, non_overlapping_return_time, return_time, scan_all)


def cur(s, budget=None):
    return StreamCursor.from_sequence(s, budget)


# -- examples --------------------------------------------------------------

@pytest.mark.parametrize("pattern, stream, expected", [
    ("ab", "ccab", 3),
    ("a", "a", 1),
    ("aba", "ababa", 1),
    ("bab", "ababa", 2),
])
def test_hitting_time_examples(pattern, stream, expected):
    assert hitting_time(pattern, cur(stream)) == expected


def test_hitting_time_consumes_exactly_to_match_end():
    c = cur("ccabzz")
    assert hitting_time("ab", c) == 3
    assert c.position == 4


@pytest.mark.parametrize("stream, n, expected", [("aaaa", 2, 2), ("abab", 2, 3), ("abcabc", 3, 4)])
def test_return_time_examples(stream, n, expected):
    assert return_time(cur(stream), n) == expected


@pytest.mark.parametrize("stream, n, expected", [("abab", 2, 1), ("abbaab", 2, 2), ("aaaa", 2, 1)])
def test_non_overlapping_return_time_examples(stream, n, expected):
    assert non_overlapping_return_time(cur(stream), n) == expected


@pytest.mark.parametrize("word, p", [("aaa", 1), ("aba", 2), ("abc", 3), ("abab", 2), ("aabaa", 3)])
def test_min_period_examples(word, p):
    assert min_period(word) == p
    assert Pattern(word).min_period == p


@pytest.mark.parametrize("pattern, stream, expected", [("ab", "ababab", [1, 3, 5]), ("aa", "aaaa", [1, 2, 3]),
                                                       ("abc", "ab", [])])
def test_scan_all_examples(pattern, stream, expected):
    assert scan_all(pattern, cur(stream)) == expected


def test_errors():
    with pytest.raises(ValueError):
        Pattern("")
    with pytest.raises(ValueError):
        return_time(cur("abc"), 2)
    with pytest.raises(ValueError):
        non_overlapping_return_time(cur("abc"), 2)
    with pytest.raises(ValueError):
        hitting_time("abcd", cur("abc"))


def test_censoring_bounds():
    w = hitting_time("11", cur("0000000"))
    assert is_censored(w) and w.budget == 7 and w.bound == 7 - 2 + 2
    r = return_time(cur("011111"), 2)
    assert is_censored(r) and r.bound == 6
    rh = non_overlapping_return_time(cur("0111111"), 2)
    assert rh == Censored(7, 3)


def test_censored_bound_is_certified():
    # a match right after the budget sits exactly at the bound
    s = "0000011"
    w = hitting_time("11", cur(s, budget=6))
    assert is_censored(w)
    assert hitting_time("11", cur(s)) == w.bound


def test_symbol_conversion():
    assert as_symbols("0121").tolist() == [0, 1, 2, 1]
    assert as_symbols("acb").tolist() == [0, 2, 1]
    assert as_symbols("ab ba").tolist() == [0, 1, 1, 0]


def test_cursor_budget_and_chunk_independence():
    data = np.random.default_rng(0).integers(0, 3, 5000).astype(np.uint8)
    c = cur(data, 4000)
    parts = [c.take(k) for k in (1, 7, 1000, 3000)]
    got = np.concatenate(parts)
    assert c.position == c.budget == 4000
    assert np.array_equal(got, data[:4000])
    with pytest.raises(EOFError):
        c.pull()


def test_large_alphabet_and_unseen_symbols():
    # symbols above the pattern's alphabet fall into the "other" column
    assert hitting_time([0, 1], cur([5, 7, 0, 0, 1, 9])) == 4
    assert scan_all([2], cur([2, 9, 2, 200])) == [1, 3]


# -- exhaustive oracle equivalence ------------------------------------------

def _all_words(max_len, A=2):
    for n in range(1, max_len + 1):
        yield from itertools.product(range(A), repeat=n)


def test_exhaustive_oracle_equivalence():
    """All patterns of length <= 4 against all binary streams of length <= 12."""
    patterns = list(_all_words(4))
    for B in range(0, 13):
        for stream in itertools.product((0, 1), repeat=B):
            s = np.array(stream, dtype=np.uint8)
            for p in patterns:
                want = naive_scan_all(p, s)
                assert scan_all(p, cur(s)) == want
                if B >= len(p):
                    w = hitting_time(p, cur(s))
                    if want:
                        assert w == want[0]
                    else:
                        # censoring soundness: the oracle finds nothing either
                        assert is_censored(w)


# -- properties -------------------------------------------------------------

streams = st.lists(st.integers(0, 2), min_size=2, max_size=200)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=6), streams)
def test_scan_all_matches_oracle(p, s):
    assert scan_all(p, cur(s)) == naive_scan_all(p, s)


@settings(max_examples=300, deadline=None)
@given(streams, st.integers(1, 6))
def test_return_time_definition(s, n):
    if len(s) < 2 * n:
        return
    r = return_time(cur(s), n)
    x = s[:n]
    hits = [k for k in range(2, len(s) - n + 2) if s[k - 1:k - 1 + n] == x]
    if hits:
        assert r == hits[0]
        # the first re-occurrence offset is at least the minimal period
        assert r - 1 >= min_period(x)
    else:
        assert is_censored(r)


@settings(max_examples=300, deadline=None)
@given(streams, st.integers(1, 6))
def test_return_time_equals_shifted_hitting_time(s, n):
    """w of the prefix scanned from position 2 equals r - 1 (offset convention)."""
    if len(s) < 2 * n:
        return
    r = return_time(cur(s), n)
    w = hitting_time(s[:n], cur(s[1:]))
    if is_censored(r):
        assert is_censored(w)
    else:
        assert w == r - 1


@settings(max_examples=300, deadline=None)
@given(streams, st.integers(1, 6))
def test_non_overlapping_definition(s, n):
    if len(s) < 2 * n:
        return
    rh = non_overlapping_return_time(cur(s), n)
    blocks = [s[k * n:(k + 1) * n] for k in range(len(s) // n)]
    hits = [k for k in range(1, len(blocks)) if blocks[k] == blocks[0]]
    if hits:
        assert rh == hits[0]
    else:
        assert is_censored(rh) and rh.bound == len(s) // n


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=12, max_size=300), st.lists(st.integers(0, 1), min_size=6, max_size=6))
def test_prefix_monotonicity(y, x):
    """Extending the pattern never makes it appear earlier; censoring is inherited."""
    prev, was_censored = 0, False
    for n in range(1, 7):
        w = hitting_time(x[:n], cur(y))
        if was_censored:
            assert is_censored(w)
        if not is_censored(w):
            assert w >= prev
            prev = w
        was_censored = is_censored(w)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=12))
def test_min_period_definition(w):
    n = len(w)
    p = min_period(w)
    assert 1 <= p <= n
    assert all(w[i + p] == w[i] for i in range(n - p))
    assert not any(all(w[i + k] == w[i] for i in range(n - k)) for k in range(1, p))
