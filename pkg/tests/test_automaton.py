import numpy as np
import pytest
from scipy import stats

from hitspec.automaton import BlockChain, CoupledHitting, FirstPassage, exact_hitting_time, exact_return_time
from hitspec.sources import MarkovSpec, SourceSpec, sample_stream, stream_rng
from hitspec.symbolic import Pattern, hitting_time, is_censored, non_overlapping_return_time, return_time

B73 = MarkovSpec.bernoulli([0.7, 0.3])
M1 = MarkovSpec(np.array([[0.9, 0.1], [0.2, 0.8]]), order=1)
M2 = MarkovSpec(np.random.default_rng(5).dirichlet([2, 2, 2], 9), order=2)


def dp_survival(m, word, t_max):
    """P(no match in the first t symbols after the initial context) by forward recursion."""
    pat = Pattern(word)
    n, delta = len(pat), pat.automaton
    A, C = m.alphabet, m.n_contexts
    v = np.zeros((n, C))
    v[0] = m.stationary
    out = [v.sum()]
    for _ in range(t_max):
        nv = np.zeros_like(v)
        for s in range(n):
            for c in range(C):
                for a in range(A):
                    s2 = delta[s, a]
                    if s2 < n:
                        nv[s2, (c * A + a) % C] += v[s, c] * m.kernel[c, a]
        v = nv
        out.append(v.sum())
    return np.array(out)


@pytest.mark.parametrize("m, word", [(B73, "0101"), (B73, "111"), (M1, "0110"), (M1, "00000"), (M2, "2012")])
def test_survival_matches_dp(m, word):
    law = FirstPassage(m, word)
    v0 = sum(m.stationary[c] * law.start_vector(0, c) for c in range(m.n_contexts))
    ref = dp_survival(m, word, 70)
    for t in (0, 1, 2, 3, 7, 16, 33, 64, 70):
        assert law.survival(v0, t) == pytest.approx(ref[t], rel=1e-10, abs=1e-14)


def test_survival_tail_far_beyond_float_resolution():
    """Absorption rate ~ 2**-40 is still resolved after 2**45 steps."""
    m = MarkovSpec.bernoulli([0.5, 0.5])
    law = FirstPassage(m, "0" * 39 + "1")
    s = law.survival(law.start_vector(0), 2**45)
    assert s == pytest.approx(np.exp(-2**45 / 2**40), rel=1e-3)


def _scan_times(m, word, N, kind):
    spec = SourceSpec(m, 99)
    out = []
    for i in range(N):
        if kind == "w":
            t = hitting_time(word, sample_stream(spec, (7, i), 10**6))
        else:
            head = None
            # condition on the stream starting with the word: rejection sampling
            j = 0
            while True:
                cur = sample_stream(spec, (8, i, j), 10**6)
                j += 1
                if np.array_equal(cur.peek(len(word)), Pattern(word).word):
                    break
            t = return_time(cur, len(word)) if kind == "r" else non_overlapping_return_time(cur, len(word))
        assert not is_censored(t)
        out.append(t)
    return np.array(out, dtype=float)


@pytest.mark.parametrize("m, word", [(B73, "0110"), (M1, "0101"), (M2, "021")])
def test_exact_hitting_matches_scan(m, word):
    N = 1500
    scan = _scan_times(m, word, N, "w")
    law = FirstPassage(m, word)
    rng = stream_rng(1, 0)
    exact = np.array([exact_hitting_time(m, word, rng, law) for _ in range(N)], dtype=float)
    assert exact.min() >= 1
    assert stats.ks_2samp(scan, exact).pvalue > 1e-3


@pytest.mark.parametrize("m, word", [(B73, "010"), (M1, "0110")])
def test_exact_return_matches_scan(m, word):
    N = 1000
    scan = _scan_times(m, word, N, "r")
    rng = stream_rng(2, 0)
    exact = np.array([exact_return_time(m, word, rng) for _ in range(N)], dtype=float)
    assert exact.min() >= 2
    assert stats.ks_2samp(scan, exact).pvalue > 1e-3


@pytest.mark.parametrize("m, word", [(B73, "01"), (M1, "011"), (M2, "20")])
def test_block_chain_matches_scan(m, word):
    N = 1000
    scan = _scan_times(m, word, N, "r_hat")
    bc = BlockChain(m, word)
    rng = stream_rng(3, 0)
    exact = np.array([bc.sample(rng) for _ in range(N)], dtype=float)
    assert exact.min() >= 1
    assert stats.ks_2samp(scan, exact).pvalue > 1e-3


def test_exact_times_are_python_ints_beyond_int64():
    m = MarkovSpec.bernoulli([0.9, 0.1])
    w = exact_hitting_time(m, "1" * 25, stream_rng(0, 0))
    assert isinstance(w, int) and w > 2**63


@pytest.mark.parametrize("m", [B73, M1])
def test_coupled_hitting_monotone_and_marginal(m):
    n_target, N = 5, 1500
    final = []
    for i in range(N):
        ch = CoupledHitting(m, stream_rng(4, (0, i)), stream_rng(4, (1, i)), n0=max(1, m.order))
        prev = ch.w
        while ch.n < n_target:
            w = ch.step()
            assert w >= prev
            prev = w
        final.append(prev)
    # marginal law of w_5 equals the law of a fresh hitting time of a random 5-word
    rng = stream_rng(5, 0)
    ref = []
    for i in range(N):
        x = sample_stream(SourceSpec(m, 5), (9, i)).take(n_target)
        ref.append(exact_hitting_time(m, x, rng))
    assert stats.ks_2samp(final, ref).pvalue > 1e-3
