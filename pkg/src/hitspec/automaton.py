"""Exact sampling of pattern first-passage times without generating the stream.

The pattern automaton (matched-prefix length ``s``) driven by a Markov source
with context ``c`` is a finite Markov chain on pairs ``(s, c)``; the time at
which ``s`` first reaches ``n`` is a phase-type random variable.  Its
distribution function is evaluated at dyadic times from repeated squaring of
the transient block ``Q`` and a time is drawn by inverse-CDF descent, which
costs ``O(log T)`` matrix-vector products instead of ``O(T)`` symbols.  This
makes hitting times of order ``exp(60)`` reachable.

Numerics
--------
A floating-point stochastic matrix has spectral radius ``1 +- eps``, which
after ``2**j`` squarings swamps absorption rates far below ``eps``.  The
absorbed mass ``D`` and the surviving mass ``S`` are therefore propagated
separately (both as sums of non-negative terms, free of cancellation) and
every squared block is rescaled so that its row sums equal the survival
probabilities: ``1 - D`` while ``D`` is small, ``S`` otherwise.
"""

from __future__ import annotations

import numpy as np

from .sources import MarkovSpec, SourceSpec
from .symbolic import Pattern

_MAX_LEVELS = 600
_SURVIVAL_FLOOR = 1e-30


def _model(spec) -> MarkovSpec:
    m = spec.model if isinstance(spec, SourceSpec) else spec
    if not isinstance(m, MarkovSpec):
        raise TypeError("exact first-passage sampling needs a Markov source")
    return m


def _rescale(M, vec_d, vec_s):
    """Rows (or the vector) of ``M`` rescaled to the combined survival target."""
    target = np.where(vec_d < 0.5, 1.0 - vec_d, vec_s)
    have = M.sum(axis=-1)
    scale = np.divide(target, have, out=np.zeros_like(have), where=have > 0)
    return M * (scale[..., None] if M.ndim == 2 else scale), target


class FirstPassage:
    """Law of the number of symbols read until the automaton accepts.

    Parameters
    ----------
    spec : MarkovSpec or SourceSpec
        Source driving the automaton.
    pattern : Pattern or word
        Target word ``a_1 .. a_n``.

    Notes
    -----
    States are indexed ``s * C + c`` for prefix length ``s < n`` and context
    ``c`` (``C = |A|**k``).  Dyadic powers are built lazily and cached, so one
    instance can serve many draws for the same pattern.
    """

    def __init__(self, spec, pattern):
        m = _model(spec)
        self.spec = m
        self.pattern = pattern if isinstance(pattern, Pattern) else Pattern(pattern)
        n, A, C = len(self.pattern), m.alphabet, m.n_contexts
        if np.any(self.pattern.word >= A):
            raise ValueError("pattern uses symbols outside the alphabet")
        delta = self.pattern.automaton
        self.n_states = n * C
        self._next_ctx = (np.arange(C)[:, None] * A + np.arange(A)[None, :]) % C
        Q = np.zeros((self.n_states, self.n_states))
        D = np.zeros(self.n_states)
        for s in range(n):
            for c in range(C):
                i = s * C + c
                for a in range(A):
                    s2, c2, p = delta[s, a], self._next_ctx[c, a], m.kernel[c, a]
                    if s2 == n:
                        D[i] += p
                    else:
                        Q[i, s2 * C + c2] += p
        self._Q = [Q]
        self._D = [D]
        self._S = [Q.sum(axis=1)]

    # -- dyadic powers -------------------------------------------------
    def _level(self, j: int):
        while len(self._Q) <= j:
            Q, D, S = self._Q[-1], self._D[-1], self._S[-1]
            D2 = D + Q @ D
            S2 = Q @ S
            Q2, target = _rescale(Q @ Q, D2, S2)
            self._Q.append(Q2)
            self._D.append(np.minimum(D2, 1.0))
            self._S.append(target)
        return self._Q[j], self._D[j]

    def _levels_needed(self) -> int:
        top = getattr(self, "_top", None)
        if top is not None:
            return top
        j = 0
        while self._level(j) and self._S[j].max() > _SURVIVAL_FLOOR:
            j += 1
            if j >= _MAX_LEVELS:
                raise ArithmeticError("first-passage time beyond representable range")
        self._top = j
        return j

    # -- distribution --------------------------------------------------
    def start_vector(self, state: int, context: int = 0) -> np.ndarray:
        v = np.zeros(self.n_states)
        v[state * self.spec.n_contexts + context] = 1.0
        return v

    def survival(self, v: np.ndarray, t: int) -> float:
        """``P(T > t)`` from the initial law ``v`` (``t`` a non-negative integer)."""
        v = np.asarray(v, dtype=float)
        absorbed = 0.0
        j = 0
        while t:
            if t & 1:
                Q, D = self._level(j)
                absorbed += float(v @ D)
                v, _ = _rescale(v @ Q, np.array(absorbed), np.array(v @ self._S[j]))
            t >>= 1
            j += 1
        return float(v.sum())

    def sample(self, rng: np.random.Generator, v: np.ndarray) -> int:
        """Draw ``T >= 1``, the number of further symbols read until acceptance.

        ``v`` is the law of the current transient state (a probability
        vector).  Returns a Python ``int`` (values may exceed ``2**63``).
        """
        u = rng.random()
        top = self._levels_needed()
        v = np.asarray(v, dtype=float)
        absorbed = 0.0
        t = 0
        for j in range(top, -1, -1):
            Q, D = self._level(j)
            a2 = absorbed + float(v @ D)
            if a2 < u:
                s2 = float(v @ self._S[j])
                v, _ = _rescale(v @ Q, np.array(a2), np.array(s2))
                absorbed = a2
                t += 1 << j
        return t + 1


def _symbol(rng: np.random.Generator, probs: np.ndarray) -> int:
    return int(min(np.searchsorted(np.cumsum(probs), rng.random(), side="right"), probs.shape[0] - 1))


def _head(m: MarkovSpec, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` symbols of a stationary stream (its initial context)."""
    k, A = m.order, m.alphabet
    c = _symbol(rng, m.stationary)
    return np.array([(c // A ** (k - 1 - i)) % A for i in range(k)], dtype=np.int64)


def exact_hitting_time(spec, pattern, rng: np.random.Generator, law: FirstPassage | None = None) -> int:
    """Draw ``w`` (1-based start of the first occurrence) in a fresh stationary stream."""
    m = _model(spec)
    law = law or FirstPassage(m, pattern)
    pat = law.pattern
    n = len(pat)
    delta = pat.automaton
    head = _head(m, rng)
    s = 0
    for i, a in enumerate(head):
        s = int(delta[s, a])
        if s == n:
            return i + 1 - n + 1
    c = m.context_index(head)
    T = law.sample(rng, law.start_vector(s, c))
    return head.shape[0] + T - n + 1


def _step_law(law: FirstPassage, state: int, context: int):
    """One symbol from ``(state, context)``: absorbed mass and the transient law."""
    m = law.spec
    n, C = len(law.pattern), m.n_contexts
    delta = law.pattern.automaton
    v = np.zeros(law.n_states)
    absorbed = 0.0
    for a in range(m.alphabet):
        p = m.kernel[context, a]
        s2, c2 = int(delta[state, a]), int(law._next_ctx[context, a])
        if s2 == n:
            absorbed += p
        else:
            v[s2 * C + c2] += p
    return absorbed, v


def exact_return_time(spec, word, rng: np.random.Generator, law: FirstPassage | None = None) -> int:
    """Draw ``r`` (``k >= 2`` scale) for a stream that starts with ``word``."""
    m = _model(spec)
    law = law or FirstPassage(m, word)
    n = len(law.pattern)
    c = m.context_index(law.pattern.word[n - m.order:]) if m.order else 0
    absorbed, v = _step_law(law, n, c)
    if rng.random() < absorbed:
        return 2
    v = v / v.sum()
    return law.sample(rng, v) + 2


class BlockChain:
    """Law of the non-overlapping return index of ``word``.

    Consecutive ``n``-blocks are driven by the context chain; ``Q[c, c']`` is
    the probability that a block started in context ``c`` differs from the
    word and ends in context ``c'``.
    """

    def __init__(self, spec, word):
        m = _model(spec)
        self.spec = m
        self.word = word.word if isinstance(word, Pattern) else Pattern(word).word
        n, A, C, k = len(self.word), m.alphabet, m.n_contexts, m.order
        # block transition law: P[c, c'] over all blocks, hit[c] for the word itself
        P = np.eye(C)
        step = m.context_matrix()
        for _ in range(n):
            P = P @ step
        hit = np.zeros(C)
        logk = np.log(m.kernel)
        for c in range(C):
            cc, lp = c, 0.0
            for a in self.word:
                lp += logk[cc, a]
                cc = (cc * A + int(a)) % C
            hit[c] = np.exp(lp)
        end = m.context_index(self.word[n - k:]) if k else 0
        P[:, end] -= hit
        self.P = np.maximum(P, 0.0)
        self.hit = hit
        self.end_context = end

    def sample(self, rng: np.random.Generator) -> int:
        """Draw ``r_hat >= 1`` for a stream whose first block is ``word``."""
        if self.spec.n_contexts == 1:
            p = float(self.hit[0])
            return int(rng.geometric(p)) if p > 1e-300 else np.iinfo(np.int64).max
        law = getattr(self, "_law", None)
        if law is None:
            law = FirstPassage.__new__(FirstPassage)
            law.spec = self.spec
            law.n_states = self.spec.n_contexts
            law._Q, law._D, law._S = [self.P], [self.hit.copy()], [self.P.sum(axis=1)]
            self._law = law
        v = np.zeros(law.n_states)
        v[self.end_context] = 1.0
        return law.sample(rng, v)


class CoupledHitting:
    """Hitting times ``w_n(x, y)`` of one pair ``(x, y)`` for increasing ``n``.

    Monotone in ``n`` by construction: if the symbol following the current
    occurrence of ``x_1^n`` equals ``x_{n+1}`` the occurrence extends,
    otherwise scanning resumes from the automaton state reached on
    ``x_1^n`` followed by that symbol.
    """

    def __init__(self, spec, rng_x: np.random.Generator, rng_y: np.random.Generator, n0: int = 1):
        m = _model(spec)
        if n0 < max(1, m.order):
            raise ValueError("starting length must be at least the Markov order")
        self.spec = m
        self._rx, self._ry = rng_x, rng_y
        head = _head(m, rng_x)
        x = list(int(a) for a in head)
        while len(x) < n0:
            c = m.context_index(x[len(x) - m.order:]) if m.order else 0
            x.append(_symbol(rng_x, m.kernel[c]))
        self.x = x[:max(n0, len(x))]
        self.n = len(self.x)
        self.w = exact_hitting_time(m, np.array(self.x), rng_y)

    def step(self) -> int:
        """Advance to ``n + 1`` and return ``w_{n+1}``."""
        m = self.spec
        k = m.order
        cx = m.context_index(self.x[self.n - k:]) if k else 0
        nxt = _symbol(self._rx, m.kernel[cx])
        # the window y_w .. y_{w+n-1} spells x_1^n, so y's context equals x's
        b = _symbol(self._ry, m.kernel[cx])
        self.x.append(nxt)
        self.n += 1
        if b != nxt:
            law = FirstPassage(m, np.array(self.x))
            delta = law.pattern.automaton
            state = int(delta[self.n - 1, b])
            c = m.context_index((self.x[:self.n - 1] + [b])[self.n - k:]) if k else 0
            self.w = self.w + law.sample(self._ry, law.start_vector(state, c))
        return self.w


__all__ = [
    "BlockChain", "CoupledHitting", "FirstPassage",
    "exact_hitting_time", "exact_return_time",
]
