"""Gibbsian symbolic sources: finite-order Markov measures and the
Manneville-Pomeau coding.

Contexts of an order-``k`` chain are the last ``k`` symbols, encoded in base
``|A|`` with the oldest symbol most significant.  The normalized potential of
a Markov measure is ``phi(a_1 .. a_{k+1}) = log p(a_1^k -> a_{k+1})``; with it
``log mu([a_1^n]) = log pi(a_1^k) + S_{n-k} phi`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from . import _kernels
from .symbolic import SYMBOL_DTYPE, Pattern, StreamCursor, as_symbols

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-13


class InvalidSpec(ValueError):
    pass


def stationary_distribution(P: np.ndarray, tol: float = STATIONARY_TOL, max_iter: int = 200) -> np.ndarray:
    """Left Perron vector of a row-stochastic matrix.

    Squares the lazy chain ``(P + I)/2`` until its rows agree, which reaches
    machine precision in ``O(log mixing time)`` products; a direct solve is
    the fallback for chains that never mix at that resolution.
    """
    m = P.shape[0]
    if m == 1:
        return np.ones(1)
    L = 0.5 * (P + np.eye(m))
    for _ in range(max_iter):
        L = L @ L
        L /= L.sum(axis=1, keepdims=True)
        if np.ptp(L, axis=0).max() < 1e-16:
            break
    pi = L.mean(axis=0)
    pi /= pi.sum()
    if np.abs(pi @ P - pi).max() < tol:
        return pi
    A = np.vstack([P.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


@dataclass(frozen=True, eq=False)
class MarkovSpec:
    """Stationary order-``k`` Markov measure on ``|A|`` symbols.

    Parameters
    ----------
    kernel : array_like, shape (|A|**k, |A|)
        Row-stochastic transition table ``p(context -> symbol)``.
    order : int
        Markov order ``k``; ``0`` is Bernoulli.
    subshift : bool
        Allow zero transition probabilities (excluded from the
        thermodynamic routines, which assume a full shift).
    """

    kernel: np.ndarray
    order: int = 0
    subshift: bool = False
    stationary: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K = np.array(self.kernel, dtype=float)
        if K.ndim == 1:
            K = K[None, :]
        if K.ndim != 2:
            raise InvalidSpec("kernel must be a 2-d table")
        A = K.shape[1]
        if A < 2:
            raise InvalidSpec("alphabet must have at least two symbols")
        if self.order < 0:
            raise InvalidSpec("order must be >= 0")
        if K.shape[0] != A ** self.order:
            raise InvalidSpec(f"kernel needs {A ** self.order} rows for order {self.order}, got {K.shape[0]}")
        if not np.all(np.isfinite(K)) or np.any(K < 0):
            raise InvalidSpec("kernel entries must be finite and non-negative")
        if np.abs(K.sum(axis=1) - 1.0).max() > ROW_TOL:
            raise InvalidSpec("kernel rows must sum to 1")
        if not self.subshift and np.any(K <= 0):
            raise InvalidSpec("zero transition probability in full-shift mode")
        K.setflags(write=False)
        object.__setattr__(self, "kernel", K)
        pi = stationary_distribution(self.context_matrix())
        pi.setflags(write=False)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def bernoulli(cls, probs) -> "MarkovSpec":
        return cls(np.asarray(probs, dtype=float)[None, :], order=0)

    @property
    def alphabet(self) -> int:
        return self.kernel.shape[1]

    @property
    def n_contexts(self) -> int:
        return self.kernel.shape[0]

    def context_matrix(self) -> np.ndarray:
        """Transition matrix of the context chain (``|A|**k`` square)."""
        A, C = self.alphabet, self.n_contexts
        P = np.zeros((C, C))
        for c in range(C):
            for a in range(A):
                P[c, (c * A + a) % C] += self.kernel[c, a]
        return P

    def context_index(self, symbols) -> int:
        c = 0
        for a in symbols:
            c = c * self.alphabet + int(a)
        return c % self.n_contexts

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.kernel - 1.0 / self.alphabet).max() < tol)

    def realized_constants(self) -> dict:
        """Diagnostics: extreme log-kernel entries and the distortion ``max pi / min pi``."""
        logs = np.log(self.kernel[self.kernel > 0])
        return {
            "min_log_kernel": float(logs.min()),
            "max_log_kernel": float(logs.max()),
            "K": float(self.stationary.max() / self.stationary.min()),
        }

    def to_dict(self) -> dict:
        return {"order": self.order, "kernel": self.kernel.tolist(), "subshift": self.subshift}


@dataclass(frozen=True)
class MPParams:
    """Manneville-Pomeau map ``x -> x + x**(1+alpha) mod 1`` coded by its two branches."""

    alpha: float
    burn_in: int = 1000
    precision: str = "double"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidSpec("alpha must lie in (0, 1)")
        if self.burn_in < 0:
            raise InvalidSpec("burn_in must be >= 0")
        if self.precision != "double":
            raise InvalidSpec("only double-precision iteration is available")

    @property
    def threshold(self) -> float:
        """Left end of the right branch: the root of ``x + x**(1+alpha) = 1``."""
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid + mid ** (1.0 + self.alpha) < 1.0:
                lo = mid
            else:
                hi = mid
        return hi

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "burn_in": self.burn_in, "precision": self.precision}


@dataclass(frozen=True)
class SourceSpec:
    """A source model plus the seed that fixes every stream it emits."""

    model: Union[MarkovSpec, MPParams]
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.model, (MarkovSpec, MPParams)):
            raise InvalidSpec("model must be a MarkovSpec or MPParams")

    @property
    def alphabet(self) -> int:
        return self.model.alphabet if isinstance(self.model, MarkovSpec) else 2

    def to_dict(self) -> dict:
        kind = "markov" if isinstance(self.model, MarkovSpec) else "mp"
        return {"kind": kind, "seed": self.seed, **self.model.to_dict()}


def stream_rng(seed: int, offset) -> np.random.Generator:
    """Independent generator for ``(seed, offset)``; ``offset`` may be a tuple."""
    key = tuple(int(o) for o in offset) if isinstance(offset, (tuple, list)) else (int(offset),)
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence(int(seed), spawn_key=key)))


def sample_stream(spec: SourceSpec, offset=0, budget: int = 10**9) -> StreamCursor:
    """Lazily generated stream from the stationary measure of ``spec``.

    Streams with distinct offsets come from independent generators.
    """
    if not isinstance(spec, SourceSpec):
        raise InvalidSpec("expected a SourceSpec")
    rng = stream_rng(spec.seed, offset)
    if isinstance(spec.model, MarkovSpec):
        return StreamCursor(_markov_producer(spec.model, rng), budget)
    return StreamCursor(_mp_producer(spec.model, rng), budget)


def kernel_thresholds(m: MarkovSpec) -> np.ndarray:
    """Cumulative kernel rows quantized to 32 bits (resolution ``2**-32``)."""
    cum = np.cumsum(m.kernel, axis=1)[:, :-1]
    return np.minimum(np.round(cum * 2.0**32), 2.0**32).astype(np.uint64)


def _draws(rng: np.random.Generator, size: int, spare: list) -> np.ndarray:
    """``size`` uniform 32-bit draws; each raw 64-bit output feeds two symbols."""
    have = spare[0] if spare else np.empty(0, dtype=np.uint32)
    need = size - have.shape[0]
    if need <= 0:
        spare[:] = [have[size:]]
        return have[:size]
    raw = rng.bit_generator.random_raw((need + 1) // 2).view(np.uint32)
    allu = np.concatenate((have, raw))
    spare[:] = [allu[size:]]
    return allu[:size]


def _markov_producer(m: MarkovSpec, rng: np.random.Generator):
    thr = kernel_thresholds(m)
    C, A, k = m.n_contexts, m.alphabet, m.order
    nxt = ((np.arange(C)[:, None] * A + np.arange(A)[None, :]) % C).astype(np.int64)
    c0 = int(np.searchsorted(np.cumsum(m.stationary), rng.random(), side="right"))
    c0 = min(c0, C - 1)
    head = np.array([(c0 // A ** (k - 1 - i)) % A for i in range(k)], dtype=SYMBOL_DTYPE)
    state = {"ctx": c0, "head": head}
    spare: list = []

    def produce(size):
        h = state["head"]
        out = np.empty(size, dtype=SYMBOL_DTYPE)
        lead = min(size, h.shape[0])
        out[:lead] = h[:lead]
        state["head"] = h[lead:]
        if size > lead and k == 0:
            _kernels.emit_iid(_draws(rng, size - lead, spare), thr[0], out[lead:])
        elif size > lead:
            state["ctx"] = _kernels.emit_markov(_draws(rng, size - lead, spare), thr, nxt, state["ctx"], out[lead:])
        return out

    return produce


def _mp_producer(p: MPParams, rng: np.random.Generator):
    x = _kernels.mp_iterate(rng.random(), p.alpha, p.burn_in)
    state = {"x": x}
    thr = p.threshold

    def produce(size):
        out = np.empty(size, dtype=SYMBOL_DTYPE)
        state["x"] = _kernels.emit_mp(state["x"], p.alpha, thr, out)
        return out

    return produce


class CylinderMeasure(NamedTuple):
    log: float
    value: float
    forbidden: bool


def _log_kernel(m: MarkovSpec) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(m.kernel)


def _context_marginal(m: MarkovSpec, n: int) -> np.ndarray:
    """Stationary law of the first ``n <= k`` symbols, flattened in base ``|A|``."""
    A, k = m.alphabet, m.order
    pi = m.stationary.reshape((A,) * k) if k else m.stationary
    return pi.reshape((A,) * k).sum(axis=tuple(range(n, k))).reshape(-1)


def cylinder_measure(spec: MarkovSpec, word) -> CylinderMeasure:
    """Exact ``mu([a_1^n])`` computed in log space."""
    if isinstance(spec, SourceSpec):
        spec = spec.model
    w = word.word if isinstance(word, Pattern) else as_symbols(word)
    n, k = len(w), spec.order
    if n < 1:
        raise ValueError("word must be non-empty")
    if np.any(w >= spec.alphabet):
        raise ValueError("symbol outside the alphabet")
    if n <= k:
        marg = _context_marginal(spec, n)
        val = float(marg[_index(w, spec.alphabet)])
        with np.errstate(divide="ignore"):
            return CylinderMeasure(float(np.log(val)), val, val == 0.0)
    c = spec.context_index(w[:k])
    with np.errstate(divide="ignore"):
        total = float(np.log(spec.stationary[c]))
    total += energy(spec, w)
    if not np.isfinite(total):
        return CylinderMeasure(-np.inf, 0.0, True)
    return CylinderMeasure(total, float(np.exp(total)), False)


def _index(w, A) -> int:
    c = 0
    for a in w:
        c = c * A + int(a)
    return c


@dataclass(frozen=True, eq=False)
class PotentialTable:
    """Locally constant potential of range ``m``: one value per ``m``-word (nats)."""

    alphabet: int
    range: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.alphabet ** self.range:
            raise ValueError("potential needs one value per word of its range")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def scaled(self, s: float) -> "PotentialTable":
        return PotentialTable(self.alphabet, self.range, s * self.values)


def potential_from_markov(spec: MarkovSpec) -> PotentialTable:
    """Normalized potential ``phi = log p(context -> symbol)`` of range ``k + 1``."""
    if isinstance(spec, SourceSpec):
        spec = spec.model
    if np.any(spec.kernel <= 0):
        raise InvalidSpec("potential requires a strictly positive kernel")
    table = PotentialTable(spec.alphabet, spec.order + 1, np.log(spec.kernel).reshape(-1))
    from .thermo import pressure

    P = pressure(table)
    if abs(P) > 1e-10:
        raise ArithmeticError(f"potential is not normalized: P = {P:.3e}")
    return table


def energy(spec: MarkovSpec, word) -> float:
    """``S phi`` summed over the ``n - m + 1`` windows of length ``m = k + 1``."""
    if isinstance(spec, SourceSpec):
        spec = spec.model
    w = word.word if isinstance(word, Pattern) else as_symbols(word)
    m, A = spec.order + 1, spec.alphabet
    n = len(w)
    if n < m:
        raise ValueError(f"word of length {n} shorter than the potential range {m}")
    logp = _log_kernel(spec).reshape(-1)
    idx = np.zeros(n - m + 1, dtype=np.int64)
    wi = w.astype(np.int64)
    for j in range(m):
        idx = idx * A + wi[j:n - m + 1 + j]
    with np.errstate(invalid="ignore"):
        return float(logp[idx].sum())


def mp_sojourn_lengths(params: MPParams, budget: int, seed: int = 0, offset=0) -> np.ndarray:
    """Lengths of the maximal runs of symbol 0 along one orbit of ``budget`` steps."""
    if budget < 10**4:
        raise ValueError("budget must be at least 10**4")
    symbols = mp_symbols(params, budget, seed, offset)
    return _kernels.run_lengths(symbols, 0)


def mp_symbols(params: MPParams, budget: int, seed: int = 0, offset=0) -> np.ndarray:
    cur = sample_stream(SourceSpec(params, seed), offset, budget)
    return cur.take(budget)


def log_partition_bruteforce_words(spec: MarkovSpec, n: int) -> np.ndarray:
    """Log-measures of all ``|A|**n`` words by direct products (lexicographic order)."""
    A, k = spec.alphabet, spec.order
    if A ** n > 2**20:
        raise ValueError("enumeration larger than 2**20 words")
    logp = _log_kernel(spec)
    if n <= k:
        with np.errstate(divide="ignore"):
            return np.log(_context_marginal(spec, n))
    with np.errstate(divide="ignore"):
        out = np.log(spec.stationary).reshape((A,) * k) if k else np.zeros(())
    for i in range(k, n):
        # window i-k .. i: context = last k axes, new symbol appended
        table = logp.reshape((A,) * (k + 1))
        shape = (1,) * (i - k) + (A,) * (k + 1)
        out = out[..., None] + table.reshape(shape)
    return out.reshape(-1)


__all__ = [
    "CylinderMeasure", "InvalidSpec", "MarkovSpec", "MPParams", "PotentialTable", "SourceSpec",
    "cylinder_measure", "energy", "log_partition_bruteforce_words", "mp_sojourn_lengths",
    "potential_from_markov", "sample_stream", "stationary_distribution", "stream_rng",
]
