"""Exact thermodynamic quantities of finite-range potentials.

Everything here is computed from transfer matrices and serves as the
ground truth the Monte Carlo estimators are checked against.  All values are
in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .sources import MarkovSpec, PotentialTable, SourceSpec, log_partition_bruteforce_words

PERRON_TOL = 1e-13
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class ThermoError(ArithmeticError):
    pass


class FlatSpectrum(ThermoError):
    """Raised for the measure of maximal entropy, whose spectra carry no fluctuations."""


class OutOfRange(ValueError):
    def __init__(self, msg, u0=None):
        super().__init__(msg)
        self.u0 = u0


class _Undefined:
    """Marker for q-values where no closed form is available."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDEFINED"

    def __float__(self):
        return float("nan")

    def __bool__(self):
        return False


UNDEFINED = _Undefined()


def _markov(spec) -> MarkovSpec:
    m = spec.model if isinstance(spec, SourceSpec) else spec
    if not isinstance(m, MarkovSpec):
        raise TypeError("exact computations need a Markov source")
    return m


def transfer_matrix(potential: PotentialTable, scale: float = 1.0):
    """Transfer matrix of ``scale * potential`` with its entries shifted by the maximum.

    Returns ``(L, shift)`` where the true matrix is ``exp(shift) * L``.
    """
    A, m = potential.alphabet, potential.range
    psi = scale * potential.values
    shift = float(psi.max())
    w = np.exp(psi - shift)
    C = A ** (m - 1)
    L = np.zeros((C, C))
    for word in range(A ** m):
        c, a = divmod(word, A)
        L[c, (c * A + a) % C] += w[word]
    return L, shift


def perron(L: np.ndarray, tol: float = PERRON_TOL, max_iter: int = 200):
    """Perron root and positive left/right eigenvectors of a primitive matrix.

    Power iteration accelerated by repeated squaring (the iterate is
    multiplied by ``L**(2**k)`` in round ``k``), stopped by the
    Collatz-Wielandt bracket of ``L`` itself.  Near-degenerate spectra, as
    met by strongly deformed potentials, still converge in a few dozen
    rounds.  Falls back to a dense eigen-solver when the bracket does not
    close within ``max_iter`` rounds.
    """
    C = L.shape[0]
    if C == 1:
        return float(L[0, 0]), np.ones(1), np.ones(1)
    if np.any(L < 0):
        raise ThermoError("transfer matrix has negative entries")
    Lt = np.ascontiguousarray(L.T)

    def iterate(M):
        v = np.full(C, 1.0 / C)
        P = M / M.max()
        for _ in range(max_iter):
            w = M @ v
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = w / v
            lo, hi = ratio.min(), ratio.max()
            if np.all(v > 0) and hi - lo <= tol * hi:
                return 0.5 * (lo + hi), v
            v = P @ w
            v /= v.sum()
            P = P @ P
            P /= P.max()
        return None, None

    lam, r = iterate(L)
    lam_l, l = iterate(Lt) if lam is not None else (None, None)
    if lam is None or lam_l is None:
        vals, vecs = np.linalg.eig(L)
        i = int(np.argmax(vals.real))
        lam = float(vals[i].real)
        r = np.abs(vecs[:, i].real)
        vals_l, vecs_l = np.linalg.eig(Lt)
        l = np.abs(vecs_l[:, int(np.argmax(vals_l.real))].real)
        if np.any(r <= 0) or np.any(l <= 0):
            raise ThermoError("transfer matrix is not irreducible")
    return float(lam), r, l


def pressure(potential: PotentialTable, scale: float = 1.0) -> float:
    """Topological pressure ``P(scale * potential)``: log of the Perron root."""
    L, shift = transfer_matrix(potential, scale)
    lam, _, _ = perron(L)
    if lam <= 0:
        raise ThermoError("non-positive Perron root")
    return float(np.log(lam) + shift)


def _potential(spec: MarkovSpec) -> PotentialTable:
    if np.any(spec.kernel <= 0):
        raise ThermoError("exact spectra require a strictly positive kernel")
    return PotentialTable(spec.alphabet, spec.order + 1, np.log(spec.kernel).reshape(-1))


def renyi_M(spec, q: float) -> float:
    """Renyi free energy ``M(q) = P((1 - q) phi)``."""
    if q == 0.0:
        return 0.0  # P(phi) = 0 for a normalized potential (checked on construction)
    return pressure(_potential(_markov(spec)), 1.0 - q)


def pressure_2phi(spec) -> float:
    return pressure(_potential(_markov(spec)), 2.0)


def hitting_spectrum_W(spec, q: float) -> float:
    """``W(q)``: equals ``M(q)`` for ``q >= -1`` and ``P(2 phi)`` below."""
    if q >= -1.0:
        return renyi_M(spec, q)
    return pressure_2phi(spec)


def nonoverlap_spectrum_Rhat(spec, q: float):
    """Non-overlapping return-time spectrum; :data:`UNDEFINED` on ``[-1, 0)``."""
    if q < -1.0:
        return pressure_2phi(spec)
    if q >= 0.0:
        return renyi_M(spec, q)
    return UNDEFINED


def entropy(spec) -> float:
    """Entropy rate ``-sum_c pi(c) sum_a p log p``."""
    m = _markov(spec)
    K = m.kernel
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(K > 0, K * np.log(K), 0.0)
    return float(-(m.stationary @ plogp.sum(axis=1)))


def _word_chain(m: MarkovSpec):
    """Chain on ``(k+1)``-words: transition matrix, stationary law, potential values."""
    A, C = m.alphabet, m.n_contexts
    W = C * A
    P = np.zeros((W, W))
    for w in range(W):
        ctx = w % C  # last k symbols of the word
        for a in range(A):
            P[w, ctx * A + a] = m.kernel[ctx, a]
    pi_w = (m.stationary[:, None] * m.kernel).reshape(-1)
    with np.errstate(divide="ignore"):
        f = np.log(m.kernel).reshape(-1)
    return P, pi_w, f


def asymptotic_variance(spec) -> float:
    """Green-Kubo variance of ``phi`` along the chain, via the fundamental matrix."""
    m = _markov(spec)
    P, pi_w, f = _word_chain(m)
    fbar = f - pi_w @ f
    W = P.shape[0]
    Z = np.linalg.solve(np.eye(W) - P + np.outer(np.ones(W), pi_w), np.eye(W))
    g = Z @ fbar
    var = 2.0 * float(pi_w @ (fbar * g)) - float(pi_w @ (fbar * fbar))
    return max(var, 0.0) if var > -1e-12 else var


def equilibrium_mean(potential: PotentialTable, observable: np.ndarray) -> float:
    """``int f d(mu_psi)`` for the Gibbs measure of ``psi`` and a function ``f`` of ``range`` symbols."""
    L, _ = transfer_matrix(potential)
    lam, r, l = perron(L)
    A = potential.alphabet
    C = L.shape[0]
    obs = np.asarray(observable, dtype=float).reshape(-1)
    w = np.exp(potential.values - potential.values.max())
    num = 0.0
    den = float(l @ r)
    for word in range(A ** potential.range):
        c, a = divmod(word, A)
        nxt = (c * A + a) % C
        num += l[c] * w[word] * r[nxt] * obs[word]
    return num / (lam * den)


def twisted_slope(spec) -> float:
    """Right derivative of ``W`` at ``q = -1``: ``-int phi d(mu_{2 phi})``."""
    m = _markov(spec)
    phi = _potential(m)
    return -equilibrium_mean(phi.scaled(2.0), phi.values)


def u0_bound(spec) -> float:
    """Edge of the accessible lower deviations, ``|W'(-1+) - h|``."""
    return abs(twisted_slope(spec) - entropy(spec))


def partition_sum(spec, n: int, q: float) -> float:
    """``log sum_{|a|=n} mu([a])**(1-q)`` by products of the deformed transfer matrix."""
    m = _markov(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    s = 1.0 - q
    A, C, k = m.alphabet, m.n_contexts, m.order
    with np.errstate(divide="ignore"):
        logpi = np.log(m.stationary)
        logK = np.log(m.kernel)
    if n <= k:
        marg = m.stationary.reshape((A,) * k).sum(axis=tuple(range(n, k))).reshape(-1)
        with np.errstate(divide="ignore"):
            return float(logsumexp(s * np.log(marg)))
    # log of the deformed transitions between contexts
    logQ = np.full((C, C), -np.inf)
    for c in range(C):
        for a in range(A):
            j = (c * A + a) % C
            logQ[c, j] = np.logaddexp(logQ[c, j], s * logK[c, a])
    v = s * logpi
    for _ in range(n - k):
        v = logsumexp(v[:, None] + logQ, axis=0)
    return float(logsumexp(v))


def brute_force_partition(spec, n: int, q: float) -> float:
    """Exhaustive log-sum-exp over every ``n``-word (at most ``2**20`` words)."""
    m = _markov(spec)
    if m.alphabet ** n > 2**20:
        raise ValueError("brute-force partition limited to 2**20 words")
    return float(logsumexp((1.0 - q) * log_partition_bruteforce_words(m, n)))


def default_q_grid(lo: float = -3.0, hi: float = 3.0, step: float = 0.1) -> np.ndarray:
    k = int(round((hi - lo) / step))
    grid = np.round(lo + step * np.arange(k + 1), 10)
    must = [x for x in (-1.0, 0.0, 1.0) if lo <= x <= hi]
    return np.unique(np.concatenate([grid, must]))


@dataclass
class SpectrumCurve:
    """A sampled map ``q -> value`` with provenance.

    ``kind`` is one of ``exact-M``, ``exact-W``, ``exact-Rhat`` or ``estimated``.
    """

    q: np.ndarray
    values: np.ndarray
    kind: str
    stderr: Optional[np.ndarray] = None
    n: Optional[object] = None
    n_samples: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)

    def at(self, q: float) -> float:
        i = int(np.argmin(np.abs(self.q - q)))
        if abs(self.q[i] - q) > 1e-9:
            raise KeyError(q)
        return float(self.values[i])

    def rows(self):
        se = self.stderr if self.stderr is not None else np.full(self.q.shape, np.nan)
        for q, v, s in zip(self.q, self.values, se):
            yield float(q), float(v), self.kind, float(s)


def exact_curve(spec, kind: str, q_grid=None) -> SpectrumCurve:
    q_grid = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    fn = {"exact-M": renyi_M, "exact-W": hitting_spectrum_W, "exact-Rhat": nonoverlap_spectrum_Rhat}[kind]
    vals = [float(fn(spec, float(q))) for q in q_grid]
    return SpectrumCurve(q_grid, np.array(vals), kind)


def reduced_spectrum(spec, q: float, kind: str = "W") -> float:
    """``W(q)/q`` or ``M(q)/q``; both equal the entropy at ``q = 0``."""
    if q == 0.0:
        return entropy(spec)
    fn = hitting_spectrum_W if kind == "W" else renyi_M
    return fn(spec, q) / q


@dataclass
class RateFunction:
    u: np.ndarray
    rate: np.ndarray
    side: str
    u0: Optional[float] = None
    argmax_q: Optional[np.ndarray] = None

    def rows(self):
        for u, r in zip(self.u, self.rate):
            yield float(u), float(r), f"rate-{self.side}", float("nan")


def _golden_max(f, a: float, b: float, tol: float = 1e-8):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def rate_function(spec, side: str, u_grid, q_max: float = 30.0, n_grid: int = 601) -> RateFunction:
    """Large-deviation rate of ``(1/n) log w_n`` above or below the entropy.

    ``rate(u) = sup_{q > -1} {(h +/- u) q - W(q)}``, the negative of the
    exponential decay rate of the deviation probability.  Returns ``inf``
    where the supremum escapes to ``q_max``.
    """
    m = _markov(spec)
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    if asymptotic_variance(m) < 1e-12:
        raise FlatSpectrum("measure of maximal entropy: no large fluctuations")
    h = entropy(m)
    u_grid = np.atleast_1d(np.asarray(u_grid, dtype=float))
    u0 = u0_bound(m)
    if np.any(u_grid < 0):
        raise OutOfRange("deviations must be non-negative", u0)
    if side == "below" and np.any(u_grid >= u0):
        raise OutOfRange(f"lower deviations limited to u < u0 = {u0:.6g}", u0)
    lo = -1.0 + 1e-6
    qs = np.linspace(lo, q_max, n_grid)
    Wq = np.array([renyi_M(m, q) for q in qs])
    step = qs[1] - qs[0]
    rates, where = [], []
    for u in u_grid:
        level = h + u if side == "above" else h - u
        if u == 0.0:
            rates.append(0.0)
            where.append(0.0)
            continue
        i = int(np.argmax(level * qs - Wq))
        if i == len(qs) - 1:
            rates.append(np.inf)
            where.append(np.inf)
            continue
        a, b = max(lo, qs[i] - step), min(q_max, qs[i] + step)
        qstar, val = _golden_max(lambda q: level * q - renyi_M(m, q), a, b)
        rates.append(max(val, 0.0))
        where.append(qstar)
    return RateFunction(u_grid, np.array(rates), side, u0, np.array(where))
