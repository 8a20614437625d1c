"""Monte Carlo recurrence-time statistics and their comparison with exact values.

Every sample is indexed by ``(n, i)`` and draws its randomness from streams
keyed on ``(seed, role, n, i)``, so results do not depend on how samples are
distributed over worker processes.

Two samplers produce recurrence times:

``scan``
    generate the symbol streams and run the pattern automaton over them,
    stopping at the budget ``B`` (censoring);
``exact``
    draw the first-passage time of the automaton directly from its phase-type
    law (see :mod:`hitspec.automaton`); never censored, Markov sources only.

Both see the same target words ``x_1^n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from . import _kernels, thermo
from .automaton import BlockChain, CoupledHitting, FirstPassage, exact_hitting_time, exact_return_time
from .sources import (MarkovSpec, MPParams, SourceSpec, cylinder_measure, energy, mp_symbols,
                      sample_stream, stream_rng)
from .symbolic import (Censored, Pattern, StreamCursor, _scan, hitting_time, is_censored,
                       non_overlapping_return_time, return_time)

KINDS = ("w", "r", "r_hat")
SAMPLERS = ("scan", "exact")
JACKKNIFE_BLOCKS = 50
BOOTSTRAP_REPS = 200
_ROLE_X, _ROLE_Y, _ROLE_EXACT = 0, 1, 2


class DegenerateSource(ValueError):
    """The source has zero asymptotic variance (measure of maximal entropy)."""


@dataclass(frozen=True)
class EstimationPlan:
    """What to sample and how.

    Parameters
    ----------
    source : SourceSpec
        Source model; ``seed`` overrides its seed when given.
    n_grid : sequence of int
        Cylinder lengths.
    q_grid : sequence of float
        Moment orders for the spectrum estimators.
    n_samples : int
        Samples ``N`` per cylinder length (at least 100).
    budget : int
        Stream budget ``B`` per scan (at least ``2 max(n)``).
    censoring : str
        Only ``"lower-bound"``: a censored time is replaced by its certified
        lower bound for ``q > 0`` and contributes ``bound**q`` (an upper
        contribution) for ``q < 0``.
    sampler : str
        ``"scan"`` or ``"exact"``.
    workers : int
        Process fan-out for sampling; never changes results.
    """

    source: SourceSpec
    n_grid: tuple = (10,)
    q_grid: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    n_samples: int = 1000
    budget: int = 10**6
    seed: Optional[int] = None
    censoring: str = "lower-bound"
    sampler: str = "scan"
    workers: int = 1

    def __post_init__(self):
        ns = tuple(int(n) for n in np.atleast_1d(self.n_grid))
        object.__setattr__(self, "n_grid", ns)
        object.__setattr__(self, "q_grid", tuple(float(q) for q in np.atleast_1d(self.q_grid)))
        if self.seed is None:
            object.__setattr__(self, "seed", self.source.seed)
        if not ns or min(ns) < 1:
            raise ValueError("cylinder lengths must be >= 1")
        if self.n_samples < 100:
            raise ValueError("at least 100 samples are required")
        if self.budget < 2 * max(ns):
            raise ValueError("budget must be at least 2 n")
        if self.censoring != "lower-bound":
            raise ValueError("only lower-bound censoring substitution is supported")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.sampler == "exact" and not isinstance(self.source.model, MarkovSpec):
            raise ValueError("the exact sampler needs a Markov source")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n(self) -> int:
        return self.n_grid[-1]

    @property
    def spec(self) -> SourceSpec:
        return SourceSpec(self.source.model, self.seed)

    def with_n(self, n) -> "EstimationPlan":
        return replace(self, n_grid=tuple(np.atleast_1d(n)))


@dataclass(frozen=True)
class RecurrenceSample:
    """One draw of the three recurrence times for a target word ``x_1^n``.

    Times that were not requested are ``None``; censored scans carry a
    :class:`~hitspec.symbolic.Censored` marker.
    """

    n: int
    index: int
    w: Union[int, Censored, None]
    r: Union[int, Censored, None]
    r_hat: Union[int, Censored, None]
    mu_cyl: float
    log_mu: float
    energy: float

    @property
    def censored(self) -> bool:
        return any(is_censored(v) for v in (self.w, self.r, self.r_hat))


class RecurrenceBatch(Sequence):
    """Columnar storage of :class:`RecurrenceSample` for one ``n``.

    ``values[kind]`` holds the time, or its lower bound when
    ``censored[kind]`` is set, as float64; NaN when the kind was not sampled.
    """

    def __init__(self, n, values, censored, log_mu, energy, budget, words=None):
        self.n = int(n)
        self.values = values
        self.censored = censored
        self.log_mu = log_mu
        self.energy = energy
        self.budget = budget
        self.words = words

    def __len__(self):
        return self.log_mu.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]

        def item(kind):
            v = self.values[kind][i]
            if np.isnan(v):
                return None
            if self.censored[kind][i]:
                return Censored(self.budget, int(v))
            return int(v) if v < 2**53 else v

        lm = float(self.log_mu[i])
        return RecurrenceSample(self.n, int(i), item("w"), item("r"), item("r_hat"),
                                float(np.exp(lm)), lm, float(self.energy[i]))

    def log_times(self, kind: str = "w") -> np.ndarray:
        return np.log(self.values[kind])

    def censored_fraction(self, kind: str = "w") -> float:
        return float(self.censored[kind].mean())

    @classmethod
    def concat(cls, parts):
        first = parts[0]
        vals = {k: np.concatenate([p.values[k] for p in parts]) for k in KINDS}
        cens = {k: np.concatenate([p.censored[k] for p in parts]) for k in KINDS}
        words = np.concatenate([p.words for p in parts]) if first.words is not None else None
        return cls(first.n, vals, cens, np.concatenate([p.log_mu for p in parts]),
                   np.concatenate([p.energy for p in parts]), first.budget, words)


def _as_float(t) -> tuple[float, bool]:
    if is_censored(t):
        return float(t.bound), True
    return float(t), False


def _sample_chunk(plan: EstimationPlan, n: int, lo: int, hi: int, kinds: tuple) -> RecurrenceBatch:
    spec = plan.spec
    model = spec.model
    markov = isinstance(model, MarkovSpec)
    size = hi - lo
    vals = {k: np.full(size, np.nan) for k in KINDS}
    cens = {k: np.zeros(size, dtype=bool) for k in KINDS}
    log_mu = np.full(size, np.nan)
    en = np.full(size, np.nan)
    words = np.empty((size, n), dtype=np.uint8)
    B = plan.budget
    # automaton laws depend only on the word; short words repeat often
    laws, blocks = {}, {}
    for j, i in enumerate(range(lo, hi)):
        xcur = sample_stream(spec, (_ROLE_X, n, i), B)
        word = xcur.peek(n).copy()
        words[j] = word
        if markov:
            log_mu[j] = cylinder_measure(model, word).log
            if n > model.order:
                en[j] = energy(model, word)
        if plan.sampler == "scan":
            if "w" in kinds:
                vals["w"][j], cens["w"][j] = _as_float(hitting_time(word, sample_stream(spec, (_ROLE_Y, n, i), B)))
            if "r" in kinds:
                vals["r"][j], cens["r"][j] = _as_float(return_time(xcur, n))
            if "r_hat" in kinds:
                again = sample_stream(spec, (_ROLE_X, n, i), B)
                vals["r_hat"][j], cens["r_hat"][j] = _as_float(non_overlapping_return_time(again, n))
        else:
            rng = stream_rng(plan.seed, (_ROLE_EXACT, n, i))
            key = word.tobytes()
            law = None
            if "w" in kinds or "r" in kinds:
                law = laws.get(key)
                if law is None:
                    law = laws[key] = FirstPassage(model, word)
            if "w" in kinds:
                vals["w"][j] = float(exact_hitting_time(model, word, rng, law))
            if "r" in kinds:
                vals["r"][j] = float(exact_return_time(model, word, rng, law))
            if "r_hat" in kinds:
                bc = blocks.get(key)
                if bc is None:
                    bc = blocks[key] = BlockChain(model, word)
                vals["r_hat"][j] = float(bc.sample(rng))
    return RecurrenceBatch(n, vals, cens, log_mu, en, B, words)


def _chunks(N: int, parts: int):
    edges = np.linspace(0, N, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def sample_recurrence(plan: EstimationPlan, n: Optional[int] = None, kinds=("w", "r", "r_hat")) -> RecurrenceBatch:
    """Draw ``plan.n_samples`` recurrence samples at cylinder length ``n``.

    The target word is the first ``n`` symbols of an ``x``-stream; ``w`` scans
    an independent ``y``-stream, ``r`` and ``r_hat`` the continuation of
    ``x``.  Exact cylinder measure and energy are attached for Markov sources.
    """
    n = plan.n if n is None else int(n)
    kinds = tuple(k for k in KINDS if k in kinds)
    N = plan.n_samples
    if plan.workers == 1:
        return _sample_chunk(plan, n, 0, N, kinds)
    pieces = _chunks(N, 4 * plan.workers)
    with ProcessPoolExecutor(max_workers=plan.workers) as pool:
        parts = list(pool.map(_sample_chunk, *zip(*[(plan, n, a, b, kinds) for a, b in pieces])))
    return RecurrenceBatch.concat(parts)


# ---------------------------------------------------------------------------
# entropy


@dataclass
class EntropyEstimate:
    value: float
    stderr: float
    n: int
    n_samples: int
    censored_fraction: float
    reliable: bool
    warnings: list = field(default_factory=list)


def entropy_estimate(plan: EstimationPlan, batch: Optional[RecurrenceBatch] = None, kind: str = "w") -> EntropyEstimate:
    """Mean of ``(1/n) log w_n`` with a bootstrap standard error.

    Censored samples enter with their lower bound; more than 10% censoring
    sets ``reliable = False``.
    """
    batch = batch if batch is not None else sample_recurrence(plan, kinds=(kind,))
    x = batch.log_times(kind) / batch.n
    rng = stream_rng(plan.seed, (3, batch.n))
    idx = rng.integers(0, x.shape[0], size=(BOOTSTRAP_REPS, x.shape[0]))
    se = float(x[idx].mean(axis=1).std(ddof=1))
    cf = batch.censored_fraction(kind)
    warnings = []
    if cf > 0.10:
        warnings.append(f"{cf:.1%} of scans censored at B={batch.budget}")
    return EntropyEstimate(float(x.mean()), se, batch.n, len(batch), cf, not warnings, warnings)


# ---------------------------------------------------------------------------
# spectra


def log_moment(log_t: np.ndarray, q: float) -> float:
    """``log mean(t**q)`` from ``log t`` (log-sum-exp, exact zero at ``q = 0``)."""
    if q == 0.0:
        return 0.0
    return float(logsumexp(q * log_t) - math.log(log_t.shape[0]))


def _per_n(log_ts: dict, qs, keep=None) -> np.ndarray:
    """``(1/n) log mean t**q`` for every ``n`` (rows) and ``q`` (columns)."""
    out = np.empty((len(log_ts), len(qs)))
    for a, (n, lt) in enumerate(log_ts.items()):
        lt = lt if keep is None else lt[keep]
        out[a] = [log_moment(lt, q) / n for q in qs]
    return out


def _ols_slope(ns: np.ndarray, nW: np.ndarray) -> np.ndarray:
    """Slope of ``n W_n(q)`` against ``n`` per column."""
    X = ns - ns.mean()
    return (X[:, None] * (nW - nW.mean(axis=0))).sum(axis=0) / (X ** 2).sum()


def _curve_from(log_ts: dict, qs, censored: dict, N: int, label: str) -> thermo.SpectrumCurve:
    ns = np.array(list(log_ts), dtype=float)
    qs = np.asarray(qs, dtype=float)

    def estimate(keep=None):
        W = _per_n(log_ts, qs, keep)
        if len(ns) >= 2:
            return _ols_slope(ns, ns[:, None] * W), W
        return W[0], W

    values, per_n = estimate()
    G = min(JACKKNIFE_BLOCKS, N)
    blocks = np.array_split(np.arange(N), G)
    reps = []
    for b in blocks:
        keep = np.ones(N, dtype=bool)
        keep[b] = False
        reps.append(estimate(keep)[0])
    reps = np.array(reps)
    se = np.sqrt((G - 1) / G * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    zero = qs == 0.0
    values = np.where(zero, 0.0, values)
    se = np.where(zero, 0.0, se)
    meta = {
        "time": label,
        "method": "ols-slope" if len(ns) >= 2 else "single-n",
        "per_n": {int(n): per_n[a].tolist() for a, n in enumerate(ns)},
        "censored_fraction": {int(n): float(c.mean()) for n, c in censored.items()},
        "censoring": "lower-bound",
    }
    n_meta = tuple(int(n) for n in ns) if len(ns) > 1 else int(ns[0])
    return thermo.SpectrumCurve(qs, values, "estimated", se, n_meta, N, meta)


def _spectrum(plan: EstimationPlan, kind: str, batches=None) -> thermo.SpectrumCurve:
    if batches is None:
        batches = {n: sample_recurrence(plan, n, kinds=(kind,)) for n in plan.n_grid}
    log_ts = {n: batches[n].log_times(kind) for n in plan.n_grid}
    cens = {n: batches[n].censored[kind] for n in plan.n_grid}
    return _curve_from(log_ts, plan.q_grid, cens, plan.n_samples, kind)


def spectrum_estimate_W(plan: EstimationPlan, batches: Optional[dict] = None) -> thermo.SpectrumCurve:
    """Hitting-time spectrum ``W_n(q) = (1/n) log E[w_n**q]``.

    With several cylinder lengths the reported value is the least-squares
    slope of ``n W_n(q)`` against ``n`` (n-independent prefactors cancel);
    standard errors come from a delete-one-block jackknife over 50 blocks.
    """
    return _spectrum(plan, "w", batches)


def spectrum_estimate_R(plan: EstimationPlan, variant: str = "overlapping",
                        batches: Optional[dict] = None) -> thermo.SpectrumCurve:
    """Return-time spectrum from ``r_n`` or the block-wise ``r_hat_n``."""
    if variant not in ("overlapping", "non-overlapping"):
        raise ValueError("variant must be 'overlapping' or 'non-overlapping'")
    return _spectrum(plan, "r" if variant == "overlapping" else "r_hat", batches)


# ---------------------------------------------------------------------------
# Kac and the exponential law


@dataclass
class KacReport:
    """Conditioned return times to a cylinder collected along one stream.

    ``ratio`` is ``mean(offset) * mu``, which equals 1 by Kac's lemma;
    ``zeta_hat`` is the fraction of returns with offset greater than ``n``
    (returns inside the word's own overlap window are excluded).
    """

    ratio: float
    stderr: float
    mean_return: float
    mu: float
    n_returns: int
    zeta_hat: float

    def __float__(self):
        return self.ratio


def _markov_mu(spec, pattern) -> float:
    model = spec.model if isinstance(spec, SourceSpec) else spec
    if not isinstance(model, MarkovSpec):
        raise ValueError("an explicit measure is required for non-Markov sources")
    return cylinder_measure(model, pattern).value


def kac_check(spec: SourceSpec, pattern, N: int, offset=0, mu: Optional[float] = None,
              stream: Optional[StreamCursor] = None) -> KacReport:
    """Kac ratio from ``N`` successive returns of one stream to ``[pattern]``.

    ``stream`` replaces the sampled stream (e.g. a deterministic sequence),
    in which case ``mu`` must give the cylinder measure under its law.
    """
    pattern = pattern if isinstance(pattern, Pattern) else Pattern(pattern)
    mu = _markov_mu(spec, pattern) if mu is None else float(mu)
    if not mu > 0:
        raise ValueError("pattern must have positive measure")
    if stream is None:
        budget = int(len(pattern) + (N + 1) / mu * 1.2 + 50 * math.sqrt(N / mu ** 2) + 1000)
        stream = sample_stream(spec, (4, offset), budget)
    ends, _ = _scan(pattern, stream, 0, N + 1)
    gaps = np.diff(ends).astype(float)
    if gaps.shape[0] == 0:
        raise RuntimeError("stream produced fewer than two occurrences")
    ratio = float(gaps.mean() * mu)
    se = float(gaps.std(ddof=1) * mu / math.sqrt(gaps.shape[0])) if gaps.shape[0] > 1 else float("nan")
    return KacReport(ratio, se, float(gaps.mean()), mu, int(gaps.shape[0]), float((gaps > len(pattern)).mean()))


@dataclass
class FitReport:
    """Exponential-law fit of rescaled hitting times ``t = w mu``.

    ``band_t`` are values of ``t mu`` (integer ``t``) and ``band`` the
    diagnostic ``-log P(w > t) / (t mu)``; ``band_ok`` checks it lies in
    ``[rho_hat/2, 2 rho_hat]``.
    """

    rho_hat: float
    ks: float
    n_samples: int
    censored_fraction: float
    flagged: bool
    mu: float
    band_t: np.ndarray
    band: np.ndarray
    band_ok: bool
    ks_pvalue: float

    def as_dict(self) -> dict:
        return {"rho_hat": self.rho_hat, "ks": self.ks, "n_samples": self.n_samples,
                "censored_fraction": self.censored_fraction, "flagged": self.flagged, "mu": self.mu,
                "band_ok": self.band_ok, "band_min": float(np.min(self.band)),
                "band_max": float(np.max(self.band)), "ks_pvalue": self.ks_pvalue}


def exp_law_fit(spec: SourceSpec, pattern, N: int, budget: Optional[int] = None, offset=0,
                band_points: int = 10) -> FitReport:
    """Fit ``P(w mu > t) ~ exp(-rho t)`` on ``N`` hitting times of a fixed word.

    ``rho_hat = 1 / mean(w mu)`` (method of moments); the KS distance is to
    the exponential law with that rate.
    """
    if N < 1000:
        raise ValueError("at least 1000 hitting times are required")
    pattern = pattern if isinstance(pattern, Pattern) else Pattern(pattern)
    mu = _markov_mu(spec, pattern)
    B = int(budget if budget is not None else max(2 * len(pattern), math.ceil(30.0 / mu) + len(pattern)))
    w = np.empty(N)
    cens = np.zeros(N, dtype=bool)
    for i in range(N):
        w[i], cens[i] = _as_float(hitting_time(pattern, sample_stream(spec, (5, offset, i), B)))
    t = w * mu
    rho = 1.0 / t.mean()
    ks = stats.kstest(t, stats.expon(scale=1.0 / rho).cdf)
    # diagnostic band over integer times with t mu in [0.05, 0.5]
    lo = max(1, math.ceil(0.05 / mu))
    hi = max(lo, math.floor(0.5 / mu))
    ts = np.unique(np.linspace(lo, hi, band_points).astype(np.int64))
    surv = np.array([(w > s).mean() for s in ts])
    with np.errstate(divide="ignore"):
        band = -np.log(surv) / (ts * mu)
    band_ok = bool(np.all(band > 0) and np.all(band >= rho / 2) and np.all(band <= 2 * rho))
    cf = float(cens.mean())
    return FitReport(float(rho), float(ks.statistic), N, cf, cf > 0.01, mu, ts * mu, band, band_ok,
                     float(ks.pvalue))


# ---------------------------------------------------------------------------
# fluctuations


@dataclass
class FluctuationReport:
    """Standardized ``(log t_n - n h) / (sigma sqrt n)`` and its diagnostics."""

    n: int
    z: np.ndarray
    ks: float
    mean_log_over_n: float
    var_scaled: float
    sigma2: float
    variance_rel_error: float
    censored_fraction: float
    h: float
    kind: str = "w"
    sa_violation: Optional[dict] = None

    def as_dict(self) -> dict:
        return {"n": self.n, "ks": self.ks, "mean_log_over_n": self.mean_log_over_n,
                "var_scaled": self.var_scaled, "sigma2": self.sigma2, "h": self.h,
                "variance_rel_error": self.variance_rel_error, "censored_fraction": self.censored_fraction,
                "kind": self.kind, "n_samples": int(self.z.shape[0])}


def _exact_constants(plan: EstimationPlan):
    model = plan.source.model
    if not isinstance(model, MarkovSpec):
        raise ValueError("fluctuation checks need a Markov source")
    s2 = thermo.asymptotic_variance(model)
    if s2 < 1e-12:
        raise DegenerateSource("asymptotic variance is zero (measure of maximal entropy)")
    return thermo.entropy(model), s2


def censored_ks(z: np.ndarray, censored: np.ndarray) -> float:
    """KS distance to N(0,1) over the uncensored range.

    Censored values are right-censored at their bound; the supremum is taken
    only below the smallest censoring point.
    """
    zs = np.sort(z)
    N = zs.shape[0]
    cut = z[censored].min() if censored.any() else np.inf
    below = zs[zs < cut]
    if below.shape[0] == 0:
        return 1.0
    F = stats.norm.cdf(below)
    i = np.arange(1, below.shape[0] + 1)
    d = max(np.max(i / N - F), np.max(F - (i - 1) / N))
    if np.isfinite(cut):
        d = max(d, abs(below.shape[0] / N - stats.norm.cdf(cut)))
    return float(d)


def clt_check(plan: EstimationPlan, batch: Optional[RecurrenceBatch] = None, kind: str = "w") -> FluctuationReport:
    """Standardized log recurrence times at ``plan.n`` against N(0, 1)."""
    h, s2 = _exact_constants(plan)
    batch = batch if batch is not None else sample_recurrence(plan, kinds=(kind,))
    n = batch.n
    lt = batch.log_times(kind)
    cens = batch.censored[kind]
    z = (lt - n * h) / math.sqrt(s2 * n)
    ks = censored_ks(z, cens)
    var = float(np.var((lt - n * h) / math.sqrt(n), ddof=1))
    return FluctuationReport(n, z, ks, float(lt.mean() / n), var, s2, abs(var - s2) / s2,
                             float(cens.mean()), h, kind)


@dataclass
class SABoundReport:
    eps: float
    n_grid: tuple
    lower: np.ndarray
    upper: np.ndarray
    lower_se: np.ndarray
    upper_se: np.ndarray
    kind: str = "w"

    def nonincreasing(self, k: float = 2.0) -> dict:
        out = {}
        for name, f, se in (("lower", self.lower, self.lower_se), ("upper", self.upper, self.upper_se)):
            tol = k * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
            out[name] = bool(np.all(np.diff(f) <= tol))
        return out

    def as_dict(self) -> dict:
        return {"eps": self.eps, "n_grid": list(self.n_grid), "lower": self.lower.tolist(),
                "upper": self.upper.tolist(), "lower_se": self.lower_se.tolist(),
                "upper_se": self.upper_se.tolist(), "kind": self.kind, **{
                    f"nonincreasing_{k}": v for k, v in self.nonincreasing().items()}}


def sa_bound_check(plan: EstimationPlan, eps: float, kind: str = "w", batches: Optional[dict] = None) -> SABoundReport:
    """Fractions of samples outside ``[-eps log n, log log n**eps]`` for ``log(t mu)``.

    A censored time violates the upper bound as soon as its lower bound
    does; otherwise it is counted as inside (the fraction is then a lower
    estimate, reported through the batch's censored fraction).
    """
    if not eps > 1:
        raise ValueError("eps must exceed 1")
    if not isinstance(plan.source.model, MarkovSpec):
        raise ValueError("bound checks need exact cylinder measures")
    lows, ups = [], []
    for n in plan.n_grid:
        b = batches[n] if batches is not None else sample_recurrence(plan, n, kinds=(kind,))
        x = b.log_times(kind) + b.log_mu
        lows.append(float(np.mean(x < -eps * math.log(n))))
        ups.append(float(np.mean(x > math.log(eps * math.log(n)))))
    N = plan.n_samples
    lo, up = np.array(lows), np.array(ups)

    def se(p):
        return np.sqrt(np.maximum(p * (1 - p), 1.0 / N) / N)

    return SABoundReport(float(eps), plan.n_grid, lo, up, se(lo), se(up), kind)


@dataclass
class LILTrace:
    n: np.ndarray
    values: np.ndarray
    running_max: np.ndarray
    log_w: np.ndarray

    @property
    def max(self) -> float:
        return float(self.values.max())


def lil_trace(plan: EstimationPlan, n_max: Optional[int] = None, n_start: int = 16, pair: int = 0) -> LILTrace:
    """``(log w_n - n h) / (sigma sqrt(2 n log log n))`` along one coupled pair.

    The pair ``(x, y)`` is fixed and ``n`` grows one step at a time with the
    exact coupled sampler, so ``w_n`` is non-decreasing in ``n``.  Values are
    reported from ``n_start`` on (default 16, the first integer with
    ``log log n >= 1``).  A law of the iterated logarithm only emerges on
    scales far beyond reach; the trace is a qualitative envelope check.
    """
    h, s2 = _exact_constants(plan)
    n_max = plan.n if n_max is None else int(n_max)
    model = plan.source.model
    if not isinstance(model, MarkovSpec):
        raise ValueError("the coupled sampler needs a Markov source")
    ch = CoupledHitting(model, stream_rng(plan.seed, (6, pair, 0)), stream_rng(plan.seed, (6, pair, 1)),
                        n0=max(1, model.order))
    ns, lw = [], []
    while ch.n < n_max:
        w = ch.step()
        if ch.n >= n_start:
            ns.append(ch.n)
            lw.append(math.log(w))
    ns = np.array(ns, dtype=float)
    lw = np.array(lw)
    vals = (lw - ns * h) / np.sqrt(s2 * 2 * ns * np.log(np.log(ns)))
    return LILTrace(ns.astype(int), vals, np.maximum.accumulate(vals), lw)


# ---------------------------------------------------------------------------
# Manneville-Pomeau


def hill_exponent(x: np.ndarray, k: Optional[int] = None) -> float:
    """Hill estimate of the tail exponent ``beta`` in ``P(X > x) ~ x**-beta``.

    Uses the ``k`` largest values (default ``sqrt`` of the sample size).
    """
    xs = np.sort(np.asarray(x, dtype=float))[::-1]
    k = int(math.sqrt(xs.shape[0])) if k is None else int(k)
    if k < 2 or k >= xs.shape[0]:
        raise ValueError("need 2 <= k < sample size")
    gamma = np.mean(np.log(xs[:k]) - math.log(xs[k]))
    return float(1.0 / gamma)


@dataclass
class GrowthReport:
    """Running ``q``-th moments of ``tau_{I_1}`` over doubling sample sizes."""

    alpha: float
    q: float
    variant: str
    sizes: np.ndarray
    moments: np.ndarray
    growth: np.ndarray
    final_rel_change: float
    tail_exponent: float
    n_sojourns: int
    replicates: int

    def rows(self):
        for s, m, g in zip(self.sizes, self.moments, np.concatenate([[np.nan], self.growth])):
            yield int(s), float(m), float(g)


MP_VARIANTS = ("stationary", "sojourn")


def mp_divergence_check(params: MPParams, q: float, doublings: int = 4, budget: int = 10**7,
                        seed: int = 0, replicates: int = 8, variant: str = "stationary",
                        offset: int = 0) -> GrowthReport:
    """Empirical ``q``-th moments of the hitting time of the right branch ``I_1``.

    ``variant="stationary"`` evaluates ``tau_{I_1}`` at every orbit point, i.e.
    integrates against the invariant measure; ``"sojourn"`` takes one value
    per excursion into ``I_0`` (the passage time from the entry point).  The
    mean of ``tau**q`` is recorded over the first ``N_0 2**j`` values
    (``j = 0 .. doublings``) of each replicate orbit and the log-moments are
    averaged over replicates.  Growth factors well above 1 signal an infinite
    moment.  ``tail_exponent`` is the Hill estimate for sojourn lengths
    (median over replicates).
    """
    if variant not in MP_VARIANTS:
        raise ValueError(f"variant must be one of {MP_VARIANTS}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    values, tails, counts = [], [], []
    for rep in range(replicates):
        sym = mp_symbols(params, budget, seed, (offset, rep))
        runs = _kernels.run_lengths(sym, 0)
        if variant == "stationary":
            tau = _kernels.time_to_symbol(sym, 1).astype(float)
        else:
            # a run at the very end has not yet reached I_1
            tau = runs[:-1].astype(float) + 1.0 if sym[-1] == 0 else runs.astype(float) + 1.0
        values.append(tau)
        tails.append(hill_exponent(runs))
        counts.append(runs.shape[0])
    N0 = min(v.shape[0] for v in values) >> doublings
    if N0 < 10:
        raise ValueError("budget too small for the requested doublings")
    sizes = N0 << np.arange(doublings + 1)
    logs = [np.log(np.cumsum(v[:sizes[-1]] ** q)[sizes - 1] / sizes) for v in values]
    lm = np.mean(logs, axis=0)
    growth = np.exp(np.diff(lm))
    return GrowthReport(params.alpha, float(q), variant, sizes, np.exp(lm), growth,
                        float(abs(growth[-1] - 1.0)), float(np.median(tails)), int(np.sum(counts)), replicates)


__all__ = [
    "DegenerateSource", "EntropyEstimate", "EstimationPlan", "FitReport", "FluctuationReport",
    "GrowthReport", "KacReport", "LILTrace", "RecurrenceBatch", "RecurrenceSample", "SABoundReport",
    "censored_ks", "clt_check", "entropy_estimate", "exp_law_fit", "hill_exponent", "kac_check",
    "lil_trace", "log_moment", "mp_divergence_check", "sa_bound_check", "sample_recurrence",
    "spectrum_estimate_R", "spectrum_estimate_W",
]
