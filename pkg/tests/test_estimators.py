import math

import numpy as np
import pytest

from hitspec import thermo
from hitspec.estimators import (DegenerateSource, EstimationPlan, clt_check, entropy_estimate, exp_law_fit,
                                hill_exponent, kac_check, lil_trace, log_moment, mp_divergence_check,
                                sa_bound_check, sample_recurrence, spectrum_estimate_R, spectrum_estimate_W)
from hitspec.sources import MarkovSpec, MPParams, SourceSpec, sample_stream
from hitspec.symbolic import StreamCursor, hitting_time, is_censored, return_time

EULER_GAMMA = 0.5772156649015329
B73 = MarkovSpec.bernoulli([0.7, 0.3])
B55 = MarkovSpec.bernoulli([0.5, 0.5])
M1 = MarkovSpec(np.array([[0.9, 0.1], [0.2, 0.8]]), order=1)


def src(m, seed=0):
    return SourceSpec(m, seed)


def test_plan_validation():
    with pytest.raises(ValueError):
        EstimationPlan(src(B73), n_samples=99)
    with pytest.raises(ValueError):
        EstimationPlan(src(B73), n_grid=(10,), budget=19)
    with pytest.raises(ValueError):
        EstimationPlan(src(B73), sampler="magic")
    with pytest.raises(ValueError):
        EstimationPlan(SourceSpec(MPParams(0.5)), sampler="exact")
    p = EstimationPlan(src(B73, 4), n_grid=(3, 5))
    assert p.seed == 4 and p.n == 5 and p.with_n(7).n_grid == (7,)


def test_censoring_rare_when_budget_ample():
    plan = EstimationPlan(src(B55), (10,), (0.0,), 10_000, 10**6)
    b = sample_recurrence(plan, kinds=("w",))
    assert b.censored_fraction("w") < 1e-3


@pytest.mark.parametrize("sampler", ["scan", "exact"])
def test_sample_ranges_and_attached_measures(sampler):
    plan = EstimationPlan(src(M1), (6,), (0.0,), 300, 10**5, sampler=sampler)
    b = sample_recurrence(plan)
    for s in b:
        for v, lo in ((s.w, 1), (s.r, 2), (s.r_hat, 1)):
            assert is_censored(v) or v >= lo
        assert s.mu_cyl == pytest.approx(math.exp(s.log_mu))
    assert np.allclose(b.log_mu, [thermo_log_mu(w) for w in b.words])


def thermo_log_mu(word):
    from hitspec.sources import cylinder_measure
    return cylinder_measure(M1, word).log


def test_replay_and_worker_independence():
    plan = EstimationPlan(src(B73, 9), (8,), (0.0,), 200, 10**5)
    a = sample_recurrence(plan)
    b = sample_recurrence(plan)
    c = sample_recurrence(EstimationPlan(src(B73, 9), (8,), (0.0,), 200, 10**5, workers=2))
    for k in ("w", "r", "r_hat"):
        assert np.array_equal(a.values[k], b.values[k])
        assert np.array_equal(a.values[k], c.values[k])
    assert list(a) == list(b)


def test_return_equals_shifted_hitting_time():
    spec = src(M1, 2)
    for i in range(1000):
        n = 1 + i % 8
        s = sample_stream(spec, (11, i), 10**5)
        x = s.peek(n).copy()
        r = return_time(sample_stream(spec, (11, i), 10**5), n)
        shifted = sample_stream(spec, (11, i), 10**5)
        shifted.take(1)
        w = hitting_time(x, shifted)
        assert is_censored(r) == is_censored(w)
        if not is_censored(r):
            assert w == r - 1


def test_entropy_estimator_bias_is_euler_gamma():
    """For i.i.d. sources w_n mu is nearly Exp(1), so E (1/n) log w_n = h - gamma/n."""
    n = 20
    plan = EstimationPlan(src(B73, 1), (n,), (0.0,), 5000, 10**8, sampler="exact")
    est = entropy_estimate(plan)
    assert est.reliable and est.censored_fraction == 0
    target = thermo.entropy(B73) - EULER_GAMMA / n
    assert abs(est.value - target) < 4 * est.stderr + 2e-3


def test_entropy_estimate_flags_censoring():
    plan = EstimationPlan(src(B55), (16,), (0.0,), 200, 2000)
    est = entropy_estimate(plan)
    assert est.censored_fraction > 0.1 and not est.reliable and est.warnings


def test_log_moment():
    lt = np.log([1.0, 2.0, 4.0])
    assert log_moment(lt, 0.0) == 0.0
    assert log_moment(lt, 1.0) == pytest.approx(math.log(7 / 3))
    assert log_moment(lt, -1.0) == pytest.approx(math.log((1 + 0.5 + 0.25) / 3))


def test_spectrum_W_examples():
    # small n keeps the events that dominate the q = -2 moment (w = 1, probability
    # sum mu**2) well sampled at this N; the acceptance suite uses n up to 16
    plan = EstimationPlan(src(B73, 3), (4, 6, 8), (-2.0, 0.0, 1.0), 6000, 10**6)
    c = spectrum_estimate_W(plan)
    assert c.at(0.0) == 0.0 and c.stderr[list(c.q).index(0.0)] == 0.0
    assert abs(c.at(1.0) - math.log(2)) <= 0.05
    assert abs(c.at(-2.0) - thermo.pressure_2phi(B73)) <= 0.06
    assert set(c.meta["per_n"]) == {4, 6, 8}
    assert np.all(np.isfinite(c.stderr))


def test_censored_estimate_is_lower_bound_for_positive_q():
    qs = (0.5, 1.0, 2.0)
    short = spectrum_estimate_W(EstimationPlan(src(B73, 5), (12,), qs, 300, 3000))
    full = spectrum_estimate_W(EstimationPlan(src(B73, 5), (12,), qs, 300, 10**7))
    assert short.meta["censored_fraction"][12] > 0
    assert full.meta["censored_fraction"][12] == 0
    assert np.all(short.values <= full.values + 1e-15)


def test_return_spectra():
    # E r = 1/mu per word, so the q = 1 moment weights every word equally and is
    # dominated by rare words; moderate n keeps them sampled
    plan = EstimationPlan(src(B73, 4), (4, 6, 8), (0.0, 1.0), 4000, 10**6, sampler="exact")
    for variant in ("overlapping", "non-overlapping"):
        c = spectrum_estimate_R(plan, variant)
        assert c.at(0.0) == 0.0
        assert abs(c.at(1.0) - math.log(2)) <= 0.05
    with pytest.raises(ValueError):
        spectrum_estimate_R(plan, "sideways")


def test_kac_examples():
    s = src(B73, 1)
    assert kac_check(s, "0", 10**5).ratio == pytest.approx(1.0, abs=0.02)
    assert kac_check(s, "01", 10**5).ratio == pytest.approx(1.0, abs=0.03)
    alt = StreamCursor.from_sequence("01" * 5000)
    rep = kac_check(s, "01", 1000, mu=0.5, stream=alt)
    assert rep.ratio == 1.0 and rep.mean_return == 2.0
    with pytest.raises(ValueError):
        kac_check(s, "01", 10, mu=0.0)


def test_exp_law_periodic_pattern_rho_below_one():
    fit = exp_law_fit(src(B55, 2), "0" * 12, 1000)
    assert fit.rho_hat < 0.8
    fit2 = exp_law_fit(src(B55, 2), "0" * 11 + "1", 1000)
    assert 0.85 <= fit2.rho_hat <= 1.15
    assert fit2.band_ok and np.all(fit2.band > 0)
    with pytest.raises(ValueError):
        exp_law_fit(src(B55), "01", 999)


def test_degenerate_source_errors():
    plan = EstimationPlan(src(B55), (10,), (0.0,), 100, 10**5, sampler="exact")
    with pytest.raises(DegenerateSource):
        clt_check(plan)
    with pytest.raises(DegenerateSource):
        lil_trace(plan, n_max=20)


def test_clt_standardization():
    plan = EstimationPlan(src(MarkovSpec.bernoulli([0.9, 0.1]), 1), (30,), (0.0,), 500, 10**6, sampler="exact")
    rep = clt_check(plan)
    assert rep.censored_fraction == 0 and 0 <= rep.ks <= 1
    assert rep.variance_rel_error < 0.35
    assert rep.z.shape == (500,)


def test_sa_bounds():
    plan = EstimationPlan(src(B73, 2), (10, 20, 30), (0.0,), 1000, 10**8, sampler="exact")
    with pytest.raises(ValueError):
        sa_bound_check(plan, 1.0)
    rep = sa_bound_check(plan, 3.0)
    assert np.all(rep.lower < 0.05) and np.all(rep.upper < 0.05)
    assert rep.as_dict()["eps"] == 3.0


def test_lil_trace_finite_and_monotone_w():
    plan = EstimationPlan(src(MarkovSpec.bernoulli([0.9, 0.1]), 3), (100,), (0.0,), 100, 10**6, sampler="exact")
    tr = lil_trace(plan)
    assert tr.n[0] == 16 and tr.n[-1] == 100
    assert np.all(np.isfinite(tr.values))
    assert np.all(np.diff(tr.log_w) >= 0)
    assert np.all(np.diff(tr.running_max) >= 0)


def test_hill_exponent_on_pareto():
    rng = np.random.default_rng(0)
    x = rng.pareto(2.0, 200_000) + 1.0
    assert hill_exponent(x) == pytest.approx(2.0, abs=0.1)
    with pytest.raises(ValueError):
        hill_exponent(x[:3], k=5)


def test_mp_divergence_small():
    p = MPParams(0.5)
    finite = mp_divergence_check(p, 1.0, doublings=3, budget=2 * 10**5, replicates=2, variant="sojourn")
    assert finite.sizes.shape == (4,) and finite.growth.shape == (3,)
    assert finite.final_rel_change < 0.2
    assert 1.3 < finite.tail_exponent < 2.8
    heavy = mp_divergence_check(p, 2.5, doublings=3, budget=2 * 10**5, replicates=2)
    assert np.prod(heavy.growth) > 1.5
    with pytest.raises(ValueError):
        mp_divergence_check(p, 1.0, variant="other")
