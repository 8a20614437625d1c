import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitspec.sources import MarkovSpec, PotentialTable
from hitspec.thermo import (UNDEFINED, FlatSpectrum, OutOfRange, asymptotic_variance, brute_force_partition,
                            default_q_grid, entropy, exact_curve, hitting_spectrum_W, nonoverlap_spectrum_Rhat,
                            partition_sum, pressure, pressure_2phi, rate_function, reduced_spectrum, renyi_M,
                            twisted_slope, u0_bound)

B73 = MarkovSpec.bernoulli([0.7, 0.3])
B55 = MarkovSpec.bernoulli([0.5, 0.5])
M1 = MarkovSpec(np.array([[0.9, 0.1], [0.2, 0.8]]), order=1)
M2 = MarkovSpec(np.random.default_rng(7).dirichlet([2, 2, 2], 9), order=2)


def test_pressure_examples():
    assert pressure(PotentialTable(2, 1, np.log([0.5, 0.5]))) == pytest.approx(0.0, abs=1e-12)
    assert pressure(PotentialTable(2, 1, [1.3, -4.0]), 0.0) == pytest.approx(np.log(2), abs=1e-12)
    assert pressure(PotentialTable(2, 1, np.log([0.7, 0.3])), 2.0) == pytest.approx(-0.544727, abs=1e-6)


def test_closed_forms():
    assert renyi_M(B73, 2) == pytest.approx(1.560648, abs=1e-6)
    assert pressure_2phi(B73) == pytest.approx(-0.544727, abs=1e-6)
    assert entropy(B73) == pytest.approx(0.610864, abs=1e-6)
    assert asymptotic_variance(B73) == pytest.approx(0.150762, abs=1e-6)
    assert renyi_M(B73, 0) == pytest.approx(0.0, abs=1e-12)
    assert renyi_M(B73, 1) == pytest.approx(np.log(2), abs=1e-12)


@pytest.mark.parametrize("q", [-2.5, -1, 0, 0.5, 3])
def test_uniform_source(q):
    assert renyi_M(B55, q) == pytest.approx(q * np.log(2), abs=1e-12)
    assert asymptotic_variance(B55) == pytest.approx(0.0, abs=1e-12)
    if q < -1:
        assert hitting_spectrum_W(B55, q) == pytest.approx(-np.log(2), abs=1e-12)


def test_markov_entropy_by_hand():
    H = lambda p: -sum(x * np.log(x) for x in p)
    assert entropy(M1) == pytest.approx(2 / 3 * H([0.9, 0.1]) + 1 / 3 * H([0.2, 0.8]), abs=1e-13)


def test_W_piecewise_and_continuity():
    assert hitting_spectrum_W(B73, -2) == pytest.approx(-0.544727, abs=1e-6)
    assert hitting_spectrum_W(B73, -1) == pytest.approx(pressure_2phi(B73), abs=1e-12)
    for spec in (B73, M1, M2):
        assert renyi_M(spec, -1) == pytest.approx(pressure_2phi(spec), abs=1e-10)


def test_Rhat():
    assert nonoverlap_spectrum_Rhat(B73, 1) == pytest.approx(np.log(2), abs=1e-12)
    assert nonoverlap_spectrum_Rhat(B73, -2) == pytest.approx(-0.544727, abs=1e-6)
    assert nonoverlap_spectrum_Rhat(B73, -0.5) is UNDEFINED
    assert np.isnan(float(UNDEFINED)) and not UNDEFINED


@pytest.mark.parametrize("spec", [B73, M1, M2])
def test_kink_slope(spec):
    """Right slope at -1 matches the twisted mean; left slope is zero."""
    d = 1e-6
    right = (hitting_spectrum_W(spec, -1 + d) - hitting_spectrum_W(spec, -1)) / d
    left = (hitting_spectrum_W(spec, -1) - hitting_spectrum_W(spec, -1 - d)) / d
    assert left == 0.0
    assert right == pytest.approx(twisted_slope(spec), abs=1e-5)
    assert twisted_slope(spec) > 0


def test_twisted_slope_bernoulli_closed_form():
    p = np.array([0.7, 0.3])
    w = p ** 2 / (p ** 2).sum()
    assert twisted_slope(B73) == pytest.approx(-(w * np.log(p)).sum(), abs=1e-12)
    assert u0_bound(B73) == pytest.approx(abs(twisted_slope(B73) - entropy(B73)), abs=1e-15)


@pytest.mark.parametrize("spec", [B73, M1, M2])
def test_derivatives_at_zero(spec):
    d = 1e-4
    Mp = (renyi_M(spec, d) - renyi_M(spec, -d)) / (2 * d)
    assert Mp == pytest.approx(entropy(spec), abs=1e-6)
    d = 1e-3
    Mpp = (renyi_M(spec, d) - 2 * renyi_M(spec, 0) + renyi_M(spec, -d)) / d ** 2
    assert Mpp == pytest.approx(asymptotic_variance(spec), abs=1e-4)


@pytest.mark.parametrize("spec", [B73, M1, M2])
def test_M_convex_increasing(spec):
    q = default_q_grid()
    v = exact_curve(spec, "exact-M", q).values
    assert np.all(np.diff(v) >= -1e-12)
    assert np.all(v[2:] - 2 * v[1:-1] + v[:-2] >= -1e-10)


@pytest.mark.parametrize("spec", [B73, M1, M2])
@pytest.mark.parametrize("q", [-3, -1, 0, 0.5, 2])
def test_partition_vs_bruteforce(spec, q):
    for n in (1, 2, 3, 6):
        assert partition_sum(spec, n, q) == pytest.approx(brute_force_partition(spec, n, q), abs=1e-12)
    assert partition_sum(spec, 5, 0) == pytest.approx(0.0, abs=1e-12)


def test_partition_examples():
    assert partition_sum(B73, 1, 2) == pytest.approx(1.560648, abs=1e-6)
    q = 1.7
    assert brute_force_partition(B55, 1, q) == pytest.approx((1 - q) * np.log(0.5) + np.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        brute_force_partition(B55, 21, 1.0)


@pytest.mark.parametrize("q", [-2.0, 0.5, 2.0])
def test_partition_converges(q):
    errs = [abs(partition_sum(M1, n, q) / n - renyi_M(M1, q)) for n in range(4, 15)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    C = max(e * n for e, n in zip(errs, range(4, 15)))
    assert all(e <= C / n + 1e-12 for e, n in zip(errs, range(4, 15)))


def test_reduced_spectrum():
    assert reduced_spectrum(B73, 0) == pytest.approx(entropy(B73))
    assert reduced_spectrum(B73, 2, "W") == pytest.approx(renyi_M(B73, 2) / 2)
    assert reduced_spectrum(B73, -2, "W") == pytest.approx(pressure_2phi(B73) / -2)


def test_rate_function():
    u = np.linspace(0, 0.5, 26)
    r = rate_function(B73, "above", u)
    assert r.rate[0] == 0.0
    assert np.all(np.diff(r.rate) >= -1e-9)
    assert np.all(r.rate[2:] - 2 * r.rate[1:-1] + r.rate[:-2] >= -1e-7)
    below = rate_function(B73, "below", [0.0, 0.5 * u0_bound(B73)])
    assert below.rate[0] == 0.0 and below.rate[1] > 0
    with pytest.raises(OutOfRange) as e:
        rate_function(B73, "below", [2 * u0_bound(B73)])
    assert e.value.u0 == pytest.approx(u0_bound(B73))
    with pytest.raises(FlatSpectrum):
        rate_function(B55, "above", [0.1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-3, 3))
def test_W_over_q_matches_M_over_q(a, b, q):
    spec = MarkovSpec(np.array([[a, 1 - a], [b, 1 - b]]), order=1)
    if abs(q) < 1e-3:
        return
    if q >= -1:
        assert reduced_spectrum(spec, q, "W") == pytest.approx(reduced_spectrum(spec, q, "M"), abs=1e-12)
    else:
        assert reduced_spectrum(spec, q, "W") == pytest.approx(pressure_2phi(spec) / q, abs=1e-12)
