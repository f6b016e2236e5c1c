import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satqkd.source import SourceConfig, check_two_decoy_constraint, poisson_pn, poisson_tail


@pytest.mark.parametrize("mu,n,expected", [
    (0.0, 0, 1.0),
    (0.1, 0, math.exp(-0.1)),
    (0.2, 2, 0.02 * math.exp(-0.2)),
    (3.0, 5, 3.0**5 * math.exp(-3.0) / 120),
])
def test_pn_values(mu, n, expected):
    assert poisson_pn(mu, n) == pytest.approx(expected, rel=1e-13)


def test_pn_zero_mean_positive_n():
    assert poisson_pn(0.0, 3) == 0.0


def test_tail_values():
    assert poisson_tail(0.1, 2) == pytest.approx(1 - math.exp(-0.1) * 1.1, rel=1e-12)
    assert poisson_tail(0.2, 3) == pytest.approx(1 - math.exp(-0.2) * 1.22, rel=1e-10)
    assert poisson_tail(0.2, 3) == pytest.approx(0.0011485, rel=1e-4)
    assert poisson_tail(0.7, 0) == 1.0


@pytest.mark.parametrize("bad", [(-0.1, 0), (0.1, -1)])
def test_negative_inputs_rejected(bad):
    with pytest.raises(ValueError):
        poisson_pn(*bad)


def test_vectorised_matches_scalar():
    mus = np.linspace(0.01, 2, 17)
    arr = poisson_tail(mus, 3)
    assert np.allclose(arr, [poisson_tail(float(m), 3) for m in mus], rtol=0, atol=0)


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(0.0, 30.0), cutoff=st.integers(0, 60))
def test_normalisation(mu, cutoff):
    head = sum(poisson_pn(mu, n) for n in range(cutoff + 1))
    assert abs(head + poisson_tail(mu, cutoff + 1) - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(1e-6, 0.05), n_min=st.integers(2, 4))
def test_small_mean_tail_accuracy(mu, n_min):
    mpmath.mp.dps = 40
    m = mpmath.mpf(mu)
    exact = 1 - mpmath.exp(-m) * mpmath.fsum(m**k / mpmath.factorial(k) for k in range(n_min))
    assert poisson_tail(mu, n_min) == pytest.approx(float(exact), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.001, 5.0), b=st.floats(0.001, 5.0), n=st.integers(1, 6))
def test_tail_monotone(a, b, n):
    lo, hi = sorted((a, b))
    assert poisson_tail(lo, n) <= poisson_tail(hi, n) + 1e-15
    assert poisson_tail(lo, n + 1) <= poisson_tail(lo, n)


def test_source_config():
    src = SourceConfig(0.5, (0.0, 0.05, 0.15))
    assert src.weak_decoys == (0.05, 0.15)
    src.check_two_decoy()
    with pytest.raises(ValueError):
        SourceConfig(0.5, (0.2, 0.1))
    with pytest.raises(ValueError):
        SourceConfig(-1.0)
    with pytest.raises(ValueError):
        SourceConfig(0.5, signal_fraction=0.9, vacuum_fraction=0.2)
    with pytest.raises(ValueError):
        SourceConfig(0.3, (0.1, 0.2)).check_two_decoy()


def test_two_decoy_constraint():
    check_two_decoy_constraint(0.5, 0.1, 0.3)
    for args in [(0.5, 0.3, 0.1), (0.4, 0.1, 0.3), (0.5, 0.0, 0.1)]:
        with pytest.raises(ValueError):
            check_two_decoy_constraint(*args)
