import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krglm.family import (GAUSSIAN, LOGISTIC, POISSON, WEIGHT_FLOOR,
                          FamilyDomainError, get_family)

FAMILIES = [GAUSSIAN, LOGISTIC, POISSON]
finite = st.floats(-10, 10, allow_nan=False)


def test_log_partition_examples():
    assert LOGISTIC.log_partition(0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert GAUSSIAN.log_partition(3.0) == 4.5
    assert POISSON.log_partition(0.0) == 1.0


def test_mean_examples():
    assert LOGISTIC.mean(0.0) == 0.5
    assert GAUSSIAN.mean(-2.5) == -2.5
    expected = float(1 / (1 + mpmath.exp(-2)))
    assert LOGISTIC.mean(2.0) == pytest.approx(expected, rel=1e-14)
    assert LOGISTIC.mean(2.0) == pytest.approx(0.880797, abs=5e-7)


def test_variance_examples():
    assert LOGISTIC.variance(0.0) == 0.25
    assert GAUSSIAN.variance(17.0) == 1.0
    assert POISSON.variance(1.0) == pytest.approx(math.e, rel=1e-15)


def test_bregman_examples():
    assert GAUSSIAN.bregman(3.0, 1.0) == 2.0
    for u in (-7.0, 0.0, 0.3, 9.0):
        assert LOGISTIC.bregman(u, u) == 0.0
    assert POISSON.bregman(1.0, 0.0) == pytest.approx(math.e - 2, rel=1e-14)


def test_irls_step_terms_examples():
    for eta, y in [(-3.0, 2.0), (0.0, 0.0), (5.0, -1.5)]:
        w, z = GAUSSIAN.irls_step_terms(eta, y)
        assert (w, z) == (1.0, y)
    assert LOGISTIC.irls_step_terms(0.0, 1.0) == (0.25, 2.0)
    assert POISSON.irls_step_terms(0.0, 3.0) == (1.0, 2.0)


def test_weight_floor_applies_to_saturated_logistic():
    w, z = LOGISTIC.irls_step_terms(np.array([60.0, -60.0]), np.array([1.0, 0.0]))
    assert np.all(w == WEIGHT_FLOOR)
    assert np.all(np.isfinite(z))


def test_logistic_log_partition_overflow_safe():
    assert LOGISTIC.log_partition(800.0) == 800.0
    assert LOGISTIC.log_partition(-800.0) == 0.0
    assert LOGISTIC.mean(800.0) == 1.0
    assert LOGISTIC.mean(-30.0) > 0


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.name)
def test_nonfinite_input_is_domain_error(family):
    for bad in (np.nan, np.inf, -np.inf):
        with pytest.raises(FamilyDomainError):
            family.mean(bad)
        with pytest.raises(FamilyDomainError):
            family.log_partition(bad)


def test_poisson_score_cap():
    POISSON.mean(50.0)
    with pytest.raises(FamilyDomainError):
        POISSON.mean(50.5)


def test_response_ranges():
    with pytest.raises(FamilyDomainError):
        LOGISTIC.irls_step_terms(0.0, 1.5)
    with pytest.raises(FamilyDomainError):
        POISSON.irls_step_terms(0.0, -1.0)
    with pytest.raises(FamilyDomainError):
        GAUSSIAN.irls_step_terms(0.0, np.nan)


def test_get_family():
    assert get_family("Logistic") is LOGISTIC
    with pytest.raises(ValueError):
        get_family("gamma")


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.name)
def test_finite_differences(family):
    u = np.linspace(-10, 10, 2001)
    h = 1e-5
    d1 = (family.log_partition(u + h) - family.log_partition(u - h)) / (2 * h)
    m = family.mean(u)
    assert np.all(np.abs(m - d1) <= 1e-6 * (1 + np.abs(m)))
    d2 = (family.mean(u + h) - family.mean(u - h)) / (2 * h)
    v = family.variance(u)
    assert np.all(np.abs(v - d2) <= 1e-6 * (1 + np.abs(v)))


def test_curvature_bounds():
    u = np.linspace(-40, 40, 100001)
    assert np.all(LOGISTIC.variance(u) <= 0.25 + 1e-12)
    assert np.all(LOGISTIC.variance(u) > 0)
    assert np.all(GAUSSIAN.variance(u) == 1.0)
    assert np.all(POISSON.variance(np.linspace(-10, 10, 101)) > 0)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.name)
def test_bregman_nonnegative_random_pairs(family, rng):
    u, v = rng.uniform(-10, 10, (2, 10_000))
    d = family.bregman(u, v)
    assert np.all(d >= 0)
    assert np.all(np.abs(family.bregman(u, u)) <= 1e-12)


def test_gaussian_bregman_is_half_square(rng):
    u, v = rng.uniform(-10, 10, (2, 1000))
    assert np.array_equal(GAUSSIAN.bregman(u, v), (u - v) ** 2 / 2)


def test_logistic_mean_matches_mpmath():
    for u in np.linspace(-30, 30, 61):
        ref = float(1 / (1 + mpmath.exp(-mpmath.mpf(float(u)))))
        assert LOGISTIC.mean(u) == pytest.approx(ref, rel=1e-13)
        ref_a = float(mpmath.log1p(mpmath.exp(mpmath.mpf(float(u)))))
        assert LOGISTIC.log_partition(u) == pytest.approx(ref_a, rel=1e-13)


def test_scalar_in_scalar_out():
    assert isinstance(LOGISTIC.mean(0.3), float)
    assert LOGISTIC.mean(np.array([0.3])).shape == (1,)


@settings(max_examples=200, deadline=None)
@given(u=finite, v=finite)
def test_bregman_property(u, v):
    for family in FAMILIES:
        d = family.bregman(u, v)
        assert d >= 0
        if u == v:
            assert d == 0


@settings(max_examples=200, deadline=None)
@given(eta=finite, y=st.floats(0, 1))
def test_logistic_pseudo_response_property(eta, y):
    w, z = LOGISTIC.irls_step_terms(eta, y)
    assert WEIGHT_FLOOR <= w <= 0.25
    # w * (z - eta) reproduces the score residual
    assert w * (z - eta) == pytest.approx(y - LOGISTIC.mean(eta), abs=1e-9)
