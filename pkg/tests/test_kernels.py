import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mvalda import (
    DomainError,
    FeatureSummary,
    KernelContext,
    log_f_v,
    log_f_xv,
    log_likelihood_matrix_v,
)


def exp_density(v, s2):
    # closed form for two degrees of freedom
    return math.exp(-v / s2) / s2


M2 = KernelContext(2, 1.0)


@pytest.mark.parametrize("v,s2", [(1.0, 1.0), (1.0, 2.0), (0.0, 1.0), (3.7, 0.4)])
def test_two_dof_closed_form(v, s2):
    assert log_f_v(v, s2, M2) == pytest.approx(math.log(exp_density(v, s2)), abs=1e-14)


def test_worked_values():
    assert log_f_v(1.0, 1.0, M2) == pytest.approx(-1.0, abs=1e-14)
    assert math.exp(log_f_v(1.0, 2.0, M2)) == pytest.approx(0.303265, abs=1e-6)
    assert log_f_v(0.0, 1.0, M2) == 0.0
    # log(phi(0) * e^-1)
    assert log_f_xv(0.0, 1.0, 0.0, 1.0, M2) == pytest.approx(-1.918939, abs=1e-6)


def test_against_scipy_chi2(rng):
    for _ in range(20):
        m = int(rng.integers(1, 80))
        s2 = rng.uniform(0.1, 10)
        v = rng.uniform(0.01, 20)
        ctx = KernelContext(m, 0.3)
        # V = s2/m * chi2_m
        ref = stats.chi2.logpdf(v * m / s2, m) + math.log(m / s2)
        assert log_f_v(v, s2, ctx) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_zero_v_higher_dof_is_minus_inf():
    assert log_f_v(0.0, 2.0, KernelContext(5, 1.0)) == -np.inf


def test_domain_errors():
    with pytest.raises(DomainError):
        log_f_v(1.0, 0.0, M2)
    with pytest.raises(DomainError):
        log_f_v(-1.0, 1.0, M2)
    with pytest.raises(DomainError):
        log_f_v(0.0, 1.0, KernelContext(1, 1.0))
    with pytest.raises(DomainError):
        KernelContext(0, 1.0)
    with pytest.raises(DomainError):
        KernelContext(3, 0.0)


def test_gaussian_mode():
    ctx = KernelContext(4, 0.5)
    for mu in (-3.0, 0.0, 12.0):
        gauss = log_f_xv(mu, 1.3, mu, 2.0, ctx) - log_f_v(1.3, 2.0, ctx)
        assert gauss == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-14)


def test_factorization(rng):
    ctx = KernelContext(7, 0.25)
    x, v, mu, s2 = rng.normal(), rng.uniform(0.1, 3), rng.normal(), rng.uniform(0.2, 4)
    diff = log_f_xv(x, v, mu, s2, ctx) - log_f_v(v, s2, ctx)
    assert diff == pytest.approx(stats.norm.logpdf(x, mu, math.sqrt(0.25 * s2)), abs=1e-12)


def test_likelihood_matrix():
    s = FeatureSummary([0.0], [1.0], [0.0], [0.0], 2, 2)
    row = log_likelihood_matrix_v(s, [1.0, 2.0])
    np.testing.assert_allclose(row, [[-1.0, -1.19315]], atol=1e-5)
    assert log_likelihood_matrix_v(s, [3.0]).shape == (1, 1)
    dup = log_likelihood_matrix_v(s, [2.0, 2.0])
    assert dup[0, 0] == dup[0, 1]
    with pytest.raises(DomainError):
        log_likelihood_matrix_v(s, [])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 50), st.floats(0.1, 10))
def test_normalization(m, s2):
    ctx = KernelContext(m, 1.0)
    mode = s2 * max(m - 2, 0) / m
    f = lambda v: math.exp(log_f_v(v, s2, ctx))
    total = sum(integrate.quad(f, a, b, epsabs=1e-12, limit=200)[0]
                for a, b in [(0, mode), (mode, mode + 40 * s2), (mode + 40 * s2, np.inf)] if b > a)
    assert total == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.floats(0.01, 100), st.floats(0.01, 100), st.floats(1e-3, 1e3))
def test_scale_equivariance(m, v, s2, s):
    ctx = KernelContext(m, 1.0)
    assert log_f_v(s * v, s * s2, ctx) == pytest.approx(log_f_v(v, s2, ctx) - math.log(s), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0.1, 5), st.floats(-1, 1))
def test_max_over_mu_at_x(x, v, s2, eps):
    ctx = KernelContext(4, 0.2)
    assert log_f_xv(x, v, x, s2, ctx) >= log_f_xv(x, v, x + eps, s2, ctx)


def test_no_nan_and_underflow_saturates():
    ctx = KernelContext(48, 0.08)
    v = np.array([0.0, 1e-300, 1e-8, 1.0, 1e8, 1e300])
    s2 = np.array([1e-6, 1.0, 1e6])
    out = log_f_v(v[:, None], s2[None, :], ctx)
    assert not np.isnan(out).any()
    assert np.isneginf(out[0]).all()
    assert np.exp(out[-1]).max() == 0.0
