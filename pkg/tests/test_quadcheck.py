import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from besqpursuit.besq import GridPolicy
from besqpursuit.quadcheck import (
    ComplexIntegralSpec,
    PoleProximityError,
    droite_identity_check,
    gauche_identity_check,
    integral_closed,
    integral_numeric,
    mellin_from_identities,
    random_specs,
    short_time_rate_check,
    sweep,
    sweep_csv,
)
from besqpursuit.specialfn import ConvergenceError
from besqpursuit.theta import ProcessParams, find_theta


def trapezoid_oracle(g, lam, mu, n=10**6):
    """int_0^inf xi**(g-1) (1-2i xi)**-lam (1+2i xi)**-mu dxi on xi = e^x."""
    # the tails decay like exp(g x) and exp(-(lam + mu - g) x); cut at exp(-40)
    x = np.linspace(-40.0 / g, 40.0 / (lam + mu - g), n)
    xi = np.exp(x)
    z = 2j * xi
    # xi**g (1-z)**-lam (1+z)**-mu, written through logs to stay finite
    log_f = g * x - lam * np.log(1 - z) - mu * np.log(1 + z)
    f = np.exp(log_f)
    return complex(trapezoid(f, x))


def test_spec_validation():
    with pytest.raises(ValueError):
        ComplexIntegralSpec(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ComplexIntegralSpec(2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ComplexIntegralSpec(0.5, -1.0, 2.0)


@pytest.mark.parametrize("g,lam,mu", [(0.5, 1.0, 1.0), (1.7, 0.8, 2.3), (0.3, 0.4, 0.6), (2.5, 2.0, 1.5)])
def test_numeric_against_trapezoid(g, lam, mu):
    num = integral_numeric(ComplexIntegralSpec(g, lam, mu))
    ref = trapezoid_oracle(g, lam, mu)
    assert abs(num - ref) <= 1e-8 * abs(ref)


def test_elementary_value():
    # gamma = lam = mu = 1: int_0^inf dxi / (1 + 4 xi**2) = pi / 4
    v = integral_numeric(ComplexIntegralSpec(1.0, 1.0, 1.0))
    assert v.real == pytest.approx(math.pi / 4, rel=1e-13)
    assert abs(v.imag) < 1e-14


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=0.2, max_value=3.0),
    st.floats(min_value=0.2, max_value=3.0),
    st.floats(min_value=0.05, max_value=0.95),
)
def test_swap_gives_conjugate(lam, mu, frac):
    # gamma and lam + mu - gamma at least 0.05, the documented domain
    g = min(max(frac * (lam + mu), 0.05), lam + mu - 0.05)
    sp = ComplexIntegralSpec(g, lam, mu)
    assert integral_numeric(sp.swapped()) == pytest.approx(integral_numeric(sp).conjugate(), rel=1e-11)


@pytest.mark.parametrize("g,lam,mu", [(0.3, 0.8, 1.7), (1.4, 1.1, 0.9), (2.6, 2.2, 1.3), (0.9, 0.25, 2.8)])
def test_closed_matches_numeric(g, lam, mu):
    sp = ComplexIntegralSpec(g, lam, mu)
    num, clo = integral_numeric(sp), integral_closed(sp)
    assert abs(num - clo) <= 1e-8 * abs(clo)


def test_closed_refuses_integer_gamma():
    with pytest.raises(PoleProximityError):
        integral_closed(ComplexIntegralSpec(2.0, 1.5, 1.5))
    with pytest.raises(PoleProximityError):
        integral_closed(ComplexIntegralSpec(2.0 + 1e-9, 1.5, 1.5))


@pytest.mark.parametrize("lam,mu", [(1.0, 1.0), (1.0, 1.75), (2.5, 1.75), (0.6, 2.1)])
def test_gamma_one_limit(lam, mu):
    sp = ComplexIntegralSpec(1.0, lam, mu)
    clo, num = integral_closed(sp), integral_numeric(sp)
    assert clo.real == pytest.approx(
        math.pi * math.gamma(lam + mu - 1) / (math.gamma(lam) * math.gamma(mu)) * 2.0 ** (-(lam + mu)), rel=1e-14
    )
    assert abs(clo - num) <= 1e-8 * abs(num)


@pytest.mark.parametrize("g,lam,mu", [(0.05, 0.2, 0.2), (0.35, 0.2, 0.2), (0.05, 3.0, 0.1)])
def test_strong_endpoint_singularities(g, lam, mu):
    sp = ComplexIntegralSpec(g, lam, mu)
    num = integral_numeric(sp)
    assert np.isfinite(num.real) and np.isfinite(num.imag)
    assert abs(num - integral_closed(sp)) <= 1e-8 * abs(num)


def test_convergence_error_reports_achieved():
    with pytest.raises(ConvergenceError) as info:
        integral_numeric(ComplexIntegralSpec(0.05, 0.2, 0.2), max_level=1)
    assert info.value.achieved > 1e-12
    with pytest.raises(ValueError):
        integral_numeric(ComplexIntegralSpec(1.0, 1.0, 1.0), tol=1e-16)


@pytest.mark.parametrize("a,b,nu", [(2.0, 2.0, 0.5), (5.0, 3.0, 0.25), (1.0, 3.0, 0.7)])
def test_gamma_one_identity(a, b, nu):
    lhs, rhs = gauche_identity_check(a, b, nu)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


@pytest.mark.parametrize("a,b,nu", [(2.0, 2.0, 0.5), (5.0, 3.0, 0.25), (3.0, 1.0, 0.6)])
def test_companion_identity(a, b, nu):
    lhs, rhs = droite_identity_check(a, b, nu)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_identity_domain():
    with pytest.raises(ValueError):
        gauche_identity_check(2.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        droite_identity_check(2.0, 2.0, 0.0)


@pytest.mark.parametrize("a,b", [(2.0, 2.0), (3.0, 1.0), (1.0, 3.0), (0.6, 4.2)])
def test_mellin_rebuilt_from_identities(a, b):
    p = ProcessParams(a, b)
    th = find_theta(p).theta
    for s in (0.2 * min(th, 1.0), 0.8 * min(th, 1.0)):
        got, want = mellin_from_identities(p, 2.0, s)
        assert abs(got - want) <= 1e-9 * abs(want)


def test_random_specs_are_valid_and_seeded():
    a = random_specs(50, seed=3)
    assert a == random_specs(50, seed=3)
    for sp in a:
        assert abs(sp.gamma_exp - round(sp.gamma_exp)) >= 0.05
        assert 0.2 <= sp.lambda_exp <= 3.0 and 0.2 <= sp.mu_exp <= 3.0


def test_sweep_fifty_triples():
    rows = sweep(random_specs(50, seed=1))
    assert max(r[-1] for r in rows) <= 1e-8
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "gamma,lambda,mu,numeric_re,numeric_im,closed_re,closed_im,relerr"
    assert len(text.splitlines()) == 51


def test_short_time_rate_table():
    rows, limit = short_time_rate_check(2.0, 1.0, 4.0, [1.0, 0.5, 0.25], 20_000, seed=2, grid=GridPolicy())
    assert limit == -0.5
    assert [r.t for r in rows] == [1.0, 0.5, 0.25]
    assert all(r.usable for r in rows)
    assert all(r.rate < limit for r in rows)
    assert rows[0].p_hat > rows[1].p_hat > rows[2].p_hat


def test_short_time_rate_validation():
    with pytest.raises(ValueError):
        short_time_rate_check(2.0, 1.0, 1.0, [1.0], 10, seed=1)
    with pytest.raises(ValueError):
        short_time_rate_check(2.0, 1.0, 4.0, [0.5, 1.0], 10, seed=1)
