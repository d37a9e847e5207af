"""Real-argument special functions.

Gamma-family helpers, Pochhammer symbols, the Gauss hypergeometric series
evaluated at z = 1/2, and the modified Bessel functions I and K.

The hypergeometric series is summed here directly because every quantity in
the package (the persistence exponent, the Mellin transform, the integral
identities) is built on it.  Gamma and Bessel evaluations are delegated to the
standard library and :mod:`scipy.special`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import special as _sp

__all__ = [
    "SeriesControl",
    "SeriesError",
    "PoleError",
    "ConvergenceError",
    "DEFAULT_CONTROL",
    "pochhammer",
    "log_gamma",
    "gamma_sign",
    "rgamma",
    "beta",
    "hyp2f1_half",
    "hyp2f1_half_terms",
    "hyp2f1_half_regularized",
    "bessel_i",
    "bessel_k",
    "bessel_i_scaled",
    "bessel_k_scaled",
]


class SeriesError(ArithmeticError):
    """Base class for failures of the series evaluators."""


class PoleError(SeriesError):
    """Raised when the lower hypergeometric parameter sits on a pole."""


class ConvergenceError(SeriesError):
    """Raised when a series does not converge within its term budget."""

    def __init__(self, message: str, partial_sum: float = float("nan"), terms: int = 0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.terms = terms


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for hypergeometric sums.

    The series stops once three consecutive terms fall below
    ``rel_tol * |partial sum|``.
    """

    rel_tol: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1e-3):
            raise ValueError(f"rel_tol must lie in (0, 1e-3), got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 64:
            raise ValueError(f"max_terms must be an integer >= 64, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``(a)_n = a (a+1) ... (a+n-1)``.

    Overflow propagates as a signed infinity.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a nonnegative integer, got {n}")
    out = 1.0
    for k in range(int(n)):
        out *= a + k
        if out == 0.0 or math.isinf(out):
            break
    return out


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def gamma_sign(x: float) -> float:
    """Sign of Gamma(x) for real non-pole x."""
    if x > 0:
        return 1.0
    if x == math.floor(x):
        raise PoleError(f"Gamma has a pole at {x}")
    return -1.0 if math.floor(x) % 2 else 1.0


def rgamma(x: float) -> float:
    """Reciprocal Gamma function, zero at the poles of Gamma."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    return gamma_sign(x) * math.exp(-math.lgamma(x))


def beta(x: float, y: float) -> float:
    """Euler Beta function ``Gamma(x) Gamma(y) / Gamma(x+y)`` for x, y > 0."""
    if not (x > 0 and y > 0):
        raise ValueError(f"beta requires x > 0 and y > 0, got ({x}, {y})")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def _nonpositive_int(v: float) -> bool:
    return v <= 0 and v == math.floor(v)


def hyp2f1_half_terms(a: float, b: float, c: float) -> Iterator[float]:
    """Yield the terms of 2F1(a, b; c; 1/2) from the running recurrence.

    Stops (after yielding the final zero) when the series terminates.
    """
    term = 1.0
    n = 0
    while True:
        yield term
        num = (a + n) * (b + n)
        if num == 0.0:
            return
        den = (c + n) * (n + 1)
        if den == 0.0:
            raise PoleError(f"2F1 lower parameter c={c} hits a pole at term {n + 1}")
        term = term * num / den * 0.5
        n += 1


def hyp2f1_half(a: float, b: float, c: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; 1/2)`` by direct summation.

    The term ratio tends to 1/2, so the defining series converges for all
    real parameters with ``c`` off the nonpositive integers (unless ``a`` or
    ``b`` terminates the series first).

    Raises
    ------
    PoleError
        If ``c`` is a pole that the series reaches.
    ConvergenceError
        If ``ctl.max_terms`` terms do not meet the tolerance.
    """
    if _nonpositive_int(c):
        # allowed only if the series terminates before reaching (c)_n = 0
        stops = [-v for v in (a, b) if _nonpositive_int(v)]
        if not stops or min(stops) > -c:
            raise PoleError(f"2F1 lower parameter c={c} is a pole")
    total = 0.0
    small = 0
    for n, term in enumerate(hyp2f1_half_terms(a, b, c)):
        total += term
        if term == 0.0 and n > 0:
            return total
        if abs(term) <= ctl.rel_tol * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
        if n + 1 >= ctl.max_terms:
            raise ConvergenceError(
                f"2F1({a}, {b}; {c}; 1/2) did not converge in {ctl.max_terms} terms",
                partial_sum=total,
                terms=n + 1,
            )
    return total


def hyp2f1_half_regularized(a: float, b: float, c: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``2F1(a, b; c; 1/2) / Gamma(c)``, finite for every real ``c``.

    At ``c = -n`` the limit is
    ``(a)_{n+1} (b)_{n+1} / (n+1)! * 2**-(n+1) * 2F1(a+n+1, b+n+1; n+2; 1/2)``.
    """
    if _nonpositive_int(c):
        n = int(-c)
        lead = pochhammer(a, n + 1) * pochhammer(b, n + 1) / math.factorial(n + 1) * 0.5 ** (n + 1)
        if lead == 0.0:
            return 0.0
        return lead * hyp2f1_half(a + n + 1, b + n + 1, n + 2.0, ctl)
    return rgamma(c) * hyp2f1_half(a, b, c, ctl)


def bessel_i(nu: float, z: float) -> float:
    """Modified Bessel function of the first kind ``I_nu(z)``, z >= 0, nu > -1."""
    if z < 0:
        raise ValueError(f"bessel_i requires z >= 0, got {z}")
    if nu <= -1:
        raise ValueError(f"bessel_i requires nu > -1, got {nu}")
    return float(_sp.iv(nu, z))


def bessel_k(nu: float, z: float) -> float:
    """Modified Bessel function of the second kind ``K_nu(z)``, z > 0."""
    if not z > 0:
        raise ValueError(f"bessel_k requires z > 0, got {z}")
    return float(_sp.kv(nu, z))


def bessel_i_scaled(nu, z):
    """``exp(-z) I_nu(z)``, vectorised; avoids overflow for large z."""
    return _sp.ive(nu, np.asarray(z, dtype=float))


def bessel_k_scaled(nu, z):
    """``exp(z) K_nu(z)``, vectorised; avoids underflow for large z."""
    return _sp.kve(nu, np.asarray(z, dtype=float))
