"""Quadrature checks of the analytic identities.

The central object is

    I(gamma, lam, mu) = int_0^inf xi**(gamma-1) (1 - 2i xi)**-lam (1 + 2i xi)**-mu dxi

for ``lam, mu > 0`` and ``0 < gamma < lam + mu``.  With ``xi = tan(u)/2``
the integrand becomes

    2**-gamma sin(u)**(gamma-1) cos(u)**(lam+mu-gamma-1) exp(i (lam-mu) u)

on ``(0, pi/2)``: a smooth function with algebraic singularities at both
ends, which tanh-sinh (double-exponential) quadrature integrates to near
machine precision.  The closed form is a Gamma/Beta combination of two
hypergeometric values at 1/2.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .besq import GridPolicy, simulate_hitting_ensemble
from .specialfn import ConvergenceError, hyp2f1_half, hyp2f1_half_regularized, rgamma
from .theta import ProcessParams, f_ab, format_float

__all__ = [
    "ComplexIntegralSpec",
    "PoleProximityError",
    "integral_numeric",
    "integral_closed",
    "gauche_identity_check",
    "droite_identity_check",
    "mellin_from_identities",
    "short_time_rate_check",
    "RateRow",
    "random_specs",
    "sweep",
    "sweep_csv",
]

_GAMMA_POLE_GUARD = 1e-8
_LIMIT_STEP = 1e-3


class PoleProximityError(ArithmeticError):
    """The closed form is evaluated too close to an integer exponent."""


@dataclass(frozen=True)
class ComplexIntegralSpec:
    gamma_exp: float
    lambda_exp: float
    mu_exp: float

    def __post_init__(self):
        g, l, m = self.gamma_exp, self.lambda_exp, self.mu_exp
        if not (l > 0 and m > 0 and 0 < g < l + m):
            raise ValueError(f"need lambda>0, mu>0, 0<gamma<lambda+mu; got ({g}, {l}, {m})")

    def swapped(self) -> "ComplexIntegralSpec":
        return ComplexIntegralSpec(self.gamma_exp, self.mu_exp, self.lambda_exp)


def _ts_span(spec: ComplexIntegralSpec) -> float:
    # integrand decays like exp(-2 |x| m) in the node variable; stop at exp(-800)
    m = min(spec.gamma_exp, spec.lambda_exp + spec.mu_exp - spec.gamma_exp)
    return math.asinh(400.0 / m / (0.5 * math.pi)) + 0.5


def _ts_level(spec: ComplexIntegralSpec, h: float, odd_only: bool, t_max: Optional[float] = None) -> complex:
    """Tanh-sinh partial sum on ``(0, pi/2)`` for nodes ``k h``.

    Returns the sum of weight * integrand without the factor ``h``.  Weight
    and integrand are combined in log space: near an endpoint the distance
    ``d`` underflows long before ``w d**(gamma-1)`` does.
    """
    g = spec.gamma_exp
    p = spec.lambda_exp + spec.mu_exp - g - 1.0
    om = spec.lambda_exp - spec.mu_exp
    if t_max is None:
        t_max = _ts_span(spec)
    n = int(t_max / h)
    k = np.arange(-n, n + 1)
    if odd_only:
        k = k[k % 2 != 0]
    t = k * h
    ax = 0.5 * math.pi * np.abs(np.sinh(t))
    e = np.exp(-2.0 * ax)
    # distance from u to the nearer endpoint, and its log
    log_d = math.log(0.5 * math.pi) - 2.0 * ax - np.log1p(e)
    d = np.exp(log_d)
    log_sin_d = np.where(d < 1e-4, log_d + np.log1p(-(d * d) / 6.0), np.log(np.sin(np.maximum(d, 1e-300))))
    log_cos_d = np.log(np.cos(d))
    left = t < 0
    log_sin_u = np.where(left, log_sin_d, log_cos_d)
    log_cos_u = np.where(left, log_cos_d, log_sin_d)
    u = np.where(left, d, 0.5 * math.pi - d)
    # du/dt = pi^2/8 cosh(t) sech(x)^2 with sech(x)^2 = 4 e / (1 + e)^2
    log_w = math.log(math.pi**2 / 2.0) + np.log(np.cosh(t)) - 2.0 * ax - 2.0 * np.log1p(e)
    vals = np.exp(log_w + (g - 1.0) * log_sin_u + p * log_cos_u) * np.exp(1j * om * u)
    return complex(vals.sum())


def integral_numeric(
    spec: ComplexIntegralSpec, tol: float = 1e-12, max_level: int = 12
) -> complex:
    """Numerical value of ``I(gamma, lam, mu)``.

    Tanh-sinh quadrature with step halving; stops when two successive
    levels agree to ``tol`` relative.

    Raises
    ------
    ConvergenceError
        If ``max_level`` halvings do not reach ``tol``; the achieved error
        is attached as ``partial_sum``'s companion attribute ``achieved``.
    """
    if tol < 1e-14:
        raise ValueError("tol must be >= 1e-14")
    scale = 2.0 ** (-spec.gamma_exp)
    h = 0.5
    total = _ts_level(spec, h, odd_only=False)
    prev = h * total
    err = float("inf")
    for _ in range(max_level):
        h *= 0.5
        total += _ts_level(spec, h, odd_only=True)
        cur = h * total
        err = abs(cur - prev)
        if err <= tol * abs(cur):
            return scale * cur
        prev = cur
    exc = ConvergenceError(
        f"tanh-sinh did not reach tol={tol} for {spec}", partial_sum=abs(scale * prev), terms=max_level
    )
    exc.achieved = err / abs(prev) if prev else float("inf")
    raise exc


def _closed_generic(g: float, lam: float, mu: float) -> complex:
    # Gamma(g) Gamma(lam+mu-g) / (Gamma(lam) Gamma(mu)) * [...]
    pref = math.gamma(g) * math.gamma(lam + mu - g) * rgamma(lam) * rgamma(mu)
    # B(x, 1-g) 2F1(..; x+1-g; 1/2) = Gamma(x) Gamma(1-g) * regularised 2F1, continued to g > 1
    b1f1 = math.gamma(lam) * math.gamma(1.0 - g) * hyp2f1_half_regularized(1.0 - mu, lam, lam - g + 1.0)
    b2f2 = math.gamma(mu) * math.gamma(1.0 - g) * hyp2f1_half_regularized(1.0 - lam, mu, mu - g + 1.0)
    rot = 2.0 ** (-g)
    t1 = rot * cmath.exp(-0.5j * math.pi * g) * b1f1 * 2.0 ** (-lam)
    t2 = rot * cmath.exp(0.5j * math.pi * g) * b2f2 * 2.0 ** (-mu)
    return pref * (t1 + t2)


def integral_closed(spec: ComplexIntegralSpec) -> complex:
    """Closed form of ``I(gamma, lam, mu)``.

    Integer ``gamma`` is a removable singularity of the formula (the Beta
    factors have poles that cancel).  It is refused except at ``gamma = 1``:
    there the real part is the limit
    ``pi Gamma(lam+mu-1) / (Gamma(lam) Gamma(mu)) 2**-(lam+mu)`` and the
    imaginary part is the Richardson-extrapolated symmetric average of the
    formula at ``1 +- h`` and ``1 +- 2h``.

    Raises
    ------
    PoleProximityError
        If ``gamma`` lies within 1e-8 of an integer other than 1.
    """
    g, lam, mu = spec.gamma_exp, spec.lambda_exp, spec.mu_exp
    gi = round(g)
    if abs(g - gi) <= _GAMMA_POLE_GUARD:
        if gi != 1:
            raise PoleProximityError(
                f"gamma={g} is within {_GAMMA_POLE_GUARD} of the integer {gi}; "
                "only the gamma = 1 limit is available"
            )
        re = math.pi * math.gamma(lam + mu - 1.0) * rgamma(lam) * rgamma(mu) * 2.0 ** (-(lam + mu))
        h = _LIMIT_STEP
        a1 = 0.5 * (_closed_generic(1 - h, lam, mu) + _closed_generic(1 + h, lam, mu))
        a2 = 0.5 * (_closed_generic(1 - 2 * h, lam, mu) + _closed_generic(1 + 2 * h, lam, mu))
        im = (4.0 * a1.imag - a2.imag) / 3.0
        return complex(re, im)
    return _closed_generic(g, lam, mu)


def gauche_identity_check(alpha: float, beta: float, nu: float, tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of

        Im(i int_0^inf (1-2i xi)**(-alpha/2) (1+2i xi)**(nu-1-beta/2) dxi)
          = pi Gamma((alpha+beta)/2 - nu) / (Gamma(alpha/2) Gamma(beta/2+1-nu))
            * 2**(nu - (alpha+beta)/2 - 1).

    The left side is ``Re I(1, alpha/2, 1 + beta/2 - nu)`` by quadrature.
    """
    if not (0 < nu < 1 and nu < 0.5 * (alpha + beta)):
        raise ValueError("need 0 < nu < 1 and nu < (alpha+beta)/2")
    spec = ComplexIntegralSpec(1.0, 0.5 * alpha, 1.0 + 0.5 * beta - nu)
    lhs = integral_numeric(spec, tol).real
    A = 0.5 * (alpha + beta)
    rhs = math.pi * math.gamma(A - nu) * rgamma(0.5 * alpha) * rgamma(0.5 * beta + 1 - nu) * 2.0 ** (nu - A - 1)
    return lhs, rhs


def droite_identity_check(alpha: float, beta: float, nu: float, tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of the companion identity

        Im(e^{i pi nu/2} I(2-nu, 1+alpha/2-nu, 1+beta/2-nu))
          = -Gamma(2-nu) Gamma(A-nu) / Gamma(beta/2+1-nu) 2**(nu-2) sin(pi nu)
            Gamma(nu-1) / Gamma(alpha/2) 2**(nu-1-alpha/2)
            2F1(nu-beta/2, alpha/2+1-nu; alpha/2; 1/2)

    with ``A = (alpha+beta)/2``.
    """
    if not (0 < nu < 1 and nu < 0.5 * (alpha + beta)):
        raise ValueError("need 0 < nu < 1 and nu < (alpha+beta)/2")
    spec = ComplexIntegralSpec(2.0 - nu, 1.0 + 0.5 * alpha - nu, 1.0 + 0.5 * beta - nu)
    lhs = (cmath.exp(0.5j * math.pi * nu) * integral_numeric(spec, tol)).imag
    A = 0.5 * (alpha + beta)
    h = hyp2f1_half(nu - 0.5 * beta, 0.5 * alpha + 1 - nu, 0.5 * alpha)
    rhs = (
        -math.gamma(2 - nu)
        * math.gamma(A - nu)
        * rgamma(0.5 * beta + 1 - nu)
        * 2.0 ** (nu - 2)
        * math.sin(math.pi * nu)
        * math.gamma(nu - 1)
        * rgamma(0.5 * alpha)
        * 2.0 ** (nu - 1 - 0.5 * alpha)
        * h
    )
    return lhs, rhs


def mellin_from_identities(params: ProcessParams, y: float, s: float, tol: float = 1e-12) -> tuple[float, float]:
    """Rebuild ``E_(0,y)[X_T**s]`` from the two integrals, by quadrature.

    With ``nu = 1 - s`` the Markov/scaling argument balances

        y**(1-nu) * gauche = E[X_T**(1-nu)] * 4**(1-nu) * droite

    where the factor ``4**(1-nu)`` comes from
    ``(4 xi**2 / (1 + 4 xi**2))**(1-nu)``.  Returns
    ``(assembled, (y/2)**s / F(s))``; requires ``0 < s < 1``.
    """
    nu = 1.0 - s
    if not 0 < nu < 1:
        raise ValueError("need 0 < s < 1")
    left, _ = gauche_identity_check(params.alpha, params.beta, nu, tol)
    right, _ = droite_identity_check(params.alpha, params.beta, nu, tol)
    assembled = y**s * left / (4.0**s * right)
    return assembled, (y / 2.0) ** s / f_ab(params, s)


@dataclass(frozen=True)
class RateRow:
    t: float
    p_hat: float
    se: float
    rate: float
    usable: bool


def short_time_rate_check(
    dim: float,
    z0: float,
    level: float,
    t_list: Sequence[float],
    n: int,
    seed: int,
    grid: Optional[GridPolicy] = None,
    threads: int = 1,
    stream: int = 0,
) -> tuple[list[RateRow], float]:
    """Monte Carlo ``t ln P(tau <= t)`` for decreasing ``t``.

    Returns the rows and the limit ``-(sqrt(z0) - sqrt(level))**2 / 2``.
    A row with no observed hit is kept but marked unusable.
    """
    if z0 == level:
        raise ValueError("z0 must differ from level")
    t_arr = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_arr, t_arr[1:])):
        raise ValueError("t_list must be strictly decreasing")
    base = grid or GridPolicy()
    g = GridPolicy(min(base.dt, t_arr[0]), t_arr[0], base.refine_levels, base.max_steps)
    ens = simulate_hitting_ensemble(dim, z0, level, g, n, seed, threads, stream)
    hit_times = ens.times[~ens.censored]
    rows = []
    for t in t_arr:
        p = float(np.count_nonzero(hit_times <= t)) / n
        se = math.sqrt(p * (1 - p) / n)
        ok = p > 0
        rows.append(RateRow(t, p, se, t * math.log(p) if ok else float("nan"), ok))
    return rows, -0.5 * (math.sqrt(z0) - math.sqrt(level)) ** 2


def random_specs(n: int, seed: int, gap: float = 0.05) -> list[ComplexIntegralSpec]:
    """Random valid exponent triples with gamma at least ``gap`` from integers."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        lam, mu = rng.uniform(0.2, 3.0, size=2)
        g = rng.uniform(gap, lam + mu - gap)
        if abs(g - round(g)) < gap:
            continue
        out.append(ComplexIntegralSpec(float(g), float(lam), float(mu)))
    return out


def sweep(specs: Iterable[ComplexIntegralSpec], tol: float = 1e-12) -> list[tuple]:
    """Rows ``(gamma, lambda, mu, numeric, closed, relerr)``."""
    rows = []
    for sp in specs:
        num = integral_numeric(sp, tol)
        clo = integral_closed(sp)
        rows.append((sp.gamma_exp, sp.lambda_exp, sp.mu_exp, num, clo, abs(num - clo) / abs(clo)))
    return rows


def sweep_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "lambda", "mu", "numeric_re", "numeric_im", "closed_re", "closed_im", "relerr"])
    for g, l, m, num, clo, err in rows:
        w.writerow([format_float(v) for v in (g, l, m, num.real, num.imag, clo.real, clo.imag, err)])
    return buf.getvalue()
