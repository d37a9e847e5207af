"""The persistence exponent as the first zero of a hypergeometric function.

For squared Bessel processes X (dimension ``alpha``) and Y (dimension
``beta``) the tail of the crossing time decays like ``t**-theta`` where
``theta`` is the first positive zero of

    F(s) = 2F1((alpha + beta)/2 - 1 + s, -s; alpha/2; 1/2).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .specialfn import DEFAULT_CONTROL, SeriesControl, hyp2f1_half, rgamma

__all__ = [
    "ProcessParams",
    "ThetaResult",
    "SearchExhaustedError",
    "f_ab",
    "f_ab_closed",
    "find_theta",
    "theta_grid",
    "grid_values",
    "theta_small_alpha",
    "f_table",
    "format_float",
]

_FAMILY_TOL = 1e-12
_SQRT_PI = math.sqrt(math.pi)


class SearchExhaustedError(RuntimeError):
    """No sign change of F was found inside the scan range."""


@dataclass(frozen=True)
class ProcessParams:
    """Dimensions of the lower process X and the upper process Y."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not (self.beta >= 0):
            raise ValueError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class ThetaResult:
    theta: float
    bracket_lo: float
    bracket_hi: float
    residual: float
    zero_order_m: int
    order_determined: bool
    derivative: float
    iterations: int


def f_ab(params: ProcessParams, s: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Evaluate ``F_{alpha,beta}(s)`` from its hypergeometric series."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    a = 0.5 * (params.alpha + params.beta) - 1.0 + s
    return hyp2f1_half(a, -s, 0.5 * params.alpha, ctl)


def f_ab_closed(params: ProcessParams, s: float) -> Optional[float]:
    """Closed form of ``F_{alpha,beta}(s)`` for the three explicit families.

    Returns ``None`` unless ``alpha == beta``, ``alpha + beta == 4`` or
    ``alpha == beta + 2`` (to within 1e-12).
    """
    al, be = params.alpha, params.beta
    if s == 0:
        return 1.0
    if abs(al - be) <= _FAMILY_TOL:
        return _SQRT_PI * math.gamma(al / 2) * rgamma((1 - s) / 2) * rgamma((s + al) / 2)
    if abs(al + be - 4) <= _FAMILY_TOL:
        return (
            2 ** (1 - al / 2)
            * _SQRT_PI
            * math.gamma(al / 2)
            * rgamma((2 + 2 * s + al) / 4)
            * rgamma((al - 2 * s) / 4)
        )
    if abs(al - be - 2) <= _FAMILY_TOL:
        bracket = rgamma((be + s) / 2) * rgamma((1 - s) / 2) - rgamma((be + s + 1) / 2) * rgamma(-s / 2)
        return 2 * _SQRT_PI / (be + 2 * s) * math.gamma(be / 2 + 1) * bracket
    return None


def _derivative(f, x: float, h: float = 1e-5) -> float:
    # five-point central difference
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _refine(f, lo: float, hi: float, flo: float, fhi: float, xtol: float):
    """Shrink a sign-change bracket with f(lo) > 0 > f(hi).

    False-position steps (Illinois weighting) are used inside the bracket;
    any step that fails to halve the bracket is followed by a bisection.
    """
    it = 0
    side = 0
    bisect_next = False
    while hi - lo > xtol * max(1.0, 0.5 * (lo + hi)) and it < 500:
        it += 1
        width = hi - lo
        x = 0.5 * (lo + hi)
        if not bisect_next:
            cand = lo + flo * (hi - lo) / (flo - fhi)
            if lo < cand < hi:
                x = cand
        fx = f(x)
        if fx > 0:
            lo, flo = x, fx
            if side == 1:
                fhi *= 0.5
            side = 1
        elif fx < 0:
            hi, fhi = x, fx
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            return x, x, it
        bisect_next = (hi - lo) > 0.5 * width
    return lo, hi, it


def find_theta(
    params: ProcessParams,
    scan_step: float = 0.05,
    s_max: float = 200.0,
    xtol: float = 1e-13,
    ctl: SeriesControl = DEFAULT_CONTROL,
) -> ThetaResult:
    """Locate the first positive zero of ``F_{alpha,beta}``.

    Scans ``s = start, start + h, ...`` for the first sign change and polishes
    the bracket to relative width ``xtol``.  ``F(0) = 1``; the zero lies in
    (0, 1) when alpha < beta, equals 1 when alpha == beta and exceeds 1
    when alpha > beta, so the scan starts at 1 in the last case.
    """
    def f(s):
        return f_ab(params, s, ctl)

    if params.alpha == params.beta:
        theta = 1.0
        half = 0.25 * xtol
        deriv = _derivative(f, theta)
        return ThetaResult(
            theta=theta,
            bracket_lo=theta - half,
            bracket_hi=theta + half,
            residual=abs(f(theta)),
            zero_order_m=1 if abs(deriv) > 1e-6 else 2,
            order_determined=abs(deriv) > 1e-6,
            derivative=deriv,
            iterations=0,
        )

    start = 1.0 if params.alpha > params.beta else 0.0
    lo, flo = start, f(start)
    k = 0
    while True:
        k += 1
        hi = start + k * scan_step
        if hi > s_max:
            raise SearchExhaustedError(
                f"no sign change of F for alpha={params.alpha}, beta={params.beta} below s={s_max}"
            )
        fhi = f(hi)
        if fhi <= 0:
            break
        lo, flo = hi, fhi

    if fhi == 0:
        lo_r = hi_r = hi
        iters = 0
    else:
        lo_r, hi_r, iters = _refine(f, lo, hi, flo, fhi, xtol)
    if hi_r > lo_r:
        f_lo, f_hi = f(lo_r), f(hi_r)
        theta = lo_r + f_lo * (hi_r - lo_r) / (f_lo - f_hi)
    else:
        theta = lo_r
    deriv = _derivative(f, theta)
    simple = abs(deriv) > 1e-6
    return ThetaResult(
        theta=theta,
        bracket_lo=lo_r,
        bracket_hi=hi_r,
        residual=abs(f(theta)),
        zero_order_m=1 if simple else 2,
        order_determined=simple,
        derivative=deriv,
        iterations=k + iters,
    )


def grid_values(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid ``start, start+step, ..., stop``."""
    if step <= 0:
        raise ValueError("step must be > 0")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def theta_grid(
    alphas: Sequence[float],
    betas: Sequence[float],
    threads: int = 1,
) -> np.ndarray:
    """Tabulate theta over a product grid.

    Returns an ``(len(alphas) * len(betas), 3)`` array of rows
    ``(alpha, beta, theta)`` in row-major order (alpha outer).
    """
    cells = [(float(a), float(b)) for a in alphas for b in betas]
    for a, b in cells:
        if not (0 < a <= 5 and 0 <= b <= 5):
            raise ValueError(f"grid cell ({a}, {b}) outside (0, 5]^2")

    def one(cell):
        return find_theta(ProcessParams(*cell)).theta

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            thetas = list(pool.map(one, cells))
    else:
        thetas = [one(c) for c in cells]
    return np.array([(a, b, t) for (a, b), t in zip(cells, thetas)], dtype=float)


def theta_small_alpha(beta: float, alpha: float) -> float:
    """Leading-order behaviour of theta as alpha decreases to 0."""
    if beta < 0 or alpha <= 0:
        raise ValueError("need beta >= 0 and alpha > 0")
    if beta > 2:
        return alpha / (2 ** (beta / 2) - 2)
    if beta == 2:
        return math.sqrt(alpha / (2 * math.log(2)))
    return 1 - beta / 2 + alpha * (1 / (2 - 2 ** (beta / 2)) - 0.5)


def f_table(params: ProcessParams, s_values: Iterable[float]) -> np.ndarray:
    """Rows ``(s, F(s))`` for plotting."""
    return np.array([(s, f_ab(params, float(s))) for s in s_values], dtype=float)


def format_float(x: float) -> str:
    """17 significant digits, round-trip exact."""
    return format(float(x), ".17g")
