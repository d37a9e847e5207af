"""Estimators built on crossing ensembles.

Survival curves, power-law tail fits, fractional moments of the crossing
time, the Mellin transform of the crossing location and the mean crossing
time.  Everything here is a pure reduction over an immutable
:class:`~besqpursuit.besq.CrossingEnsemble`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .besq import CrossingEnsemble, StartState
from .theta import ProcessParams, f_ab, find_theta, format_float

__all__ = [
    "SurvivalCurve",
    "TailFit",
    "MellinEstimate",
    "MeanEstimate",
    "MomentEstimate",
    "log_times",
    "survival_curve",
    "fit_tail_exponent",
    "default_window",
    "mellin_closed",
    "mellin_xt",
    "mean_t",
    "moment_t",
    "survival_csv",
    "mellin_csv",
    "tailfit_csv",
]


@dataclass(frozen=True)
class SurvivalCurve:
    """Empirical ``P(T > t)`` on a time grid with binomial standard errors."""

    times: np.ndarray
    s_hat: np.ndarray
    se: np.ndarray
    n: int

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(np.diff(self.s_hat) > 0):
            raise ValueError("s_hat must be non-increasing")


@dataclass(frozen=True)
class TailFit:
    window_lo: float
    window_hi: float
    exponent: float
    intercept: float
    r_squared: float
    points: int


@dataclass(frozen=True)
class MellinEstimate:
    """Monte Carlo ``E[X_T**s]`` beside the closed form.

    ``mc`` is tail-completed (see :func:`mellin_xt`); ``plain`` is the raw
    sample mean, whose standard error is meaningless once ``2 s >= theta``.
    """

    s: float
    mc: float
    mc_se: float
    closed: float
    plain: float = float("nan")


@dataclass(frozen=True)
class MeanEstimate:
    """Tail-completed mean crossing time.

    ``estimate = E[T ^ H] + S(H) * H / (theta - 1)`` where ``H`` is the
    horizon and the completion assumes ``S(t) = S(H) (t / H)**-theta`` past
    it.  ``naive`` is the plain mean of the uncensored times (biased low).
    """

    estimate: float
    se: float
    horizon: float
    truncated_mean: float
    tail: float
    naive: float
    censored_fraction: float


@dataclass(frozen=True)
class MomentEstimate:
    """Empirical ``E[T**lam]`` over uncensored samples.

    ``growth`` is the fitted ratio between successive octave increments of
    ``E[(T ^ H)**lam]``.  It estimates ``2**(lam - theta)``, so a value of
    1 or more means the moment diverges.
    """

    lam: float
    estimate: float
    se: float
    diverged: bool
    growth: float


def log_times(t_lo: float, t_hi: float, per_decade: int = 32) -> np.ndarray:
    """Log-spaced grid from ``t_lo`` to ``t_hi`` inclusive."""
    if not (0 < t_lo < t_hi):
        raise ValueError("need 0 < t_lo < t_hi")
    k = max(2, int(math.ceil(per_decade * math.log10(t_hi / t_lo))) + 1)
    return np.geomspace(t_lo, t_hi, k)


def survival_curve(samples: CrossingEnsemble, times: Iterable[float]) -> SurvivalCurve:
    """Empirical survival function of the crossing time.

    Censored samples count as survivors; since censoring only happens at
    ``t_max`` this is the Kaplan-Meier estimate on ``[0, t_max]``.
    """
    times = np.asarray(list(times), dtype=float)
    if times.size == 0:
        raise ValueError("no times given")
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if np.any(times > samples.t_max):
        raise ValueError(f"requested time beyond t_max={samples.t_max}")
    n = len(samples)
    t_sorted = np.sort(np.where(samples.censored, np.inf, samples.t_cross))
    alive = n - np.searchsorted(t_sorted, times, side="right")
    s_hat = alive / n
    se = np.sqrt(s_hat * (1 - s_hat) / n)
    return SurvivalCurve(times=times, s_hat=s_hat, se=se, n=n)


def default_window(t_max: float) -> tuple[float, float]:
    return (t_max / 100.0, t_max / 10.0)


def fit_tail_exponent(curve: SurvivalCurve, window: Optional[Sequence[float]] = None) -> TailFit:
    """Weighted least squares of ``ln s_hat`` on ``ln t`` inside ``window``.

    The weight of each point is the inverse delta-method variance of
    ``ln s_hat``, i.e. ``(s_hat / se)**2``; a curve without standard errors
    is fitted unweighted.  The exponent is minus the slope.

    Raises
    ------
    ValueError
        If the window is degenerate, starts below 1, holds fewer than 8
        points or meets a zero survival estimate.
    """
    if window is None:
        window = default_window(float(curve.times[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("degenerate fit window")
    if lo < 1:
        raise ValueError("fit window must start at t >= 1")
    sel = (curve.times >= lo * (1 - 1e-12)) & (curve.times <= hi * (1 + 1e-12))
    if sel.sum() < 8:
        raise ValueError(f"only {int(sel.sum())} curve points in window [{lo}, {hi}], need 8")
    t, s, se = curve.times[sel], curve.s_hat[sel], curve.se[sel]
    if np.any(s <= 0):
        raise ValueError("survival estimate is zero inside the window")
    x, y = np.log(t), np.log(s)
    if np.all(se > 0):
        w = (s / se) ** 2
    else:
        w = np.ones_like(x)
    wm = w / w.sum()
    xb, yb = wm @ x, wm @ y
    sxx = wm @ (x - xb) ** 2
    slope = (wm @ ((x - xb) * (y - yb))) / sxx
    icpt = yb - slope * xb
    resid = y - (icpt + slope * x)
    syy = wm @ (y - yb) ** 2
    r2 = 1.0 - (wm @ resid**2) / syy if syy > 0 else 1.0
    return TailFit(lo, hi, -float(slope), float(icpt), float(r2), int(sel.sum()))


def mellin_closed(params: ProcessParams, y: float, s: float) -> float:
    """``E_(0,y)[X_T**s] = (y/2)**s / F(s)`` for ``0 <= s < theta``.

    The constant is pinned by optional stopping at ``s = 1``:
    ``E[X_T] = alpha E[T] = alpha y / (alpha - beta)`` and
    ``F(1) = (alpha - beta) / (2 alpha)``.
    """
    return (y / 2.0) ** s / f_ab(params, s)


def mellin_xt(
    samples: CrossingEnsemble,
    s_list: Iterable[float],
    params: Optional[ProcessParams] = None,
    start: Optional[StartState] = None,
    tail_fraction: float = 1e-3,
) -> list[MellinEstimate]:
    """Monte Carlo moments ``E[X_T**s]`` beside the closed form.

    ``X_T`` has a power tail of exponent ``theta``, so ``X_T**s`` has
    infinite variance when ``2 s >= theta`` and the plain sample mean then
    sits low with an understated error.  Values above the empirical
    ``1 - tail_fraction`` quantile ``K`` are therefore replaced by their
    conditional mean under the power tail, ``K**s theta / (theta - s)``;
    the per-replicate terms have finite variance and the reported standard
    error is theirs.  ``tail_fraction = 0`` gives the plain mean.

    Censored samples are dropped; callers keep them negligible by running
    with a long horizon (survivors are cheap to simulate).
    """
    params = params or samples.params
    start = start or samples.start
    if params is None or start is None:
        raise ValueError("params and start are required")
    if start.x != 0:
        raise ValueError("the Mellin transform is only available for x = 0")
    if not 0 <= tail_fraction < 0.5:
        raise ValueError("tail_fraction must lie in [0, 0.5)")
    theta = find_theta(params).theta
    s_arr = [float(s) for s in s_list]
    for s in s_arr:
        if not 0 <= s < theta:
            raise ValueError(f"s={s} outside [0, theta) with theta={theta!r}")
    xt = samples.x_at_cross[~samples.censored]
    k_cut = float(np.quantile(xt, 1.0 - tail_fraction)) if tail_fraction > 0 and xt.size else np.inf
    out = []
    for s in s_arr:
        v = xt**s
        z = np.where(xt <= k_cut, v, k_cut**s * theta / (theta - s)) if np.isfinite(k_cut) else v
        se = float(z.std(ddof=1) / math.sqrt(z.size)) if z.size > 1 else float("nan")
        out.append(MellinEstimate(s, float(z.mean()), se, mellin_closed(params, start.y, s), float(v.mean())))
    return out


def mean_t(
    samples: CrossingEnsemble,
    params: Optional[ProcessParams] = None,
    start: Optional[StartState] = None,
    horizon: Optional[float] = None,
) -> MeanEstimate:
    """Tail-completed estimate of ``E[T]`` (finite only when alpha > beta).

    The ensemble is re-censored at ``horizon`` (default: its own ``t_max``)
    and the mass beyond is completed with the power tail of exponent
    ``theta``.  The estimator is an average of per-replicate terms, so its
    standard error is exact for the completed quantity.
    """
    params = params or samples.params
    if params is None:
        raise ValueError("params are required")
    if not params.alpha > params.beta:
        raise ValueError(
            f"E[T] is infinite unless alpha > beta (alpha={params.alpha}, beta={params.beta})"
        )
    theta = find_theta(params).theta
    ens = samples if horizon is None else samples.truncate(horizon)
    H = ens.t_max
    cens = ens.censored
    t = np.where(cens, H, ens.t_cross)
    z = t + cens * (H / (theta - 1.0))
    n = z.size
    naive = float(ens.t_cross[~cens].mean()) if (~cens).any() else float("nan")
    return MeanEstimate(
        estimate=float(z.mean()),
        se=float(z.std(ddof=1) / math.sqrt(n)),
        horizon=H,
        truncated_mean=float(t.mean()),
        tail=float(cens.mean() * H / (theta - 1.0)),
        naive=naive,
        censored_fraction=float(cens.mean()),
    )


def moment_t(
    samples: CrossingEnsemble, lam: float, octaves: int = 8, tail_count: int = 100
) -> MomentEstimate:
    """Fractional moment of the uncensored crossing times with a divergence flag.

    The diagnostic compares ``E[(T ^ H)**lam]`` over the horizons
    ``H = H0, H0/2, ..., H0 / 2**octaves`` where ``H0`` is ``t_max`` or the
    time still exceeded by ``tail_count`` samples, whichever is smaller.  The increments between
    successive horizons behave like ``H**(lam - theta)``; a least-squares
    growth ratio per octave of 1 or more flags divergence.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    ok = ~samples.censored
    tt = samples.t_cross[ok]
    if lam == 0:
        return MomentEstimate(0.0, 1.0, 0.0, False, 0.0)
    v = tt**lam
    est = float(v.mean()) if v.size else float("nan")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")

    t_all = np.where(samples.censored, samples.t_max, samples.t_cross)
    # top horizon: t_max, or lower if fewer than `tail_count` samples reach it
    k_top = min(tail_count, t_all.size)
    top = min(samples.t_max, float(np.partition(t_all, t_all.size - k_top)[t_all.size - k_top]))
    horizons = top / 2.0 ** np.arange(octaves + 1)
    m = np.array([np.mean(np.minimum(t_all, h) ** lam) for h in horizons])
    inc = m[:-1] - m[1:]  # increment gained by doubling the horizon, newest first
    good = inc > 0
    if good.sum() >= 3:
        k = np.arange(inc.size)[good]
        slope = np.polyfit(-k, np.log2(inc[good]), 1)[0]
        growth = float(2.0**slope)
    else:
        growth = float("nan")
    return MomentEstimate(float(lam), est, se, bool(growth >= 1.0), growth)


def _write(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, (int, np.integer)) else format_float(v) for v in r])
    return buf.getvalue()


def survival_csv(curve: SurvivalCurve) -> str:
    return _write(
        ["t", "s_hat", "se", "n"],
        ((t, s, e, curve.n) for t, s, e in zip(curve.times, curve.s_hat, curve.se)),
    )


def mellin_csv(estimates: Sequence[MellinEstimate]) -> str:
    return _write(
        ["s", "mc", "mc_se", "closed", "plain"], ((m.s, m.mc, m.mc_se, m.closed, m.plain) for m in estimates)
    )


def tailfit_csv(fits: Sequence[TailFit]) -> str:
    return _write(
        ["window_lo", "window_hi", "exponent", "r_squared"],
        ((f.window_lo, f.window_hi, f.exponent, f.r_squared) for f in fits),
    )
