"""Exact-in-law simulation of squared Bessel processes.

Transitions are drawn from the noncentral chi-squared law as a Poisson
mixture of Gamma variables, so every simulated node has exactly the law of
the continuous process.  Crossing and hitting times are detected on an
adaptive grid.  From state ``(X, Y)`` with gap ``g = Y - X`` and scale
``s = X + Y`` the next node lies

    h = dt * max(g**2 / s, s * 2**-refine_levels)

later.  The step shrinks quadratically as the gap closes, so the detected
crossing is resolved on the local diffusive scale, and the floor term stops
the steps from collapsing to zero.  Every proposal is kept: step sizes
depend only on the current node, so the nodes are exact samples of the path
at (random) stopping times.  A path may still cross and come back between
two nodes; the detected time is then late, never early.  Two biases
remain: misses at gap-relative steps, whose per-step probability decays
like ``exp(-1 / (8 dt))``, and the usual square-root overshoot of discrete
monitoring at the floor step, of relative size ``2**(-refine_levels / 2)``.
Both are measured by halving studies.  The rule is scale-free, which keeps
long survivors cheap (time advances geometrically).

Ensembles are split into fixed blocks of replicates, each driven by its own
Philox (counter-based) stream keyed on ``(seed, tag, stream, block)``.  Output does
not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .specialfn import bessel_i_scaled, bessel_k_scaled
from .theta import ProcessParams, format_float

__all__ = [
    "StartState",
    "GridPolicy",
    "CrossingSample",
    "CrossingEnsemble",
    "HittingEnsemble",
    "BLOCK_SIZE",
    "stream_rng",
    "besq_transition",
    "simulate_crossing",
    "simulate_crossing_ensemble",
    "simulate_hitting_time",
    "simulate_hitting_ensemble",
    "sample_marginals",
    "charfn_closed",
    "hitting_laplace_closed",
]

BLOCK_SIZE = 1 << 15


@dataclass(frozen=True)
class StartState:
    x: float
    y: float

    def __post_init__(self):
        if not (0 <= self.x < self.y):
            raise ValueError(f"need 0 <= x < y, got x={self.x}, y={self.y}")


@dataclass(frozen=True)
class GridPolicy:
    """Discretisation controls.

    ``dt`` is the relative step size, ``t_max`` the censoring horizon and
    ``refine_levels`` sets the floor step ``dt * scale * 2**-refine_levels``
    used once the gap is tiny.  ``max_steps`` bounds the work spent on any one path.
    """

    dt: float = 0.025
    t_max: float = 1e3
    refine_levels: int = 24
    max_steps: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t_max", float(self.t_max))
        if not (self.dt > 0 and self.t_max > 0):
            raise ValueError("dt and t_max must be positive")
        if self.dt > self.t_max:
            raise ValueError("dt must not exceed t_max")
        if not (0 <= self.refine_levels <= 30) or int(self.refine_levels) != self.refine_levels:
            raise ValueError("refine_levels must be an integer in [0, 30]")

    def halved(self) -> "GridPolicy":
        return GridPolicy(self.dt / 2, self.t_max, self.refine_levels, self.max_steps)


@dataclass(frozen=True)
class CrossingSample:
    t_cross: float
    x_at_cross: float
    censored: bool
    steps_used: int


@dataclass
class CrossingEnsemble:
    """Columnar storage for a simulated ensemble of crossings."""

    t_cross: np.ndarray
    x_at_cross: np.ndarray
    censored: np.ndarray
    steps_used: np.ndarray
    params: Optional[ProcessParams] = None
    start: Optional[StartState] = None
    grid: Optional[GridPolicy] = None
    seed: Optional[int] = None

    def __len__(self) -> int:
        return int(self.t_cross.size)

    @property
    def t_max(self) -> float:
        return self.grid.t_max if self.grid is not None else float("inf")

    def __iter__(self) -> Iterator[CrossingSample]:
        for i in range(len(self)):
            yield CrossingSample(
                float(self.t_cross[i]),
                float(self.x_at_cross[i]),
                bool(self.censored[i]),
                int(self.steps_used[i]),
            )

    def truncate(self, horizon: float) -> "CrossingEnsemble":
        """Re-censor the ensemble at an earlier horizon."""
        if horizon > self.t_max:
            raise ValueError("cannot extend the censoring horizon")
        late = self.censored | (self.t_cross > horizon)
        grid = None
        if self.grid is not None:
            grid = GridPolicy(min(self.grid.dt, horizon), horizon, self.grid.refine_levels, self.grid.max_steps)
        return CrossingEnsemble(
            t_cross=np.where(late, horizon, self.t_cross),
            x_at_cross=np.where(late, np.nan, self.x_at_cross),
            censored=late,
            steps_used=self.steps_used,
            params=self.params,
            start=self.start,
            grid=grid,
            seed=self.seed,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "t_cross", "x_at_cross", "censored"])
        for i in range(len(self)):
            w.writerow(
                [
                    i,
                    format_float(self.t_cross[i]),
                    format_float(self.x_at_cross[i]),
                    int(self.censored[i]),
                ]
            )
        return buf.getvalue()


@dataclass
class HittingEnsemble:
    times: np.ndarray
    censored: np.ndarray
    dim: float = float("nan")
    z0: float = float("nan")
    level: float = float("nan")
    grid: Optional[GridPolicy] = field(default=None)

    def __len__(self) -> int:
        return int(self.times.size)


def stream_rng(seed: int, block: int, tag: int = 0, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one block of replicates.

    ``tag`` separates the kinds of simulation and ``stream`` numbers the
    independent ensembles a caller draws from one master seed.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def besq_transition(dim, x0, dt, rng: np.random.Generator):
    """Draw ``X_dt`` given ``X_0 = x0`` for a squared Bessel process.

    ``N ~ Poisson(x0 / (2 dt))`` then ``Gamma(dim/2 + N, scale=2 dt)``; a
    Gamma with shape 0 is the point mass at 0, so dimension 0 absorbs.
    Arguments broadcast.
    """
    x0 = np.asarray(x0, dtype=float)
    dt = np.asarray(dt, dtype=float)
    n = rng.poisson(x0 / (2.0 * dt))
    out = 2.0 * dt * rng.standard_gamma(0.5 * dim + n)
    return out if out.ndim else float(out)


def _crossing_block(alpha, beta, x0, y0, grid: GridPolicy, n: int, rng):
    dt, t_max, max_steps = grid.dt, grid.t_max, grid.max_steps
    floor_frac = 2.0 ** -grid.refine_levels
    t = np.zeros(n)
    X = np.full(n, float(x0))
    Y = np.full(n, float(y0))
    steps = np.zeros(n, dtype=np.int64)
    t_out = np.full(n, float(t_max))
    x_out = np.full(n, np.nan)
    cens = np.ones(n, dtype=bool)
    steps_out = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    while idx.size:
        s = X + Y
        g = Y - X
        h = dt * np.maximum(g * g / s, s * floor_frac)
        remaining = t_max - t
        h = np.minimum(h, remaining)
        X = besq_transition(alpha, X, h, rng)
        Y = besq_transition(beta, Y, h, rng)
        t = t + h
        steps += 1
        hit = X >= Y
        done = hit | (h >= remaining) | (steps >= max_steps)
        if done.any():
            di = idx[done]
            dh = hit[done]
            t_out[di] = np.where(dh, t[done], t_max)
            x_out[di] = np.where(dh, X[done], np.nan)
            cens[di] = ~dh
            steps_out[di] = steps[done]
            keep = ~done
            idx, t, X, Y, steps = idx[keep], t[keep], X[keep], Y[keep], steps[keep]
    return t_out, x_out, cens, steps_out


def _hitting_block(dim, z0, level, grid: GridPolicy, n: int, rng):
    dt, t_max = grid.dt, grid.t_max
    floor_frac = 2.0 ** -grid.refine_levels
    from_below = z0 < level
    t = np.zeros(n)
    Z = np.full(n, float(z0))
    steps = np.zeros(n, dtype=np.int64)
    t_out = np.full(n, float(t_max))
    cens = np.ones(n, dtype=bool)
    idx = np.arange(n)
    base_floor = dt * (z0 + level) * floor_frac
    while idx.size:
        s = Z + level
        g = np.abs(level - Z)
        # relative floor, bounded below so that a dimension-0 path can be absorbed at 0
        floor = np.maximum(dt * s * floor_frac, base_floor * floor_frac)
        h = np.maximum(dt * g * g / s, floor)
        remaining = t_max - t
        h = np.minimum(h, remaining)
        Z = besq_transition(dim, Z, h, rng)
        t = t + h
        steps += 1
        hit = Z >= level if from_below else Z <= level
        done = hit | (h >= remaining) | (steps >= grid.max_steps)
        if done.any():
            di = idx[done]
            dh = hit[done]
            t_out[di] = np.where(dh, t[done], t_max)
            cens[di] = ~dh
            keep = ~done
            idx, t, Z, steps = idx[keep], t[keep], Z[keep], steps[keep]
    return t_out, cens


def _run_blocks(fn, n: int, seed: int, tag: int, threads: int, stream: int = 0):
    sizes = [min(BLOCK_SIZE, n - k) for k in range(0, n, BLOCK_SIZE)]

    def one(b):
        return fn(sizes[b], stream_rng(seed, b, tag, stream))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]
    return [np.concatenate(cols) for cols in zip(*parts)]


_TAG_CROSSING = 1
_TAG_HITTING = 2
_TAG_MARGINAL = 3


def simulate_crossing(
    params: ProcessParams, start: StartState, grid: GridPolicy, rng: np.random.Generator
) -> CrossingSample:
    """Simulate one crossing of X (dimension alpha) and Y (dimension beta)."""
    t, x, c, k = _crossing_block(params.alpha, params.beta, start.x, start.y, grid, 1, rng)
    return CrossingSample(float(t[0]), float(x[0]), bool(c[0]), int(k[0]))


def simulate_crossing_ensemble(
    params: ProcessParams,
    start: StartState,
    grid: GridPolicy,
    n: int,
    seed: int,
    threads: int = 1,
    stream: int = 0,
) -> CrossingEnsemble:
    """Simulate ``n`` independent crossings.

    The result depends only on ``(seed, stream)`` and the arguments, never
    on ``threads``.
    """
    if n <= 0:
        raise ValueError("n must be positive")

    def fn(m, rng):
        return _crossing_block(params.alpha, params.beta, start.x, start.y, grid, m, rng)

    t, x, c, k = _run_blocks(fn, n, seed, _TAG_CROSSING, threads, stream)
    return CrossingEnsemble(t, x, c, k, params=params, start=start, grid=grid, seed=seed)


def _check_hitting(dim, z0, level):
    if dim < 0 or z0 < 0 or level < 0:
        raise ValueError("dim, z0 and level must be nonnegative")
    if z0 == level:
        raise ValueError("level must differ from z0")
    if level == 0 and dim > 0:
        raise ValueError("exact transitions never land on 0 when dim > 0")


def simulate_hitting_time(dim: float, z0: float, level: float, grid: GridPolicy, rng):
    """First time a squared Bessel path from ``z0`` reaches ``level``.

    Returns ``(time, censored)``.
    """
    _check_hitting(dim, z0, level)
    t, c = _hitting_block(dim, z0, level, grid, 1, rng)
    return float(t[0]), bool(c[0])


def simulate_hitting_ensemble(
    dim: float,
    z0: float,
    level: float,
    grid: GridPolicy,
    n: int,
    seed: int,
    threads: int = 1,
    stream: int = 0,
) -> HittingEnsemble:
    """Simulate ``n`` independent hitting times of ``level`` from ``z0``."""
    _check_hitting(dim, z0, level)

    def fn(m, rng):
        return _hitting_block(dim, z0, level, grid, m, rng)

    t, c = _run_blocks(fn, n, seed, _TAG_HITTING, threads, stream)
    return HittingEnsemble(t, c, dim=dim, z0=z0, level=level, grid=grid)


def sample_marginals(
    params: ProcessParams,
    start: StartState,
    t: float,
    n: int,
    seed: int,
    threads: int = 1,
    stream: int = 0,
):
    """Exact draws of ``(X_t, Y_t)`` for independent processes."""

    def fn(m, rng):
        return (
            besq_transition(params.alpha, np.full(m, start.x), t, rng),
            besq_transition(params.beta, np.full(m, start.y), t, rng),
        )

    x, y = _run_blocks(fn, n, seed, _TAG_MARGINAL, threads, stream)
    return x, y


def charfn_closed(params: ProcessParams, start: StartState, lam: float, t: float) -> complex:
    """``E[exp(i lam (X_t - Y_t))]`` for independent squared Bessel processes."""
    a, b = params.alpha, params.beta
    x, y = start.x, start.y
    u = 2j * lam * t
    expo = (1j * lam * (x - y) - 2 * lam**2 * t * (x + y)) / (1 + 4 * lam**2 * t**2)
    return complex((1 - u) ** (-a / 2) * (1 + u) ** (-b / 2) * np.exp(expo))


def hitting_laplace_closed(dim: float, z0: float, level: float, lam: float) -> float:
    """``E[exp(-lam tau)]`` for the first hitting time of ``level`` from ``z0``.

    Uses the index ``nu = dim/2 - 1``; I_nu applies from below, K_nu from
    above.  Evaluated with exponentially scaled Bessel functions.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    nu = dim / 2 - 1
    u, v = math.sqrt(2 * lam * z0), math.sqrt(2 * lam * level)
    if z0 <= level:
        if z0 == 0:
            # z**(-nu/2) I_nu(sqrt(2 lam z)) -> (lam/2)**(nu/2) / Gamma(nu+1) as z -> 0
            num = (lam / 2) ** (nu / 2) / math.gamma(nu + 1)
            return num / (level ** (-nu / 2) * float(bessel_i_scaled(nu, v)) * math.exp(v))
        ratio = float(bessel_i_scaled(nu, u) / bessel_i_scaled(nu, v)) * math.exp(u - v)
    else:
        if level == 0:
            if nu >= 0:
                raise ValueError("level 0 is not reached when dim >= 2")
            # a**(-nu/2) K_nu(sqrt(2 lam a)) -> Gamma(-nu)/2 (lam/2)**(nu/2) as a -> 0
            den = 0.5 * math.gamma(-nu) * (lam / 2) ** (nu / 2)
            return z0 ** (-nu / 2) * float(bessel_k_scaled(nu, u)) * math.exp(-u) / den
        ratio = float(bessel_k_scaled(nu, u) / bessel_k_scaled(nu, v)) * math.exp(v - u)
    return (z0 / level) ** (-nu / 2) * ratio
