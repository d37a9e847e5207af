import math

import numpy as np
import pytest

from besqpursuit.besq import CrossingEnsemble, GridPolicy, StartState, simulate_crossing_ensemble
from besqpursuit.estimate import (
    SurvivalCurve,
    default_window,
    fit_tail_exponent,
    log_times,
    mean_t,
    mellin_closed,
    mellin_csv,
    mellin_xt,
    moment_t,
    survival_csv,
    survival_curve,
    tailfit_csv,
)
from besqpursuit.theta import ProcessParams, f_ab, find_theta

LONG = 1e30


def synthetic(times, t_max, params=None, start=None, x=None):
    times = np.asarray(times, dtype=float)
    cens = times > t_max
    t = np.where(cens, t_max, times)
    xs = np.where(cens, np.nan, x if x is not None else 1.0)
    return CrossingEnsemble(
        t, xs, cens, np.ones(t.size, dtype=np.int64), params=params, start=start, grid=GridPolicy(t_max=t_max)
    )


def pareto(theta, n, seed=0):
    # S(t) = t**-theta on t >= 1
    return np.random.default_rng(seed).pareto(theta, n) + 1.0


# ---------------------------------------------------------------- survival


def test_log_times():
    t = log_times(1.0, 100.0, 10)
    assert t[0] == 1.0 and t[-1] == pytest.approx(100.0)
    assert t.size == 21
    with pytest.raises(ValueError):
        log_times(0.0, 1.0)


def test_survival_curve_basic():
    ens = synthetic([0.5, 1.5, 2.5, 99.0], t_max=3.0)
    c = survival_curve(ens, [0.0, 1.0, 2.0, 3.0])
    assert c.s_hat.tolist() == [1.0, 0.75, 0.5, 0.25]
    assert c.se[0] == 0.0
    with pytest.raises(ValueError):
        survival_curve(ens, [4.0])
    with pytest.raises(ValueError):
        survival_curve(ens, [-1.0])


def test_survival_curve_validates():
    with pytest.raises(ValueError):
        SurvivalCurve(np.array([1.0, 1.0]), np.array([1.0, 0.5]), np.zeros(2), 2)
    with pytest.raises(ValueError):
        SurvivalCurve(np.array([1.0, 2.0]), np.array([0.5, 0.6]), np.zeros(2), 2)


def test_survival_csv_header():
    ens = synthetic([0.5, 1.5], t_max=3.0)
    text = survival_csv(survival_curve(ens, [1.0, 2.0]))
    assert text.splitlines()[0] == "t,s_hat,se,n"


# ---------------------------------------------------------------- tail fit


def test_fit_exact_power_law():
    t = log_times(1.0, 1000.0, 16)
    curve = SurvivalCurve(t, 0.3 * t**-1.5, np.zeros_like(t), 0)
    fit = fit_tail_exponent(curve, (10.0, 100.0))
    assert fit.exponent == pytest.approx(1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.3), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.points == 17


def test_fit_logarithmic_correction_biases_low():
    # S = ln(t) t**-1.2: local slope is 1.2 - 1/ln t, rising toward 1.2
    t = log_times(3.0, 1e6, 16)
    curve = SurvivalCurve(t, 0.1 * np.log(t) * t**-1.2, np.zeros_like(t), 0)
    e1 = fit_tail_exponent(curve, (10.0, 100.0)).exponent
    e2 = fit_tail_exponent(curve, (1e4, 1e5)).exponent
    assert e1 < e2 < 1.2


def test_fit_on_pareto_sample():
    theta = 0.8
    ens = synthetic(pareto(theta, 200_000, seed=1), t_max=1000.0)
    curve = survival_curve(ens, log_times(1.0, 1000.0))
    fit = fit_tail_exponent(curve)
    assert (fit.window_lo, fit.window_hi) == default_window(1000.0)
    assert abs(fit.exponent - theta) < 0.03


def test_fit_window_errors():
    t = log_times(1.0, 1000.0, 16)
    curve = SurvivalCurve(t, t**-1.0, np.zeros_like(t), 0)
    with pytest.raises(ValueError):
        fit_tail_exponent(curve, (10.0, 10.0))
    with pytest.raises(ValueError):
        fit_tail_exponent(curve, (0.5, 10.0))
    with pytest.raises(ValueError, match="need 8"):
        fit_tail_exponent(curve, (10.0, 12.0))


def test_tailfit_csv():
    t = log_times(1.0, 1000.0, 16)
    fit = fit_tail_exponent(SurvivalCurve(t, t**-1.0, np.zeros_like(t), 0), (10, 100))
    assert tailfit_csv([fit]).splitlines()[0] == "window_lo,window_hi,exponent,r_squared"


def _block_exponents(ens, blocks, window):
    n = len(ens) // blocks
    out = []
    for b in range(blocks):
        sub = CrossingEnsemble(
            ens.t_cross[b * n : (b + 1) * n],
            ens.x_at_cross[b * n : (b + 1) * n],
            ens.censored[b * n : (b + 1) * n],
            ens.steps_used[b * n : (b + 1) * n],
            grid=ens.grid,
        )
        out.append(fit_tail_exponent(survival_curve(sub, log_times(1.0, window[1])), window).exponent)
    return np.array(out)


@pytest.mark.slow
def test_exponent_insensitive_to_start_point():
    # batch means give an honest error for the fitted exponent
    p = ProcessParams(1.0, 3.0)
    window = (10.0, 100.0)
    g = GridPolicy(t_max=LONG)
    a = simulate_crossing_ensemble(p, StartState(0.0, 1.0), g, 80_000, seed=21).truncate(1e3)
    b = simulate_crossing_ensemble(p, StartState(0.3, 1.0), g, 80_000, seed=22).truncate(1e3)
    ea, eb = _block_exponents(a, 8, window), _block_exponents(b, 8, window)
    joint = math.hypot(ea.std(ddof=1), eb.std(ddof=1)) / math.sqrt(8)
    assert abs(ea.mean() - eb.mean()) <= 3 * joint


# ------------------------------------------------------------------ Mellin


def test_mellin_closed_pins_first_moment():
    # E[X_T] = alpha E[T] = alpha y / (alpha - beta) from optional stopping
    p, y = ProcessParams(3.0, 1.0), 1.0
    assert mellin_closed(p, y, 1.0) == pytest.approx(3.0 * y / 2.0, rel=1e-13)
    assert f_ab(p, 1.0) == pytest.approx((3.0 - 1.0) / (2 * 3.0), rel=1e-13)
    assert mellin_closed(p, y, 0.0) == 1.0


def test_mellin_xt_rejections():
    p = ProcessParams(2.0, 2.0)
    ens = synthetic([1.0, 2.0], 10.0, params=p, start=StartState(0.5, 1.0))
    with pytest.raises(ValueError, match="x = 0"):
        mellin_xt(ens, [0.1])
    ens = synthetic([1.0, 2.0], 10.0, params=p, start=StartState(0.0, 1.0))
    with pytest.raises(ValueError, match="theta"):
        mellin_xt(ens, [1.0])
    with pytest.raises(ValueError):
        mellin_xt(synthetic([1.0], 10.0), [0.1])


def test_mellin_xt_drops_censored():
    p, st = ProcessParams(2.0, 2.0), StartState(0.0, 1.0)
    ens = synthetic([1.0, 2.0, 50.0], 10.0, params=p, start=st, x=np.array([2.0, 8.0, 3.0]))
    (m,) = mellin_xt(ens, [0.5], tail_fraction=0.0)
    assert m.mc == pytest.approx((math.sqrt(2) + math.sqrt(8)) / 2)
    assert m.plain == m.mc
    assert mellin_csv([m]).splitlines()[0] == "s,mc,mc_se,closed,plain"


def test_mellin_tail_completion_is_exact_for_pareto():
    # X with P(X > x) = x**-theta: E[X**s] = theta / (theta - s)
    p = ProcessParams(3.0, 1.0)
    th = find_theta(p).theta
    x = pareto(th, 400_000, seed=4)
    ens = synthetic(np.ones_like(x), 10.0, params=p, start=StartState(0.0, 1.0), x=x)
    for m in mellin_xt(ens, [0.3 * th, 0.8 * th]):
        assert abs(m.mc - th / (th - m.s)) <= 4 * m.mc_se
    with pytest.raises(ValueError):
        mellin_xt(ens, [0.1], tail_fraction=0.7)


def test_mellin_zero_moment_is_one():
    p, st = ProcessParams(3.0, 1.0), StartState(0.0, 1.0)
    ens = simulate_crossing_ensemble(p, st, GridPolicy(t_max=LONG), 2000, seed=23)
    (m,) = mellin_xt(ens, [0.0])
    assert m.mc == 1.0 and m.closed == 1.0


@pytest.mark.slow
def test_mellin_batches_cover_closed_form():
    # >= 95% of the (ensemble, s) comparisons land within 3 SE
    p, st = ProcessParams(3.0, 1.0), StartState(0.0, 1.0)
    th = find_theta(p).theta
    s_list = [0.2 * th, 0.5 * th, 0.8 * th]  # the last has infinite variance
    hits = total = 0
    for k in range(10):
        ens = simulate_crossing_ensemble(p, st, GridPolicy(t_max=LONG), 5000, seed=30, stream=k)
        for m in mellin_xt(ens, s_list):
            hits += abs(m.mc - m.closed) <= 3 * m.mc_se
            total += 1
    assert hits >= 0.95 * total


# -------------------------------------------------------------------- mean


def test_mean_completion_on_pareto():
    # S(t) = t**-theta on t >= 1 has mean theta / (theta - 1); the power
    # completion is exact for this law
    p = ProcessParams(5.0, 0.0)
    theta = find_theta(p).theta
    ens = synthetic(pareto(theta, 400_000, seed=2), t_max=20.0)
    m = mean_t(ens, p)
    assert abs(m.estimate - theta / (theta - 1)) <= 4 * m.se
    assert m.horizon == 20.0
    assert m.censored_fraction == pytest.approx(ens.censored.mean())
    assert m.estimate == pytest.approx(m.truncated_mean + m.tail)


def test_mean_requires_alpha_above_beta():
    ens = synthetic([1.0], 10.0)
    with pytest.raises(ValueError, match="infinite"):
        mean_t(ens, ProcessParams(2.0, 2.0))


@pytest.mark.parametrize("x,y,seed", [(0.0, 1.0, 24), (0.5, 1.0, 25)])
def test_mean_crossing_time(x, y, seed):
    p, st = ProcessParams(3.0, 1.0), StartState(x, y)
    target = (y - x) / 2.0
    ens = simulate_crossing_ensemble(p, st, GridPolicy(t_max=LONG), 40_000, seed=seed)
    m = mean_t(ens, p, st, horizon=200 * target)
    assert abs(m.estimate - target) <= 3 * m.se
    # dropping the censored tail biases the naive mean low
    assert m.naive < m.estimate


# ----------------------------------------------------------------- moments


def test_moment_zero_is_one():
    assert moment_t(synthetic([1.0, 2.0], 10.0), 0.0).estimate == 1.0
    with pytest.raises(ValueError):
        moment_t(synthetic([1.0], 10.0), -1.0)


@pytest.mark.parametrize("lam,diverges", [(0.3, False), (0.6, False), (1.2, True), (1.6, True)])
def test_moment_flag_on_pareto(lam, diverges):
    theta = 0.9
    ens = synthetic(pareto(theta, 200_000, seed=3), t_max=1e6)
    m = moment_t(ens, lam)
    assert m.diverged == diverges
    assert m.growth == pytest.approx(2 ** (lam - theta), abs=0.12)


@pytest.mark.slow
def test_moment_flags_on_simulation():
    p, st = ProcessParams(1.0, 3.0), StartState(0.0, 1.0)
    ens = simulate_crossing_ensemble(p, st, GridPolicy(t_max=LONG), 50_000, seed=26).truncate(1e4)
    th = find_theta(p).theta
    assert not moment_t(ens, 0.5 * th).diverged
    assert moment_t(ens, 1.5 * th).diverged
