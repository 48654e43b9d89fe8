"""Solving for t_{D,delta} and checking its two-sided bounds.

t_{D,delta} is the largest t with gamma_n(2 t m(D) D) <= (2^delta e)^{-n}.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from . import gaussmeasure as gm
from .geometry import LpBall, NormBody, log_lp_ball_volume, log_volume
from .randsrc import RandomStream
from .verdict import TheoremVerdict

LOWER_CONSTANT = 1.0 / (160.0 * math.e)


@dataclass(frozen=True)
class TDeltaResult:
    t_value: float
    bracket: tuple[float, float]
    m_used: float
    target: float
    method: str
    clamped: bool = False
    samples: int = 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d


def target_level(n: int, delta: float) -> float:
    """(2^delta e)^{-n}."""
    return math.exp(-n * (delta * math.log(2.0) + 1.0))


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def bisect_max(f, target: float, lo: float, hi: float, rtol: float = 1e-9):
    """Largest t in (lo, hi] with ``f(t) <= target`` for nondecreasing f.

    Returns the final ``(lo, hi)`` bracket; ``f(lo) <= target < f(hi)``
    unless hi itself satisfies the condition, in which case ``(hi, hi)``.
    """
    if f(hi) <= target:
        return hi, hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo, hi


def t_delta(
    D: NormBody,
    delta: float,
    mode: str | None = None,
    N: int = 1_000_000,
    s: RandomStream | None = None,
    workers: int = 1,
    rtol: float = 1e-9,
) -> TDeltaResult:
    """Solve for t_{D,delta} by bisection on t -> gamma_n(2 t m D) over (0, 1/2]."""
    _check_delta(delta)
    n = D.dim
    target = target_level(n, delta)
    mode = gm._mode(mode, D)
    if mode == gm.EXACT:
        m = gm.exact_median(D)
        lo, hi = bisect_max(lambda t: gm.exact_gamma(D, 2.0 * t * m), target, 0.0, 0.5, rtol)
        return TDeltaResult(lo, (lo, hi), m, target, gm.EXACT, clamped=lo == 0.5)

    if s is None:
        raise ValueError("Monte Carlo mode needs a random stream")
    if target < 100.0 / N:
        raise ValueError(
            f"target {target:.3g} is below the Monte Carlo resolution floor 100/N = {100.0 / N:.3g}"
        )
    s_med, s_norms = s.split(2)
    m = gm.gaussian_median(D, gm.MONTE_CARLO, N, s_med, workers)
    norms = np.sort(gm.gaussian_norms(D, N, s_norms, workers))

    def empirical(t):
        return np.searchsorted(norms, 2.0 * t * m, side="right") / N

    lo, hi = bisect_max(empirical, target, 0.0, 0.5, rtol)
    # confidence bracket: ranks compatible with the target level at 99%
    k = lambda level: min(N - 1, max(0, math.ceil(level * N) - 1))
    w_lo, w_hi = gm.wilson_interval(int(math.floor(target * N)), N)
    b_lo = min(norms[k(w_lo)] / (2.0 * m), lo)
    b_hi = max(norms[min(N - 1, k(w_hi) + 1)] / (2.0 * m), hi)
    return TDeltaResult(lo, (b_lo, b_hi), m, target, gm.MONTE_CARLO, clamped=lo >= 0.5, samples=N)


def closed_form_linf(n: int, delta: float) -> float:
    """t_{B_inf^n, delta} in closed form."""
    s = special.ndtri((1.0 + 2.0 ** (-delta) / math.e) / 2.0)
    m = special.ndtri((1.0 + 2.0 ** (-1.0 / n)) / 2.0)
    return float(s / (2.0 * m))


def lower_bound_value(D: NormBody) -> float:
    """(1/(160 e)) sqrt(n) (|B_2^n| / |D|)^{1/n}, a lower bound for t_{D,delta} m(D)."""
    n = D.dim
    return LOWER_CONSTANT * math.sqrt(n) * math.exp((log_lp_ball_volume(n, 2) - log_volume(D)) / n)


def t_delta_bounds_check(
    D: NormBody,
    delta: float,
    mode: str | None = None,
    N: int = 1_000_000,
    s: RandomStream | None = None,
    workers: int = 1,
) -> TheoremVerdict:
    """Check lower_bound_value(D) <= t m(D) and t <= 1/2."""
    res = t_delta(D, delta, mode, N, s, workers)
    tm = res.t_value * res.m_used
    lower = lower_bound_value(D)
    ok = tm >= lower and res.t_value <= 0.5 and not res.clamped
    notes = f"empirical slack t*m / lower = {tm / lower:.6g}"
    if res.clamped:
        notes += "; solver clamped at t = 1/2"
    return TheoremVerdict(
        theorem_id="tdelta-bounds",
        bound=lower,
        empirical=tm,
        threshold_used=res.t_value,
        trials=res.samples,
        inner_samples=0,
        passed=bool(ok),
        notes=notes,
        params={"n": D.dim, "delta": delta, "t": res.t_value},
        extra={"tdelta": res.as_dict(), "upper": 0.5 * res.m_used},
    )


def barvinok_ball_check(a: float, n: int) -> TheoremVerdict:
    """Exact gamma_n((sqrt(n)/a) B_2^n) against a^{-n} exp(n (a^2 - 1) / (2 a^2))."""
    if a < 1:
        raise ValueError("a must be >= 1")
    exact = gm.exact_gamma(LpBall(n, 2), math.sqrt(n) / a)
    log_bound = -n * math.log(a) + n * (a * a - 1.0) / (2.0 * a * a)
    bound = math.exp(log_bound)
    margin = log_bound - math.log(exact) if exact > 0 else math.inf
    return TheoremVerdict(
        theorem_id="barvinok",
        bound=bound,
        empirical=exact,
        threshold_used=a,
        trials=0,
        inner_samples=0,
        passed=bool(exact <= bound),
        notes=f"log-margin {margin:.6g}",
        params={"n": n},
        extra={"log_bound": log_bound, "log_margin": margin},
    )


def median_of_means(values: np.ndarray, blocks: int = 32) -> float:
    parts = np.array_split(values, blocks)
    return float(np.median([p.mean() for p in parts]))


POLAR_MAX_N = 16


def polar_identity_check(
    D: NormBody, N: int, s: RandomStream, workers: int = 1, rtol: float = 0.05
) -> TheoremVerdict:
    """Average of ||theta||_D^{-n} over the sphere against |D| / |B_2^n|."""
    n = D.dim
    if n > POLAR_MAX_N:
        raise ValueError(f"polar identity check limited to n <= {POLAR_MAX_N}")
    if N < 100_000:
        raise ValueError("polar identity check needs N >= 10^5")
    norms = gm.sphere_norms(D, N, s, workers)
    est = median_of_means(norms ** (-float(n)))
    exact = math.exp(log_volume(D) - log_lp_ball_volume(n, 2))
    rel = abs(est - exact) / exact
    return TheoremVerdict(
        theorem_id="polar",
        bound=exact,
        empirical=est,
        threshold_used=rtol,
        trials=N,
        inner_samples=0,
        passed=bool(rel <= rtol),
        notes=f"relative error {rel:.3g}",
        params={"n": n},
        extra={"relative_error": rel},
    )
