"""Gaussian measure of dilates, medians, spherical means and small-ball checks.

Exact evaluation is available when a body is a scaled orthogonal image of
B_inf^n (product formula) or B_2^n (chi-square law).  Everything else goes
through Monte Carlo with Wilson 99% intervals.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import special

from . import randsrc
from .geometry import NormBody, rotation_scale, vrad
from .randsrc import RandomStream
from .verdict import SIGMAS, TheoremVerdict, binomial_sigma, resolution_floor

EXACT = "exact"
MONTE_CARLO = "monte_carlo"
WILSON_Z = 2.5758293035489004  # two-sided 99%


class UnsupportedExactError(ValueError):
    pass


def std_normal_cdf(x):
    return special.ndtr(x)


def std_normal_quantile(u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("quantile argument must lie in (0, 1)")
    out = special.ndtri(u)
    return float(out) if out.ndim == 0 else out


def normal_upper_tail(s):
    """1 - Phi(s), without cancellation for large s."""
    return special.ndtr(-np.asarray(s, dtype=float))


def cdf_tail_bound_check(s: float) -> bool:
    """Whether ``1 - Phi(s) >= exp(-s^2) / (2 sqrt 2)``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    return bool(normal_upper_tail(s) >= math.exp(-s * s) / (2.0 * math.sqrt(2.0)))


def wilson_interval(hits: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    phat = hits / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    stderr: float
    method: str
    samples: int
    hits: int = 0

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the estimate (0 for exact values)."""
        if self.method == EXACT:
            return 0.0
        return binomial_sigma(self.value, self.samples)

    @property
    def interval(self) -> tuple[float, float]:
        if self.method == EXACT:
            return self.value, self.value
        return wilson_interval(self.hits, self.samples)

    @classmethod
    def from_hits(cls, hits: int, samples: int) -> "GammaEstimate":
        lo, hi = wilson_interval(hits, samples)
        return cls(hits / samples, (hi - lo) / 2.0, MONTE_CARLO, samples, hits)

    @classmethod
    def exact(cls, value: float) -> "GammaEstimate":
        return cls(float(min(max(value, 0.0), 1.0)), 0.0, EXACT, 0, 0)

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# exact laws


def exact_shape(D: NormBody) -> tuple[float, float] | None:
    """``(p, r)`` with ``D = r U B_p^n`` and p in {2, inf}, or None."""
    red = rotation_scale(D)
    if red is None or not (red[0] == 2 or math.isinf(red[0])):
        return None
    return red


def _require_exact(D: NormBody) -> tuple[float, float]:
    red = exact_shape(D)
    if red is None:
        raise UnsupportedExactError(
            "exact mode needs a scaled orthogonal image of the l_2 or l_inf ball"
        )
    return red


def _exact_cdf(p: float, n: int, radius: float) -> float:
    """P(||Z||_p <= radius) for p in {2, inf}."""
    if radius <= 0:
        return 0.0
    if math.isinf(p):
        # (2 Phi(s) - 1)^n = erf(s / sqrt 2)^n; logs keep tiny values accurate
        e = special.erf(radius / math.sqrt(2.0))
        return math.exp(n * math.log(e)) if e > 0 else 0.0
    return float(special.gammainc(n / 2.0, radius * radius / 2.0))


def _exact_quantile(p: float, n: int, level: float) -> float:
    """Radius whose exact cdf equals ``level``."""
    if math.isinf(p):
        per_coord = math.exp(math.log(level) / n)
        return float(special.ndtri((1.0 + per_coord) / 2.0))
    return math.sqrt(2.0 * float(special.gammaincinv(n / 2.0, level)))


def exact_gamma(D: NormBody, t: float) -> float:
    p, r = _require_exact(D)
    return _exact_cdf(p, D.dim, t * r)


def exact_median(D: NormBody) -> float:
    p, r = _require_exact(D)
    n = D.dim
    if math.isinf(p):
        m = float(special.ndtri((1.0 + 2.0 ** (-1.0 / n)) / 2.0))
    else:
        m = math.sqrt(2.0 * float(special.gammaincinv(n / 2.0, 0.5)))
    return m / r


def exact_quantile(D: NormBody, level: float) -> float:
    """Smallest t with gamma_n(tD) = level, for exact shapes."""
    p, r = _require_exact(D)
    return _exact_quantile(p, D.dim, level) / r


# ---------------------------------------------------------------------------
# Monte Carlo primitives


def gaussian_norms(D: NormBody, N: int, s: RandomStream, workers: int = 1) -> np.ndarray:
    """``||Z_j||_D`` for N standard Gaussian vectors, in a worker-independent order."""
    n = D.dim
    parts = randsrc.run_chunks(
        lambda m, st: D.norm(randsrc.gaussian_vector(n, st, m)), N, s, workers
    )
    return randsrc.concat_chunks(parts)


def sphere_norms(D: NormBody, N: int, s: RandomStream, workers: int = 1) -> np.ndarray:
    n = D.dim
    parts = randsrc.run_chunks(
        lambda m, st: D.norm(randsrc.sphere_point(n, st, m)), N, s, workers
    )
    return randsrc.concat_chunks(parts)


def _mode(mode: str | None, D: NormBody) -> str:
    if mode is None:
        return EXACT if exact_shape(D) is not None else MONTE_CARLO
    if mode not in (EXACT, MONTE_CARLO):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def gamma_measure(
    D: NormBody,
    t: float,
    mode: str | None = None,
    N: int = 100_000,
    s: RandomStream | None = None,
    workers: int = 1,
) -> GammaEstimate:
    """Estimate gamma_n(tD) = P(||Z||_D <= t).

    ``mode=None`` picks exact evaluation whenever the shape allows it.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    mode = _mode(mode, D)
    if mode == EXACT:
        return GammaEstimate.exact(exact_gamma(D, t))
    if s is None:
        raise ValueError("Monte Carlo mode needs a random stream")
    hits = randsrc.run_chunks(
        lambda m, st: int(np.count_nonzero(D.norm(randsrc.gaussian_vector(D.dim, st, m)) <= t)),
        N,
        s,
        workers,
    )
    return GammaEstimate.from_hits(sum(hits), N)


def gamma_curve(
    D: NormBody, ts: Sequence[float], N: int, s: RandomStream, workers: int = 1
) -> list[GammaEstimate]:
    """Monte Carlo gamma_n(tD) for several t on one shared sample (monotone in t)."""
    norms = np.sort(gaussian_norms(D, N, s, workers))
    hits = np.searchsorted(norms, np.asarray(ts, dtype=float), side="right")
    return [GammaEstimate.from_hits(int(h), N) for h in hits]


def upper_median(values: np.ndarray) -> float:
    """Order statistic of rank ceil(N/2)."""
    k = math.ceil(len(values) / 2) - 1
    return float(np.partition(values, k)[k])


def gaussian_median(
    D: NormBody,
    mode: str | None = None,
    N: int = 100_000,
    s: RandomStream | None = None,
    workers: int = 1,
) -> float:
    """Median m(D) of ||Z||_D."""
    mode = _mode(mode, D)
    if mode == EXACT:
        return exact_median(D)
    if s is None:
        raise ValueError("Monte Carlo mode needs a random stream")
    return upper_median(gaussian_norms(D, N, s, workers))


@dataclass(frozen=True)
class BodyGaussStats:
    median_m: float
    gauss_mean: float
    variance: float
    sphere_mean_M: float
    beta_ratio: float
    d_exponent: float
    sphere_mean_stderr: float = 0.0
    samples: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def gauss_stats(D: NormBody, N: int, s: RandomStream, workers: int = 1) -> BodyGaussStats:
    """Monte Carlo estimates of m(D), E||Z||_D, Var||Z||_D, M(D), beta(D), d(D)."""
    if N < 10_000:
        raise ValueError("gauss_stats needs N >= 10^4")
    s_gauss, s_sphere, s_small = s.split(3)
    norms = gaussian_norms(D, N, s_gauss, workers)
    sph = sphere_norms(D, N, s_sphere, workers)
    m = upper_median(norms)
    mean = float(norms.mean())
    var = float(norms.var(ddof=1))
    M = float(sph.mean())
    small = gamma_measure(D, m / 2.0, MONTE_CARLO, N, s_small, workers)
    d = float(D.dim) if small.value == 0 else min(float(D.dim), -math.log(small.value))
    return BodyGaussStats(
        median_m=m,
        gauss_mean=mean,
        variance=var,
        sphere_mean_M=M,
        beta_ratio=var / (M * M),
        d_exponent=d,
        sphere_mean_stderr=float(sph.std(ddof=1) / math.sqrt(N)),
        samples=N,
    )


def d_exponent_exact(D: NormBody) -> float:
    """d(D) = min(n, -log gamma_n(m(D)/2 D)) for exact shapes."""
    g = exact_gamma(D, exact_median(D) / 2.0)
    return float(D.dim) if g <= 0 else min(float(D.dim), -math.log(g))


def sphere_smallball(
    D: NormBody, t: float, N: int, s: RandomStream, workers: int = 1
) -> GammaEstimate:
    """Monte Carlo sigma(theta in S^{n-1} : ||theta||_D <= t)."""
    if N < 10_000:
        raise ValueError("sphere_smallball needs N >= 10^4")
    hits = randsrc.run_chunks(
        lambda m, st: int(np.count_nonzero(D.norm(randsrc.sphere_point(D.dim, st, m)) <= t)),
        N,
        s,
        workers,
    )
    return GammaEstimate.from_hits(sum(hits), N)


def comparison_check(
    D: NormBody, t: float, N: int, s: RandomStream, workers: int = 1
) -> TheoremVerdict:
    """Check sigma(S^{n-1} cap tD) <= 2 gamma_n(2 sqrt(n) tD) with 3 sigma slack per side."""
    n = D.dim
    s_left, s_right = s.split(2)
    left = sphere_smallball(D, t, N, s_left, workers)
    dil = 2.0 * math.sqrt(n) * t
    right_mc = gamma_measure(D, dil, MONTE_CARLO, N, s_right, workers)
    extra = {"left": left.as_dict(), "right_mc": right_mc.as_dict()}
    right_val, right_sigma = right_mc.value, right_mc.sigma
    if exact_shape(D) is not None:
        right_exact = exact_gamma(D, dil)
        extra["right_exact"] = right_exact
        right_val, right_sigma = right_exact, 0.0
    bound = min(1.0, 2.0 * right_val)
    slack = SIGMAS * (left.sigma + 2.0 * right_sigma)
    return TheoremVerdict(
        theorem_id="comparison",
        bound=bound,
        empirical=left.value,
        threshold_used=t,
        trials=N,
        inner_samples=0,
        passed=bool(left.value <= bound + slack),
        slack=slack,
        failures=left.hits,
        params={"n": n, "t": t},
        extra=extra,
    )


def hajela_smallball_bound(n: int, delta: float) -> tuple[float, float, float]:
    """``(threshold, analytic_bound, target)`` for the l_inf sphere small-ball lemma.

    threshold is the radius s/(2 sqrt n) with s = sqrt(log(e/delta))/2.
    """
    if not (1.0 / n < delta < 0.25):
        raise ValueError(f"delta must lie in (1/n, 1/4), got {delta} for n = {n}")
    threshold = 0.25 * math.sqrt(math.log(math.e / delta)) / math.sqrt(n)
    analytic = 2.0 * math.exp(-(n / math.sqrt(2.0)) * (delta / math.e) ** 0.25)
    target = 2.0 ** (-delta * n)
    return threshold, analytic, target


def kv_smallball_check(
    D: NormBody,
    t: float,
    N: int = 100_000,
    s: RandomStream | None = None,
    workers: int = 1,
    mode: str | None = None,
) -> TheoremVerdict:
    """Compare gamma_n(t m(D) D) with t^{d(D)}/2 for 0 < t < 1/2."""
    if not (0 < t < 0.5):
        raise ValueError("t must lie in (0, 1/2)")
    mode = _mode(mode, D)
    if mode == EXACT:
        m = exact_median(D)
        d = d_exponent_exact(D)
        left = GammaEstimate.exact(exact_gamma(D, t * m))
    else:
        s_stats, s_left = s.split(2)
        st = gauss_stats(D, N, s_stats, workers)
        m, d = st.median_m, st.d_exponent
        left = gamma_measure(D, t * m, MONTE_CARLO, N, s_left, workers)
    bound = 0.5 * t**d
    notes = ""
    if mode == MONTE_CARLO and left.hits == 0 and bound < resolution_floor(N):
        notes = "below resolution"
    slack = SIGMAS * left.sigma
    return TheoremVerdict(
        theorem_id="kv",
        bound=bound,
        empirical=left.value,
        threshold_used=t * m,
        trials=N if mode == MONTE_CARLO else 0,
        inner_samples=0,
        passed=bool(left.value <= bound + slack),
        notes=notes,
        slack=slack,
        failures=left.hits,
        params={"n": D.dim, "t": t},
        extra={"median": m, "d_exponent": d, "method": mode},
    )


def sphere_mean_vrad(D: NormBody, N: int, s: RandomStream, workers: int = 1) -> tuple[float, float]:
    """``(M(D) vrad(D), stderr)``; the product is at least 1 for every body."""
    sph = sphere_norms(D, N, s, workers)
    v = vrad(D)
    return float(sph.mean() * v), float(sph.std(ddof=1) / math.sqrt(N) * v)
