"""Signed sums of independent uniform points from convex bodies."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import randsrc
from ..geometry import (
    LpBall,
    NormBody,
    Scaled,
    log_lp_ball_volume,
    log_volume,
    min_sign_norm_batch,
)
from ..randsrc import RandomStream
from ..signsets import SignSet, signset_random
from ..tdelta import t_delta
from ..verdict import (
    DEFAULT_CONSTANTS,
    ConstantsTable,
    PreconditionError,
    TheoremVerdict,
    failure_verdict,
)
from ._common import GammaOracle, check_budget, trial_chunk, union_bound


def rescale_to_volume(V: NormBody, target_log_volume: float) -> NormBody:
    """Dilate V so that log|V| equals ``target_log_volume``."""
    r = math.exp((target_log_volume - log_volume(V)) / V.dim)
    return V if abs(r - 1.0) < 1e-15 else Scaled(r, V)


def gluskin_milman_bound(n: int, t: float) -> float:
    """(t e^{(1 - t^2)/2})^n."""
    return (t * math.exp((1.0 - t * t) / 2.0)) ** n


def verify_gluskin_milman(
    bodies: Sequence[NormBody],
    D: NormBody,
    lambdas: Sequence[float],
    t: float,
    N: int,
    s: RandomStream,
    workers: int = 1,
) -> TheoremVerdict:
    """P(||sum lambda_i x_i||_D <= t |lambda|_2) for x_i uniform in V_i, all |V_i| = |D|."""
    if not (0.0 < t < 1.0):
        raise ValueError("t must lie in (0, 1)")
    if len(bodies) != len(lambdas) or not bodies:
        raise ValueError("need one coefficient per body")
    n = D.dim
    log_vd = log_volume(D)
    for V in bodies:
        if V.dim != n:
            raise ValueError("all bodies must share the dimension of D")
        if abs(math.expm1(log_volume(V) - log_vd)) > 1e-9:
            raise ValueError("every V_i must have the volume of D (see rescale_to_volume)")
    lam = np.asarray(lambdas, dtype=float)
    radius = t * math.sqrt(float(lam @ lam))

    def chunk(size, st):
        total = np.zeros((size, n))
        for li, V in zip(lam, bodies):
            total += li * randsrc.body_point(V, st, size)
        return int(np.count_nonzero(D.norm(total) <= radius))

    hits = sum(randsrc.run_chunks(chunk, N, s, workers))
    return failure_verdict(
        "gluskin-milman",
        bound=gluskin_milman_bound(n, t),
        failures=hits,
        trials=N,
        threshold=radius,
        params={"n": n, "t": t, "body_d": D.spec(), "body_k": ",".join(V.spec() for V in bodies)},
        extra={"m": len(bodies)},
    )


def cor34_threshold(K: NormBody, D: NormBody, constants: ConstantsTable = DEFAULT_CONSTANTS) -> float:
    """(1/10) (|K|/|D|)^{1/n} sqrt(n)."""
    n = K.dim
    return constants.c_gm_threshold * math.exp((log_volume(K) - log_volume(D)) / n) * math.sqrt(n)


def banaszczyk_lower(K: NormBody, D: NormBody, constants: ConstantsTable = DEFAULT_CONSTANTS) -> float:
    """Volumetric lower bound c sqrt(n) (|K|/|D|)^{1/n} for beta(K, D)."""
    n = K.dim
    return constants.c_banaszczyk * math.sqrt(n) * math.exp((log_volume(K) - log_volume(D)) / n)


def _min_signed_norms(K: NormBody, D: NormBody, size: int, st: RandomStream) -> np.ndarray:
    n = K.dim
    xs = randsrc.body_point(K, st, (size, n))
    vals, _ = min_sign_norm_batch(xs, D)
    return vals


def verify_cor34(
    K: NormBody,
    D: NormBody,
    trials: int,
    s: RandomStream,
    constants: ConstantsTable = DEFAULT_CONSTANTS,
    workers: int = 1,
) -> TheoremVerdict:
    """Fraction of n-tuples from K with some signed sum shorter than the volumetric threshold."""
    n = K.dim
    if D.dim != n:
        raise ValueError("K and D must share the dimension")
    threshold = cor34_threshold(K, D, constants)
    chunk_size = trial_chunk(n * n * 64)

    def chunk(size, st):
        vals = _min_signed_norms(K, D, size, st)
        return int(np.count_nonzero(vals < threshold)), float(vals.min())

    parts = randsrc.run_chunks(chunk, trials, s, workers, chunk_size)
    return failure_verdict(
        "cor34",
        bound=math.exp(-n),
        failures=sum(f for f, _ in parts),
        trials=trials,
        threshold=threshold,
        params={"n": n, "body_k": K.spec(), "body_d": D.spec()},
        extra={"smallest_min_norm": min(v for _, v in parts), "constants": constants.as_dict()},
    )


def _signed_norm_min(points: np.ndarray, signs: np.ndarray, D: NormBody) -> np.ndarray:
    """min over rows of ``signs`` of ||sum eps_i x_i||_D for a batch of n-tuples."""
    sums = np.einsum("sk,...kd->...sd", signs, points)
    return D.norm(sums).min(axis=-1)


def _resolve_t(D, delta, t, oracle_mode, N, s, workers):
    """t itself, or t_{D,delta}/10 when t is None; returns (t, tdelta-or-None)."""
    if t is not None:
        return t, None
    res = t_delta(D, delta, oracle_mode, N, s, workers)
    return res.t_value / 10.0, res


def verify_thm15_ball(
    D: NormBody,
    delta: float,
    S: SignSet,
    t: float | None,
    trials: int,
    s: RandomStream,
    mode: str | None = None,
    gamma_samples: int = 1_000_000,
    constants: ConstantsTable = DEFAULT_CONSTANTS,
    workers: int = 1,
) -> TheoremVerdict:
    """n-tuples uniform in B_2^n: P(some eps in S has ||sum eps_i x_i||_D <= t m(D)).

    Bound 2 |S| gamma_n(20 t m(D) D) + e^{-n}.  ``t=None`` uses t_{D,delta}/10,
    for which the bound is at most 3 e^{-n}.
    """
    n = D.dim
    check_budget(S, n, delta)
    s_gamma, s_t, s_trials = s.split(3)
    oracle = GammaOracle(D, s_gamma, mode, gamma_samples, workers)
    t, tres = _resolve_t(D, delta, t, oracle.mode, gamma_samples, s_t, workers)
    m = tres.m_used if tres is not None else oracle.median
    threshold = t * m
    g = oracle.gamma(constants.c_dilate * threshold)
    ub, ub_slack = union_bound(len(S), g)
    bound = min(1.0, ub + math.exp(-n))
    signs = S.members.astype(float)
    ball = LpBall(n, 2)

    def chunk(size, st):
        if len(S) == 0:
            return 0
        xs = randsrc.body_point(ball, st, (size, n))
        return int(np.count_nonzero(_signed_norm_min(xs, signs, D) <= threshold))

    failures = sum(randsrc.run_chunks(chunk, trials, s_trials, workers, trial_chunk(n * (n + len(S)))))
    extra = {"median": m, "gamma": g.as_dict(), "constants": constants.as_dict()}
    if tres is not None:
        extra["tdelta"] = tres.as_dict()
        extra["tdelta_regime_bound"] = 3.0 * math.exp(-n)
    return failure_verdict(
        "thm15",
        bound=bound,
        failures=failures,
        trials=trials,
        threshold=threshold,
        extra_slack=ub_slack,
        params={"n": n, "delta": delta, "t": t, "body_k": "lp:2", "body_d": D.spec(),
                "signset": S.describe()},
        extra=extra,
    )


def normalize_volume_to_ball(K: NormBody) -> NormBody:
    """Dilate K to the volume of B_2^n."""
    return rescale_to_volume(K, log_lp_ball_volume(K.dim, 2))


def verify_thm16_body(
    K: NormBody,
    D: NormBody,
    delta: float,
    S: SignSet,
    t: float,
    rot_trials: int,
    point_trials: int,
    s: RandomStream,
    mode: str | None = None,
    gamma_samples: int = 1_000_000,
    constants: ConstantsTable = DEFAULT_CONSTANTS,
    workers: int = 1,
    check_precondition: bool = True,
) -> TheoremVerdict:
    """Two-level Monte Carlo over rotations U and n-tuples from U(K).

    K is first rescaled to |K| = |B_2^n|.  A rotation is flagged when its inner
    failure estimate exceeds e^{-n/2}; the flagged fraction is compared with
    3 e^{-n/2}.  The precondition |S| gamma_n(20 t m(D) D) < e^{-n} is
    enforced unless ``check_precondition`` is False.
    """
    n = D.dim
    if K.dim != n:
        raise ValueError("K and D must share the dimension")
    check_budget(S, n, delta)
    Kn = normalize_volume_to_ball(K)
    s_gamma, s_trials = s.split(2)
    oracle = GammaOracle(D, s_gamma, mode, gamma_samples, workers)
    m = oracle.median
    threshold = t * m
    g = oracle.gamma(constants.c_dilate * threshold)
    lhs = len(S) * g.value
    pre_ok = lhs < math.exp(-n)
    if check_precondition and not pre_ok:
        raise PreconditionError(
            f"|S| gamma_n(20 t m(D) D) = {lhs:.3g} is not below e^-n = {math.exp(-n):.3g}"
        )
    signs = S.members.astype(float)
    level = math.exp(-n / 2.0)
    rot_chunk = trial_chunk(point_trials * n * (n + max(1, len(S))))

    def chunk(size, st):
        if len(S) == 0:
            return 0, 0
        U = randsrc.haar_orthogonal(n, st, size)
        pts = randsrc.body_point(Kn, st, (size, point_trials, n))
        sums = np.einsum("sk,rpkd->rpsd", signs, pts)
        rotated = np.einsum("rij,rpsj->rpsi", U, sums)
        fails = (D.norm(rotated).min(axis=-1) <= threshold).sum(axis=1)
        return int(np.count_nonzero(fails / point_trials > level)), int(fails.sum())

    parts = randsrc.run_chunks(chunk, rot_trials, s_trials, workers, rot_chunk)
    flagged = sum(f for f, _ in parts)
    inner = sum(i for _, i in parts)
    return failure_verdict(
        "thm16",
        bound=min(1.0, 3.0 * level),
        failures=flagged,
        trials=rot_trials,
        threshold=threshold,
        inner_samples=point_trials,
        notes="" if pre_ok else "precondition not met",
        params={"n": n, "delta": delta, "t": t, "body_k": K.spec(), "body_d": D.spec(),
                "signset": S.describe()},
        extra={
            "median": m,
            "precondition_lhs": lhs,
            "precondition_holds": pre_ok,
            "pooled_inner_rate": inner / (rot_trials * point_trials),
            "inner_failures": inner,
            "gamma": g.as_dict(),
        },
    )


@dataclass
class LpScalingReport:
    p: float
    ns: list[int]
    set_size: int
    trials: int
    q05: list[float] = field(default_factory=list)
    q05_volumetric: list[float] = field(default_factory=list)
    medians: list[float] = field(default_factory=list)
    doubling_ratios: list[float] = field(default_factory=list)
    passed: bool = True
    max_drop: float = 0.2

    def as_dict(self) -> dict:
        return asdict(self)

    def verdict(self) -> TheoremVerdict:
        worst = min(self.doubling_ratios, default=1.0)
        return TheoremVerdict(
            theorem_id="lp-scaling",
            bound=1.0 - self.max_drop,
            empirical=worst,
            threshold_used=self.p,
            trials=self.trials,
            inner_samples=self.set_size,
            passed=self.passed,
            notes="worst per-doubling ratio of the 5th percentile",
            params={"n": max(self.ns), "body_k": "lp:2", "body_d": f"lp:{self.p:g}"},
            extra=self.as_dict(),
        )


def verify_lp_scaling(
    p: float,
    ns: Sequence[int],
    set_size: int,
    trials: int,
    s: RandomStream,
    delta: float | None = None,
    workers: int = 1,
    max_drop: float = 0.2,
) -> LpScalingReport:
    """Trend of min over S of ||sum eps_i x_i||_p / (sqrt(p) n^{1/p}) with x_i uniform in B_2^n.

    The 5th percentile must not fall by more than ``max_drop`` per doubling of n.
    p = inf is the l_inf case handled by :func:`verify_hajela`.
    """
    if math.isinf(p):
        raise ValueError("p = inf is covered by verify_hajela")
    if p < 1:
        raise ValueError("p must be >= 1")
    ns = sorted(int(n) for n in ns)
    report = LpScalingReport(p=p, ns=ns, set_size=set_size, trials=trials, max_drop=max_drop)
    streams = s.split(len(ns))
    for n, st in zip(ns, streams):
        s_set, s_pts = st.split(2)
        S = signset_random(n, set_size, s_set, delta)
        signs = S.members.astype(float)
        D, ball = LpBall(n, p), LpBall(n, 2)

        def chunk(size, sub, n=n, signs=signs, D=D, ball=ball):
            xs = randsrc.body_point(ball, sub, (size, n))
            return _signed_norm_min(xs, signs, D)

        mins = randsrc.concat_chunks(
            randsrc.run_chunks(chunk, trials, s_pts, workers, trial_chunk(n * (n + set_size)))
        )
        r = mins / (math.sqrt(p) * n ** (1.0 / p))
        vol_norm = math.sqrt(n) * math.exp((log_lp_ball_volume(n, 2) - log_lp_ball_volume(n, p)) / n)
        report.q05.append(float(np.percentile(r, 5)))
        report.q05_volumetric.append(float(np.percentile(mins / vol_norm, 5)))
        report.medians.append(float(np.median(r)))
    for (n0, q0), (n1, q1) in zip(zip(ns, report.q05), zip(ns[1:], report.q05[1:])):
        report.doubling_ratios.append((q1 / q0) ** (1.0 / math.log2(n1 / n0)))
    report.passed = all(ratio >= 1.0 - max_drop for ratio in report.doubling_ratios)
    return report
