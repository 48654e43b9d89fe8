"""Random rotations of a fixed n-tuple whose signed sums are long in l_2."""
from __future__ import annotations

import math

import numpy as np

from .. import randsrc
from ..geometry import LpBall, NormBody, min_sign_norm
from ..randsrc import RandomStream
from ..signsets import SignSet
from ..verdict import PreconditionError, TheoremVerdict, failure_verdict
from ._common import GammaOracle, check_budget, trial_chunk, union_bound


def verify_rotation_general(
    xs,
    D: NormBody,
    delta: float,
    tau: float,
    S: SignSet,
    t: float,
    trials: int,
    s: RandomStream,
    mode: str | None = None,
    gamma_samples: int = 200_000,
    workers: int = 1,
) -> TheoremVerdict:
    """Fraction of rotations U with ||sum eps_i U x_i||_D <= t m(D) for some eps in S.

    Requires min over all signs of ||sum eps_i x_i||_2 >= tau sqrt(n).  The
    bound is 2 |S| gamma_n((2t/tau) m(D) D).
    """
    xs = np.asarray(xs, dtype=float)
    n = D.dim
    if xs.shape != (n, n):
        raise ValueError(f"expected {n} vectors in R^{n}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    check_budget(S, n, delta)
    shortest, _ = min_sign_norm(xs, LpBall(n, 2))
    if shortest < tau * math.sqrt(n) * (1 - 1e-12):
        raise PreconditionError(
            f"min signed l_2 norm {shortest:.6g} is below tau sqrt(n) = {tau * math.sqrt(n):.6g}"
        )
    s_gamma, s_trials = s.split(2)
    oracle = GammaOracle(D, s_gamma, mode, gamma_samples, workers)
    m = oracle.median
    g = oracle.gamma(2.0 * t / tau * m)
    bound, bound_slack = union_bound(len(S), g)
    threshold = t * m
    sums = S.members.astype(float) @ xs  # (|S|, n)

    def chunk(size, st):
        if len(S) == 0:
            return 0
        U = randsrc.haar_orthogonal(n, st, size)
        rotated = np.einsum("rij,sj->rsi", U, sums)
        return int(np.count_nonzero(D.norm(rotated).min(axis=1) <= threshold))

    failures = sum(randsrc.run_chunks(chunk, trials, s_trials, workers, trial_chunk(n * (n + len(S)))))
    return failure_verdict(
        "rotation",
        bound=bound,
        failures=failures,
        trials=trials,
        threshold=threshold,
        extra_slack=bound_slack,
        params={"n": n, "delta": delta, "t": t, "body_d": D.spec(), "signset": S.describe()},
        extra={"median": m, "gamma": g.as_dict(), "tau": tau, "min_l2_signed_norm": shortest},
    )
