"""Random rotations of the standard basis against l_inf small balls."""
from __future__ import annotations

import math

import numpy as np

from .. import randsrc
from ..randsrc import RandomStream
from ..signsets import SignSet
from ..verdict import DEFAULT_CONSTANTS, ConstantsTable, TheoremVerdict, failure_verdict
from ._common import check_budget, trial_chunk


def hajela_threshold(delta: float, constants: ConstantsTable = DEFAULT_CONSTANTS) -> float:
    """c sqrt(log(e/delta)) for delta < 1/4; the orthonormality floor 1 otherwise."""
    if delta < 0.25:
        return constants.c_hajela * math.sqrt(math.log(math.e / delta))
    return 1.0


def verify_hajela(
    n: int,
    delta: float,
    S: SignSet,
    trials: int,
    s: RandomStream,
    constants: ConstantsTable = DEFAULT_CONSTANTS,
    workers: int = 1,
) -> TheoremVerdict:
    """Fraction of Haar rotations U for which some eps in S has ||U eps||_inf <= threshold.

    With x_i = U e_i the signed sum is U eps.  The union bound gives the
    failure probability bound min(1, |S| 2^{-delta n}).
    """
    if not (1.0 / n < delta < 1.0):
        raise ValueError(f"delta must lie in (1/n, 1), got {delta}")
    check_budget(S, n, delta)
    threshold = hajela_threshold(delta, constants)
    E = S.members.T.astype(float)  # (n, |S|)

    def chunk(m, st):
        if len(S) == 0:
            return 0, np.inf
        U = randsrc.haar_orthogonal(n, st, m)
        mins = np.abs(U @ E).max(axis=1).min(axis=1)
        return int(np.count_nonzero(mins <= threshold)), float(mins.min())

    parts = randsrc.run_chunks(chunk, trials, s, workers, trial_chunk(n * (n + max(1, len(S)))))
    failures = sum(f for f, _ in parts)
    bound = min(1.0, len(S) * 2.0 ** (-delta * n))
    return failure_verdict(
        "hajela",
        bound=bound,
        failures=failures,
        trials=trials,
        threshold=threshold,
        notes="trivial branch delta >= 1/4" if delta >= 0.25 else "",
        params={"n": n, "delta": delta, "body_d": "lp:inf", "signset": S.describe()},
        extra={"smallest_min_norm": min((v for _, v in parts), default=math.inf),
               "constants": constants.as_dict()},
    )


def hajela_thresholds(
    delta: float, lam: float, constants: ConstantsTable = DEFAULT_CONSTANTS
) -> tuple[float, float]:
    """``(improved, original)`` lower bounds for ``f = e / delta``.

    improved = c sqrt(log f); original = exp(lam loglog f / logloglog f).
    """
    if not (0.0 < lam < 0.5):
        raise ValueError("lambda must lie in (0, 1/2)")
    if delta <= 0:
        raise ValueError("delta must be positive")
    log_f = math.log(math.e / delta)
    if log_f <= 0 or math.log(log_f) <= 0 or math.log(math.log(log_f)) <= 0:
        raise ValueError("log log log f must be positive (need f > e^e)")
    ll = math.log(log_f)
    improved = constants.c_hajela * math.sqrt(log_f)
    original = math.exp(lam * ll / math.log(ll))
    return improved, original
