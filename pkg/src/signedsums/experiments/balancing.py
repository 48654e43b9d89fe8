"""Baseline balancing heuristics: greedy signs and a hill-climbing estimate of beta(K, D)."""
from __future__ import annotations

import numpy as np

from ..geometry import NormBody, SignVector, min_sign_norm
from ..randsrc import RandomStream, body_point

BETA_MAX_N = 20


def greedy_balance(xs, D: NormBody) -> tuple[SignVector, float]:
    """Pick each sign in turn to minimise the running sum's D-norm; ties go to +1."""
    xs = np.asarray(xs, dtype=float)
    total = np.zeros(xs.shape[1])
    signs = np.empty(len(xs), dtype=np.int8)
    for i, x in enumerate(xs):
        plus, minus = D.norm(total + x), D.norm(total - x)
        signs[i] = 1 if plus <= minus else -1
        total = total + signs[i] * x
    return SignVector(signs), float(D.norm(total))


def _project(x: np.ndarray, K: NormBody) -> np.ndarray:
    r = K.norm(x)
    return x / r if r > 1 else x


def beta_estimate(
    K: NormBody,
    D: NormBody,
    restarts: int,
    iters: int,
    s: RandomStream,
    step: float = 0.5,
) -> float:
    """Best min-over-signs value found for n-tuples in K.

    Each restart starts from uniform points of K pushed radially to its
    boundary, then perturbs one vector at a time (cycling through them) and
    keeps a move when the exhaustive minimum over signs grows.  Any value
    returned is attained by an admissible tuple, so it is a certified lower
    estimate of beta(K, D).
    """
    n = K.dim
    if n > BETA_MAX_N:
        raise ValueError(f"beta_estimate limited to n <= {BETA_MAX_N}")
    best = 0.0
    for st in s.split(restarts):
        xs = body_point(K, st, n)
        xs = xs / K.norm(xs)[:, None]
        value, _ = min_sign_norm(xs, D)
        h = step
        for it in range(iters):
            i = it % n
            cand = xs.copy()
            cand[i] = _project(cand[i] + h * st.normal(n), K)
            v, _ = min_sign_norm(cand, D)
            if v > value:
                xs, value = cand, v
            else:
                h = max(h * 0.95, 1e-3)
        best = max(best, value)
    return float(best)
