from __future__ import annotations

import math

from .. import gaussmeasure as gm
from ..geometry import NormBody
from ..randsrc import RandomStream
from ..signsets import SignSet, budget
from ..verdict import SIGMAS

# Trials handled per random substream.  Fixed so results do not depend on
# the worker count.
TRIAL_CHUNK = 256


def trial_chunk(per_trial_floats: int, cap: int = 1 << 22) -> int:
    """Chunk size keeping one chunk's working set under ``cap`` doubles."""
    return max(1, min(TRIAL_CHUNK, cap // max(1, per_trial_floats)))


def check_budget(S: SignSet, n: int, delta: float) -> None:
    if S.n != n:
        raise ValueError(f"sign set has length {S.n}, expected {n}")
    if len(S) > budget(n, delta):
        raise ValueError(f"|S| = {len(S)} exceeds 2^(delta n) = {budget(n, delta)}")


class GammaOracle:
    """Median and Gaussian measures of one body, exact where possible.

    Monte Carlo quantities are computed once on fixed substreams so repeated
    calls are reproducible.
    """

    def __init__(self, D: NormBody, s: RandomStream | None, mode: str | None = None,
                 samples: int = 200_000, workers: int = 1):
        self.D = D
        self.mode = gm._mode(mode, D)
        self.samples = samples
        self.workers = workers
        if self.mode == gm.MONTE_CARLO:
            if s is None:
                raise ValueError("Monte Carlo mode needs a random stream")
            s_med, self._s_gamma = s.split(2)
            self.median = gm.gaussian_median(D, gm.MONTE_CARLO, samples, s_med, workers)
        else:
            self._s_gamma = None
            self.median = gm.exact_median(D)

    def gamma(self, t: float) -> gm.GammaEstimate:
        if self.mode == gm.EXACT:
            return gm.GammaEstimate.exact(gm.exact_gamma(self.D, t))
        st = self._s_gamma.split(1)[0]
        return gm.gamma_measure(self.D, t, gm.MONTE_CARLO, self.samples, st, self.workers)


def union_bound(count: int, g: gm.GammaEstimate, factor: float = 2.0) -> tuple[float, float]:
    """``(min(1, factor |S| gamma), Monte Carlo slack of that product)``."""
    return min(1.0, factor * count * g.value), factor * count * SIGMAS * g.sigma


def exp_neg(x: float) -> float:
    return math.exp(-x)
