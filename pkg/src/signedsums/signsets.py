"""Sign sets S in {-1, 1}^n under the cardinality budget 2^{delta n}."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import MAX_EXHAUSTIVE_N, SignVector
from .randsrc import RandomStream


def budget(n: int, delta: float) -> int:
    """floor(2^{delta n}), saturating at 2^n.

    Values within 1e-9 (relative) of an integer are rounded to it, so that
    e.g. delta = log2(k)/n admits exactly k members.
    """
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    e = delta * n
    if e >= n:
        return 1 << n
    if e < 1000:
        v = 2.0**e
        k = round(v)
        return int(k) if abs(v - k) <= 1e-9 * v else int(math.floor(v))
    whole = int(math.floor(e))
    return int(2.0 ** (e - whole) * 2**52) << (whole - 52)


def _count_distinct(M: np.ndarray) -> int:
    if M.shape[1] <= 62:
        keys = (M > 0).astype(np.int64) @ (np.int64(1) << np.arange(M.shape[1], dtype=np.int64))
        return len(np.unique(keys))
    return len({row.tobytes() for row in M})


def _cube(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.empty((1 << n, n), dtype=np.int8)
    for j in range(n):
        out[:, j] = 1 - 2 * ((idx >> j) & 1)
    return out


@dataclass(frozen=True, eq=False)
class SignSet:
    """Distinct sign vectors of length n, stored as an ``(m, n)`` int8 array.

    ``delta`` is the budget exponent: ``len(S) <= floor(2^{delta n})``.
    ``family`` names the construction for reports.
    """

    members: np.ndarray
    n: int
    delta: float
    family: str = "custom"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        M = np.asarray(self.members).astype(np.int8, copy=False).reshape(-1, self.n)
        if self.check:
            if not np.all((M == 1) | (M == -1)):
                raise ValueError("sign set entries must be -1 or +1")
            if _count_distinct(M) != len(M):
                raise ValueError("sign set members must be distinct")
        if len(M) > budget(self.n, self.delta):
            raise ValueError(
                f"|S| = {len(M)} exceeds the budget 2^(delta n) = {budget(self.n, self.delta)}"
            )
        M.setflags(write=False)
        object.__setattr__(self, "members", M)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return (SignVector(row) for row in self.members)

    def negated(self) -> "SignSet":
        return SignSet(-self.members, self.n, self.delta, self.family, check=False)

    def describe(self) -> str:
        return f"{self.family}({len(self)})"


def natural_delta(n: int, size: int) -> float:
    """Smallest delta whose budget admits ``size`` members."""
    return 0.0 if size <= 1 else min(1.0, math.log2(size) / n)


def signset_random(n: int, size: int, s: RandomStream, delta: float | None = None) -> SignSet:
    """``size`` distinct uniformly random sign vectors (duplicates are redrawn)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if size < 0 or (n < 63 and size > (1 << n)):
        raise ValueError(f"cannot draw {size} distinct sign vectors of length {n}")
    seen: set[bytes] = set()
    rows = []
    while len(rows) < size:
        batch = s.signs((max(8, 2 * (size - len(rows))), n))
        for row in batch:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(row)
                if len(rows) == size:
                    break
    members = np.array(rows, dtype=np.int8).reshape(size, n)
    return SignSet(members, n, natural_delta(n, size) if delta is None else delta, "random")


def signset_all(n: int) -> SignSet:
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"full cube limited to n <= {MAX_EXHAUSTIVE_N}")
    return SignSet(_cube(n), n, 1.0, "all", check=False)


def signset_hamming_ball(n: int, center, radius: int) -> SignSet:
    """All sign vectors within Hamming distance ``radius`` of ``center``."""
    c = center.signs if isinstance(center, SignVector) else np.asarray(center, dtype=np.int8)
    if len(c) != n:
        raise ValueError("center has the wrong length")
    if not 0 <= radius <= n:
        raise ValueError("radius must lie in [0, n]")
    size = sum(math.comb(n, k) for k in range(radius + 1))
    if size > (1 << MAX_EXHAUSTIVE_N):
        raise ValueError("Hamming ball too large to materialise")
    rows = []
    for k in range(radius + 1):
        for idx in itertools.combinations(range(n), k):
            row = c.copy()
            row[list(idx)] *= -1
            rows.append(row)
    return SignSet(np.array(rows, dtype=np.int8), n, natural_delta(n, size), f"hamming:{radius}")


def parse_signset(spec: str, n: int, s: RandomStream, delta: float | None = None) -> SignSet:
    """``random:<size> | hamming:<radius> | all``; Hamming balls centre on (1, ..., 1)."""
    head, _, arg = spec.partition(":")
    if head == "random":
        return signset_random(n, int(arg), s, delta)
    if head == "hamming":
        S = signset_hamming_ball(n, np.ones(n, dtype=np.int8), int(arg))
        return S if delta is None else SignSet(S.members, n, delta, S.family)
    if head == "all":
        return signset_all(n)
    raise ValueError(f"unknown sign set family {spec!r}")
