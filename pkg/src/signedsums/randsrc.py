"""Seeded, splittable randomness and the samplers built on it.

A :class:`RandomStream` is a Philox4x64-10 counter-based generator keyed by
``(seed, stream_id)``.  Substreams are derived arithmetically (SplitMix64 of
the parent id and a running split index), so chunked Monte Carlo work can be
dispatched to any number of workers and reduced in index order with identical
results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .geometry import LinearImage, LpBall, NormBody, Scaled, _as_p, lp_norm

ALGORITHM = "philox4x64-10+splitmix64-substreams; box-muller normals; marsaglia-tsang gamma"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Default number of samples per Monte Carlo chunk.  Part of the numeric
# contract: changing it changes every Monte Carlo result.
CHUNK = 1 << 15

T = TypeVar("T")


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class RandomStream:
    """Deterministic random source owned by a single consumer.

    Use :meth:`split` to hand randomness to other consumers; streams are not
    meant to be copied.
    """

    algorithm = ALGORITHM

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) <= _MASK and 0 <= int(stream_id) <= _MASK):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._bits = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        self._splits = 0

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"

    def __copy__(self):
        raise TypeError("random streams cannot be copied; use split()")

    __deepcopy__ = __copy__

    def split(self, k: int) -> list["RandomStream"]:
        """Return k fresh substreams.  Repeated calls never repeat a child."""
        base = self._splits
        self._splits += k
        mixed = (self.stream_id * _GOLDEN) & _MASK
        return [
            RandomStream(self.seed, splitmix64((mixed + base + i + 1) & _MASK))
            for i in range(k)
        ]

    def uniform(self, size=None):
        """Uniform doubles on the open interval (0, 1), 53 bits each."""
        shape = () if size is None else size
        count = int(np.prod(shape))
        raw = self._bits.random_raw(count) >> np.uint64(11)
        u = (raw.astype(np.float64) + 0.5) * 2.0**-53
        return float(u[0]) if size is None else u.reshape(shape)

    def normal(self, size=None):
        """Standard normals by the Box-Muller transform."""
        shape = () if size is None else size
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u = self.uniform((pairs, 2))
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        z = z[:count]
        return float(z[0]) if size is None else z.reshape(shape)

    def signs(self, size) -> np.ndarray:
        return np.where(self.uniform(size) < 0.5, -1, 1).astype(np.int8)

    def integers(self, high: int, size) -> np.ndarray:
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)

    def gamma(self, shape: float, size) -> np.ndarray:
        """Gamma(shape, 1) variates, Marsaglia-Tsang with the boost for shape < 1."""
        if shape <= 0:
            raise ValueError("gamma shape must be positive")
        size = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(size))
        if shape < 1:
            g = self._gamma_mt(shape + 1.0, count)
            g = g * self.uniform(count) ** (1.0 / shape)
        else:
            g = self._gamma_mt(shape, count)
        return g.reshape(size)

    def _gamma_mt(self, a: float, count: int) -> np.ndarray:
        d = a - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        out = np.empty(count)
        todo = np.arange(count)
        while todo.size:
            m = todo.size
            x = self.normal(m)
            u = self.uniform(m)
            v = (1.0 + c * x) ** 3
            ok = v > 0
            logv = np.log(np.where(ok, v, 1.0))
            ok &= np.log(u) < 0.5 * x * x + d - d * v + d * logv
            out[todo[ok]] = d * v[ok]
            todo = todo[~ok]
        return out


# ---------------------------------------------------------------------------
# samplers; each accepts ``size`` for a batch of independent draws


def _batch_shape(size, *tail):
    if size is None:
        return tail
    size = (size,) if np.isscalar(size) else tuple(size)
    return size + tail


def gaussian_vector(n: int, s: RandomStream, size=None) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return s.normal(_batch_shape(size, n))


def sphere_point(n: int, s: RandomStream, size=None) -> np.ndarray:
    """Uniform points on the Euclidean unit sphere S^{n-1}."""
    g = gaussian_vector(n, s, size)
    flat = g.reshape(-1, n)
    r = np.linalg.norm(flat, axis=1)
    bad = np.flatnonzero(r == 0)
    while bad.size:
        flat[bad] = s.normal((bad.size, n))
        r[bad] = np.linalg.norm(flat[bad], axis=1)
        bad = bad[r[bad] == 0]
    return (flat / r[:, None]).reshape(g.shape)


def haar_orthogonal(n: int, s: RandomStream, size=None) -> np.ndarray:
    """Haar-distributed orthogonal matrices via sign-corrected QR."""
    G = gaussian_vector(n, s, _batch_shape(size, n))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1)).copy()
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def lp_ball_point(n: int, p, s: RandomStream, size=None) -> np.ndarray:
    """Uniform points in B_p^n by the cone-measure construction."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _as_p(p)
    shape = _batch_shape(size, n)
    if math.isinf(p):
        g = 2.0 * s.uniform(shape) - 1.0
    elif p == 2:
        g = s.normal(shape)
    else:
        g = s.gamma(1.0 / p, shape) ** (1.0 / p) * s.signs(shape)
    theta = g / lp_norm(g, p)[..., None]
    u = s.uniform(_batch_shape(size, 1))
    return u ** (1.0 / n) * theta


def body_point(K: NormBody, s: RandomStream, size=None) -> np.ndarray:
    """Uniform points in K, pushed through K's scaling / linear-image chain."""
    if isinstance(K, LpBall):
        return lp_ball_point(K.n, K.p, s, size)
    if isinstance(K, Scaled):
        return K.r * body_point(K.inner, s, size)
    if isinstance(K, LinearImage):
        return body_point(K.inner, s, size) @ K.T.T
    raise TypeError(f"unsupported body {K!r}")


# ---------------------------------------------------------------------------
# chunked execution


def chunk_sizes(total: int, chunk: int = CHUNK) -> list[int]:
    if total < 0:
        raise ValueError("total must be non-negative")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunks(
    fn: Callable[[int, RandomStream], T],
    total: int,
    s: RandomStream,
    workers: int = 1,
    chunk: int = CHUNK,
) -> list[T]:
    """Apply ``fn(size, substream)`` to fixed-size chunks of ``total`` draws.

    Chunk i always receives substream i, and results come back in chunk order,
    so the output does not depend on ``workers``.
    """
    sizes = chunk_sizes(total, chunk)
    streams = s.split(len(sizes))
    if workers <= 1 or len(sizes) <= 1:
        return [fn(m, st) for m, st in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, sizes, streams))


def concat_chunks(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.empty(0)
