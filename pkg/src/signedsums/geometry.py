"""Symmetric convex bodies as norm oracles, sign vectors and signed sums.

Bodies are expression trees over unit l_p balls: ``LpBall``, ``Scaled`` and
``LinearImage``.  Every body reachable this way has an exact volume and an
O(n) uniform sampler (see :mod:`signedsums.randsrc`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

MAX_EXHAUSTIVE_N = 24

# Orthogonality tolerance used when deciding if a linear map is a rotation.
_ORTHO_TOL = 1e-10


class DimensionError(ValueError):
    pass


def _as_p(p) -> float:
    if isinstance(p, str):
        p = math.inf if p.strip().lower() in ("inf", "infinity", "oo") else float(p)
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return p


@dataclass(frozen=True)
class LpBall:
    """Unit ball of l_p^n."""

    n: int
    p: float = 2.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "p", _as_p(self.p))

    @property
    def dim(self) -> int:
        return self.n

    def norm(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"expected last axis {self.n}, got {x.shape[-1]}")
        return lp_norm(x, self.p)

    def volume(self) -> float:
        return lp_ball_volume(self.n, self.p)

    def spec(self) -> str:
        return "lp:inf" if math.isinf(self.p) else f"lp:{self.p:g}"


@dataclass(frozen=True)
class Scaled:
    """The dilate ``r * inner``."""

    r: float
    inner: "NormBody"

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"scale must be positive and finite, got {self.r}")

    @property
    def dim(self) -> int:
        return self.inner.dim

    def norm(self, x):
        return self.inner.norm(x) / self.r

    def volume(self) -> float:
        return self.r**self.dim * self.inner.volume()

    def spec(self) -> str:
        return f"scale:{self.r!r}:{self.inner.spec()}"


@dataclass(frozen=True, eq=False)
class LinearImage:
    """The image ``T(inner)`` for an invertible matrix ``T``.

    ``label`` is the matrix file name when the body came from a spec string.
    """

    T: np.ndarray
    inner: "NormBody"
    label: str | None = None
    _T_inv: np.ndarray = field(init=False, repr=False)
    _abs_det: float = field(init=False, repr=False)

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        n = self.inner.dim
        if T.shape != (n, n):
            raise DimensionError(f"matrix must be {n}x{n}, got {T.shape}")
        sign, logdet = np.linalg.slogdet(T)
        if sign == 0 or not np.isfinite(logdet) or np.linalg.cond(T) > 1e12:
            raise ValueError("linear image requires an invertible matrix")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "_T_inv", np.linalg.inv(T))
        object.__setattr__(self, "_abs_det", float(np.exp(logdet)))

    @property
    def dim(self) -> int:
        return self.inner.dim

    def norm(self, x):
        x = np.asarray(x, dtype=float)
        return self.inner.norm(x @ self._T_inv.T)

    def volume(self) -> float:
        return self._abs_det * self.inner.volume()

    def spec(self) -> str:
        name = self.label or "<matrix>"
        return f"lin:{name}:{self.inner.spec()}"


NormBody = Union[LpBall, Scaled, LinearImage]


def lp_norm(x, p: float):
    x = np.asarray(x, dtype=float)
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", x, x))
    if p == 1:
        return np.abs(x).sum(axis=-1)
    if math.isinf(p):
        return np.abs(x).max(axis=-1)
    a = np.abs(x)
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return np.squeeze(safe, -1) * ((a / safe) ** p).sum(axis=-1) ** (1.0 / p)


def minkowski_norm(D: NormBody, x) -> float:
    """Gauge of ``x`` with respect to ``D``; vectorised over leading axes."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != D.dim:
        raise DimensionError(f"body has dimension {D.dim}, vector has {x.shape[-1]}")
    out = D.norm(x)
    return float(out) if np.ndim(out) == 0 else out


def lp_ball_volume(n: int, p) -> float:
    """Volume of B_p^n, ``(2 Gamma(1 + 1/p))^n / Gamma(1 + n/p)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _as_p(p)
    return math.exp(log_lp_ball_volume(n, p))


def log_lp_ball_volume(n: int, p) -> float:
    p = _as_p(p)
    if math.isinf(p):
        return n * math.log(2.0)
    return n * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + n / p)


def volume(D: NormBody) -> float:
    return D.volume()


def log_volume(D: NormBody) -> float:
    """Log-volume, safe for bodies whose volume under/overflows."""
    if isinstance(D, LpBall):
        return log_lp_ball_volume(D.n, D.p)
    if isinstance(D, Scaled):
        return D.dim * math.log(D.r) + log_volume(D.inner)
    return math.log(D._abs_det) + log_volume(D.inner)


def vrad(D: NormBody) -> float:
    """Volume radius ``(|D| / |B_2^n|)^(1/n)``."""
    n = D.dim
    return math.exp((log_volume(D) - log_lp_ball_volume(n, 2)) / n)


def base_ball(D: NormBody) -> LpBall:
    while not isinstance(D, LpBall):
        D = D.inner
    return D


def rotation_scale(D: NormBody) -> tuple[float, float] | None:
    """Return ``(p, r)`` if D = r * U(B_p^n) for an orthogonal U, else None.

    Linear maps count when ``T^T T = c^2 I``; ``c`` is folded into ``r``.
    """
    r = 1.0
    node = D
    while not isinstance(node, LpBall):
        if isinstance(node, Scaled):
            r *= node.r
        else:
            T = node.T
            gram = T.T @ T
            c2 = gram[0, 0]
            if np.max(np.abs(gram - c2 * np.eye(len(T)))) > _ORTHO_TOL * max(c2, 1.0):
                return None
            r *= math.sqrt(c2)
        node = node.inner
    return node.p, r


# ---------------------------------------------------------------------------
# sign vectors


@dataclass(frozen=True, eq=False)
class SignVector:
    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("sign vector must be a non-empty 1-d sequence")
        if not np.all((s == 1) | (s == -1)):
            raise ValueError("sign vector entries must be exactly -1 or +1")
        s = s.astype(np.int8)
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    def __len__(self) -> int:
        return len(self.signs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SignVector) and np.array_equal(self.signs, other.signs)

    def __hash__(self) -> int:
        return hash(self.signs.tobytes())

    def __neg__(self) -> "SignVector":
        return SignVector(-self.signs)

    def tolist(self) -> list[int]:
        return [int(v) for v in self.signs]


def _as_vectors(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2:
        raise DimensionError("expected a sequence of equal-length vectors")
    if not np.all(np.isfinite(xs)):
        raise ValueError("vectors must have finite entries")
    return xs


def signed_sum(xs, eps) -> np.ndarray:
    """Sum of ``eps[i] * xs[i]``."""
    xs = _as_vectors(xs)
    s = eps.signs if isinstance(eps, SignVector) else np.asarray(eps)
    if len(s) != len(xs):
        raise DimensionError(f"{len(xs)} vectors but {len(s)} signs")
    return s.astype(float) @ xs


# ---------------------------------------------------------------------------
# exhaustive minimisation over signs


def _gray_table(vs: np.ndarray):
    """All signed sums of ``vs[..., j, :]`` in reflected Gray order.

    Row 0 takes every sign +1; each later row is an earlier one minus or plus
    ``2 v_j`` for a single j.  Returns ``(sums, signs)`` with shapes
    ``(..., 2^k, d)`` and ``(2^k, k)``.
    """
    k = vs.shape[-2]
    sums = vs.sum(axis=-2)[..., None, :]
    signs = np.ones((1, k), dtype=np.int8)
    for j in range(k):
        flipped = sums[..., ::-1, :] - 2.0 * vs[..., j : j + 1, :]
        sums = np.concatenate([sums, flipped], axis=-2)
        fs = signs[::-1].copy()
        fs[:, j] = -1
        signs = np.concatenate([signs, fs], axis=0)
    return sums, signs


def _inner_bits(batch: int, free: int, d: int, budget: int = 1 << 22) -> int:
    b = free
    while b > 0 and batch * (1 << b) * d > budget:
        b -= 1
    return b


def min_sign_norm_batch(xs, D: NormBody, max_n: int = MAX_EXHAUSTIVE_N):
    """Exhaustive ``min_eps ||sum eps_i x_i||_D`` for a batch of tuples.

    ``xs`` has shape ``(B, n, d)``.  Only sign classes with ``eps_1 = +1`` are
    visited (``eps`` and ``-eps`` give the same norm).  The low bits are laid
    out as a Gray-ordered table, the high bits are walked in Gray order with a
    single ``+-2 x_i`` update of the running sum per step.

    Returns ``(values, argmin_signs)`` of shapes ``(B,)`` and ``(B, n)``.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 3:
        raise DimensionError("expected shape (batch, n, d)")
    B, n, d = xs.shape
    if n > max_n:
        raise ValueError(f"exhaustive search limited to n <= {max_n}, got n = {n}")
    if d != D.dim:
        raise DimensionError(f"body has dimension {D.dim}, vectors have {d}")
    free = n - 1
    b = _inner_bits(B, free, d)
    n_outer = free - b
    inner_idx = np.arange(1, 1 + b)
    outer_idx = np.arange(1 + b, n)

    table, table_signs = _gray_table(xs[:, inner_idx, :]) if b else (
        np.zeros((B, 1, d)),
        np.zeros((1, 0), dtype=np.int8),
    )
    current = xs[:, 0, :] + xs[:, outer_idx, :].sum(axis=1)
    outer_signs = np.ones(n_outer, dtype=np.int8)

    best = np.full(B, np.inf)
    best_inner = np.zeros(B, dtype=np.int64)
    best_outer = np.ones((B, n_outer), dtype=np.int8)
    rows = np.arange(B)
    steps = 1 << n_outer
    for step in range(steps):
        vals = D.norm(current[:, None, :] + table)
        k = vals.argmin(axis=1)
        v = vals[rows, k]
        better = v < best
        if better.any():
            best[better] = v[better]
            best_inner[better] = k[better]
            best_outer[better] = outer_signs
        if step + 1 < steps:
            j = ((step + 1) & -(step + 1)).bit_length() - 1
            current = current - 2.0 * outer_signs[j] * xs[:, outer_idx[j], :]
            outer_signs[j] = -outer_signs[j]

    argmin = np.ones((B, n), dtype=np.int8)
    argmin[:, inner_idx] = table_signs[best_inner]
    argmin[:, outer_idx] = best_outer
    return best, argmin


def min_sign_norm(xs, D: NormBody, max_n: int = MAX_EXHAUSTIVE_N):
    """Exact minimum of ``||sum eps_i x_i||_D`` over all sign vectors.

    The returned argmin has ``eps_1 = +1``.
    """
    xs = _as_vectors(xs)
    vals, signs = min_sign_norm_batch(xs[None], D, max_n=max_n)
    return float(vals[0]), SignVector(signs[0])


# ---------------------------------------------------------------------------
# body spec mini-language: lp:<p> | scale:<r>:<body> | lin:<matrix-file>:<body>


def load_matrix(path) -> np.ndarray:
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    M = np.array([[float(v) for v in row] for row in rows])
    if M.ndim != 2:
        raise ValueError(f"ragged matrix in {path}")
    return M


def parse_body(spec: str, n: int, base_dir=None) -> NormBody:
    """Parse a body spec string for dimension ``n``.

    >>> parse_body("scale:2:lp:inf", 3).volume()
    64.0
    """
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    if head == "lp":
        if not rest:
            raise ValueError("lp body needs an exponent, e.g. lp:2")
        return LpBall(n, _as_p(rest))
    if head == "scale":
        r, sep, inner = rest.partition(":")
        if not sep:
            raise ValueError(f"malformed scale body: {spec!r}")
        return Scaled(float(r), parse_body(inner, n, base_dir))
    if head == "lin":
        fname, sep, inner = rest.partition(":")
        if not sep:
            raise ValueError(f"malformed linear body: {spec!r}")
        path = Path(fname)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return LinearImage(load_matrix(path), parse_body(inner, n, base_dir), label=fname)
    raise ValueError(f"unknown body kind {head!r} in {spec!r}")


def load_vectors(path) -> np.ndarray:
    """Read ``n m`` followed by m whitespace-separated n-vectors."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError("vectors file needs a header line 'n m'")
    n, m = int(tokens[0]), int(tokens[1])
    vals = [float(t) for t in tokens[2:]]
    if len(vals) != n * m:
        raise ValueError(f"expected {n * m} numbers after the header, got {len(vals)}")
    return np.array(vals).reshape(m, n)


def is_orthonormal(xs: Sequence, tol: float = 1e-10) -> bool:
    xs = np.asarray(xs, dtype=float)
    return bool(np.max(np.abs(xs @ xs.T - np.eye(len(xs)))) <= tol)
