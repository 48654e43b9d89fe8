import copy
import math

import numpy as np
import pytest
from scipy import stats

from signedsums.geometry import LinearImage, LpBall, Scaled
from signedsums.randsrc import (
    RandomStream,
    body_point,
    chunk_sizes,
    concat_chunks,
    gaussian_vector,
    haar_orthogonal,
    lp_ball_point,
    run_chunks,
    sphere_point,
)

N = 100_000


def ks_distance(sample, cdf):
    x = np.sort(sample)
    n = len(x)
    F = cdf(x)
    return max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))


def test_streams_are_reproducible_and_distinct():
    a = RandomStream(5).normal(10)
    assert np.array_equal(a, RandomStream(5).normal(10))
    assert not np.array_equal(a, RandomStream(6).normal(10))
    assert not np.array_equal(a, RandomStream(5, stream_id=1).normal(10))


def test_split_substreams_differ_and_are_stable():
    s = RandomStream(1)
    kids = s.split(3)
    draws = [k.uniform(4) for k in kids]
    assert not np.array_equal(draws[0], draws[1])
    again = [k.uniform(4) for k in RandomStream(1).split(3)]
    assert all(np.array_equal(x, y) for x, y in zip(draws, again))


def test_stream_cannot_be_copied():
    with pytest.raises(TypeError):
        copy.copy(RandomStream(0))


def test_uniform_open_interval():
    u = RandomStream(2).uniform(N)
    assert u.min() > 0 and u.max() < 1
    assert ks_distance(u, lambda x: x) < 0.01


def test_signs_are_balanced():
    e = RandomStream(3).signs(N)
    assert set(np.unique(e)) == {-1, 1}
    assert abs(e.mean()) < 0.02


@pytest.mark.parametrize("shape", [0.3, 1.0, 2.5])
def test_gamma_matches_law(shape):
    g = RandomStream(4).gamma(shape, 50_000)
    assert ks_distance(g, stats.gamma(shape).cdf) < 0.012


def test_gaussian_vector_moments():
    x = gaussian_vector(2, RandomStream(8))
    assert x.shape == (2,) and np.all(np.isfinite(x))
    c = gaussian_vector(3, RandomStream(9), size=N)[:, 0]
    assert abs(c.mean()) <= 0.02
    assert 0.97 <= c.var() <= 1.03
    assert ks_distance(c, stats.norm.cdf) < 0.01


def test_sphere_point():
    s = RandomStream(10)
    th = sphere_point(5, s, size=1000)
    assert np.allclose(np.linalg.norm(th, axis=1), 1.0, atol=1e-12)
    assert set(np.unique(sphere_point(1, s, size=100))) <= {-1.0, 1.0}
    first = sphere_point(4, s, size=N)[:, 0]
    assert np.mean(first**2) == pytest.approx(0.25, abs=0.01)


def test_haar_orthogonal():
    s = RandomStream(11)
    assert abs(haar_orthogonal(1, s)[0, 0]) == 1.0
    U = haar_orthogonal(16, s, size=200)
    err = np.abs(np.einsum("bji,bjk->bik", U, U) - np.eye(16)).max()
    assert err < 1e-12
    assert np.allclose(np.abs(np.linalg.det(U)), 1.0, atol=1e-10)
    # U e_1 is uniform on the sphere: (x+1)/2 ~ Beta((n-1)/2, (n-1)/2) for a coordinate
    n = 5
    cols = haar_orthogonal(n, s, size=N)[:, 0, 0]
    beta = stats.beta((n - 1) / 2, (n - 1) / 2)
    assert ks_distance(cols, lambda x: beta.cdf((x + 1) / 2)) < 0.01


def test_haar_has_both_determinants():
    dets = np.linalg.det(haar_orthogonal(3, RandomStream(12), size=2000))
    frac = np.mean(dets > 0)
    assert 0.45 < frac < 0.55


@pytest.mark.parametrize("p", [1, 1.5, 2, 4, math.inf])
def test_lp_ball_point_containment_and_symmetry(p):
    x = lp_ball_point(6, p, RandomStream(13), size=N)
    assert np.all(LpBall(6, p).norm(x) <= 1 + 1e-12)
    assert np.all(np.abs(x.mean(axis=0)) <= 0.01)


@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_lp_ball_point_radial_law(p):
    n = 4
    r = LpBall(n, p).norm(lp_ball_point(n, p, RandomStream(14), size=N))
    assert ks_distance(r, lambda t: t**n) < 0.01


def test_lp_ball_point_cross_polytope_coordinate_law():
    # a coordinate of the uniform point in B_1^n has density n(1-|t|)^{n-1}/2
    n = 3
    c = lp_ball_point(n, 1, RandomStream(15), size=N)[:, 0]
    cdf = lambda t: np.where(t < 0, 0.5 * (1 + t) ** n, 1 - 0.5 * (1 - t) ** n)
    assert ks_distance(c, cdf) < 0.01


def test_lp_ball_point_rejects_bad_p():
    with pytest.raises(ValueError):
        lp_ball_point(3, 0.5, RandomStream(0))


def test_body_point_pushforward():
    s = RandomStream(16)
    a = body_point(LpBall(3, 2), RandomStream(17), size=10)
    b = lp_ball_point(3, 2, RandomStream(17), size=10)
    assert np.array_equal(a, b)
    assert np.all(np.abs(body_point(Scaled(2.0, LpBall(4, math.inf)), s, size=1000)) <= 2)
    x = body_point(LinearImage(np.diag([1.0, 3.0]), LpBall(2, 2)), s, size=N)
    cov = np.cov(x.T)
    assert cov[1, 1] / cov[0, 0] == pytest.approx(9.0, rel=0.05)
    assert abs(cov[0, 1]) < 0.02


def test_chunks_independent_of_workers():
    assert chunk_sizes(10, 4) == [4, 4, 2]

    def fn(size, st):
        return st.normal(size)

    ref = concat_chunks(run_chunks(fn, 70_000, RandomStream(3), workers=1))
    for w in (2, 4, 8):
        got = concat_chunks(run_chunks(fn, 70_000, RandomStream(3), workers=w))
        assert np.array_equal(ref, got)
