import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signedsums.randsrc import RandomStream
from signedsums.signsets import (
    SignSet,
    budget,
    natural_delta,
    parse_signset,
    signset_all,
    signset_hamming_ball,
    signset_random,
)
from signedsums.verdict import (
    DEFAULT_CONSTANTS,
    TheoremVerdict,
    binomial_sigma,
    failure_verdict,
    resolution_floor,
)


def test_budget_examples():
    assert budget(4, 0.5) == 4
    assert budget(20, 0.4) == 256
    assert budget(10, 0.9999999) <= 2**10
    assert budget(10, 1.0) == 2**10
    assert budget(3, 0.0) == 1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 60), delta=st.floats(0.0, 1.0))
def test_budget_matches_floor(n, delta):
    b = budget(n, delta)
    assert 1 <= b <= 2**n
    exact = 2.0 ** (delta * n)
    assert b <= exact * (1 + 1e-9)
    assert b + 1 > exact * (1 - 1e-9)


def test_random_signsets():
    s = RandomStream(1)
    one = signset_random(5, 1, s)
    assert len(one.members) == 1
    cube = signset_random(3, 8, s)
    assert {tuple(r) for r in cube.members} == {tuple(r) for r in signset_all(3).members}
    big = signset_random(20, 256, s)
    assert len({tuple(r) for r in big.members}) == 256
    assert big.delta == pytest.approx(0.4)
    with pytest.raises(ValueError):
        signset_random(3, 9, s)


def test_signset_validation():
    with pytest.raises(ValueError):
        SignSet(np.array([[1, 0, 1]]), 3, 0.5)
    with pytest.raises(ValueError):
        SignSet(np.array([[1, 1], [1, 1]]), 2, 1.0)
    with pytest.raises(ValueError):
        SignSet(np.array([[1, 1], [1, -1]]), 2, 0.25)  # |S| = 2 > floor(2^0.5)


def test_negated_set():
    S = signset_random(6, 5, RandomStream(2))
    assert np.array_equal(S.negated().members, -S.members)


def test_hamming_balls():
    c = np.ones(5, dtype=np.int8)
    assert signset_hamming_ball(5, c, 0).members.tolist() == [c.tolist()]
    assert len(signset_hamming_ball(5, c, 1).members) == 6
    assert len(signset_hamming_ball(5, c, 5).members) == 32
    ball = signset_hamming_ball(8, np.ones(8), 2)
    dist = np.sum(ball.members != 1, axis=1)
    assert len(ball.members) == 1 + 8 + 28 and dist.max() == 2


def test_signset_all_size():
    S = signset_all(10)
    assert S.members.shape == (1024, 10)
    assert len(np.unique(S.members, axis=0)) == 1024


def test_natural_delta():
    assert natural_delta(20, 256) == pytest.approx(0.4)
    assert natural_delta(7, 1) == 0.0


def test_parse_signset():
    s = RandomStream(3)
    assert len(parse_signset("random:4", 12, s).members) == 4
    assert len(parse_signset("hamming:1", 6, s).members) == 7
    assert len(parse_signset("all", 4, s).members) == 16
    with pytest.raises(ValueError):
        parse_signset("nonsense", 4, s)


# ---------------------------------------------------------------- verdict arithmetic


def test_binomial_sigma_and_floor():
    assert binomial_sigma(0.25, 100) == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    assert binomial_sigma(0.0, 100) == 0.0
    assert resolution_floor(1000) == pytest.approx(0.01)


def test_failure_verdict_slack_rule():
    v = failure_verdict("x", bound=0.1, failures=110, trials=1000, threshold=1.0)
    assert v.passed and not v.zero_failure
    assert v.empirical == pytest.approx(0.11)
    v = failure_verdict("x", bound=0.1, failures=200, trials=1000, threshold=1.0)
    assert not v.passed


def test_zero_failure_contract():
    v = failure_verdict("x", bound=1e-6, failures=0, trials=1000, threshold=1.0)
    assert v.passed and v.zero_failure
    assert "below resolution" in v.notes
    v = failure_verdict("x", bound=1e-6, failures=1, trials=1000, threshold=1.0)
    assert not v.passed
    # the contract applies whenever the bound sits under 10/trials
    assert not failure_verdict("x", bound=0.5, failures=1, trials=10, threshold=1.0).passed


def test_verdict_dict_shape():
    v = failure_verdict("x", bound=0.5, failures=1, trials=100, threshold=0.2)
    d = v.as_dict()
    assert d["pass"] is True and "passed" not in d
    assert isinstance(v, TheoremVerdict)
    assert DEFAULT_CONSTANTS.as_dict() == {
        "c_hajela": 0.25, "c_gm_threshold": 0.1, "c_dilate": 20.0, "c_banaszczyk": 0.1}
