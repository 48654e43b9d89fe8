"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Expected values come from independent oracles (math.erf, scipy.stats closed
forms, brute arithmetic), never from the code under test.
"""
import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from signedsums import cli
from signedsums import gaussmeasure as gm
from signedsums import tdelta as td
from signedsums.experiments import (
    gluskin_milman_bound,
    verify_cor34,
    verify_gluskin_milman,
    verify_hajela,
    verify_lp_scaling,
    verify_thm15_ball,
    verify_thm16_body,
)
from signedsums.geometry import LpBall, lp_ball_volume
from signedsums.randsrc import RandomStream, haar_orthogonal
from signedsums.signsets import signset_random

INF = math.inf


def phi(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def three_sigma(p, n):
    return 3.0 * math.sqrt(p * (1.0 - p) / n)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_exact_vs_mc_gaussian_measure(record_criterion):
    checks, details = [], []
    for D, t, exact in [
        (LpBall(16, INF), 1.0, (2 * phi(1.0) - 1) ** 16),
        (LpBall(16, 2), 4.0, stats.chi2(16).cdf(16.0)),
    ]:
        with Clock() as c:
            est = gm.gamma_measure(D, t, gm.MONTE_CARLO, 1_000_000, RandomStream(101))
        dev = abs(est.value - exact)
        ok = dev <= three_sigma(exact, est.samples) and c.elapsed < 10
        ok = ok and gm.exact_gamma(D, t) == pytest.approx(exact, rel=1e-12)
        checks.append(ok)
        details.append(f"{D.spec()}: |mc-exact|={dev:.2e} <= {three_sigma(exact, est.samples):.2e} in {c.elapsed:.1f}s")
    record_criterion(1, all(checks), "; ".join(details))
    assert all(checks)


def test_criterion_02_sphere_smallball_lemma(record_criterion):
    n, delta = 40, 0.2
    threshold = 0.25 * math.sqrt(math.log(math.e / delta)) / math.sqrt(n)
    with Clock() as c:
        est = gm.sphere_smallball(LpBall(n, INF), threshold, 1_000_000, RandomStream(102))
        thr, _, target = gm.hajela_smallball_bound(n, delta)
        mc_ok = est.value + 3 * est.sigma < 2.0**-8 and thr == pytest.approx(threshold)
        grid_ok = True
        for m in (40, 80, 160):
            for d in np.linspace(1 / m, 0.25, 12)[1:-1]:
                analytic = 2 * math.exp(-(m / math.sqrt(2)) * (d / math.e) ** 0.25)
                _, a, tg = gm.hajela_smallball_bound(m, float(d))
                grid_ok &= a == pytest.approx(analytic) and analytic < 2.0 ** (-d * m) and a < tg
    ok = mc_ok and grid_ok and c.elapsed < 120
    record_criterion(2, ok, f"sigma-hat={est.value:.2e} (+3s {est.value + 3 * est.sigma:.2e}) vs 2^-8; "
                            f"analytic grid ok={grid_ok}; {c.elapsed:.1f}s")
    assert ok


def test_criterion_03_hajela_end_to_end(record_criterion):
    n, delta = 24, 1 / 3
    with Clock() as c:
        S = signset_random(n, 16, RandomStream(103), delta)
        v = verify_hajela(n, delta, S, 2000, RandomStream(104))
    ok = v.bound == pytest.approx(0.0625) and v.empirical <= 0.0625 + three_sigma(0.0625, 2000)
    ok = ok and v.passed and c.elapsed < 60
    record_criterion(3, ok, f"empirical={v.empirical:.4f} bound={v.bound} in {c.elapsed:.1f}s")
    assert ok


def test_criterion_04_tdelta_solver(record_criterion):
    with Clock() as c:
        worst = 0.0
        t_max = 0.0
        for n in (8, 16, 32, 64):
            for delta in (0.25, 0.5, 0.75):
                a = stats.norm.ppf((1 + 2.0**-delta / math.e) / 2)
                m = stats.norm.ppf((1 + 2.0 ** (-1.0 / n)) / 2)
                r = td.t_delta(LpBall(n, INF), delta, gm.EXACT)
                worst = max(worst, abs(r.t_value - a / (2 * m)))
                t_max = max(t_max, r.t_value)
                r2 = td.t_delta(LpBall(n, 2), delta, gm.EXACT)
                t_max = max(t_max, r2.t_value)
        bounds = [td.t_delta_bounds_check(LpBall(n, p), delta, gm.EXACT)
                  for p in (2, INF) for n in (8, 16, 32, 64) for delta in (0.25, 0.5, 0.75)]
        l1 = td.t_delta_bounds_check(LpBall(8, 1), 0.25, gm.MONTE_CARLO, 2_000_000, RandomStream(105))
    ok = worst < 1e-9 and t_max <= 0.5 and all(b.passed for b in bounds) and l1.passed
    ok = ok and l1.extra["tdelta"]["method"] == gm.MONTE_CARLO and c.elapsed < 60
    record_criterion(4, ok, f"max |bisect-closed form|={worst:.1e}, max t={t_max:.3f}, "
                            f"lower side ok for p=1,2,inf (p=1 MC t*m={l1.empirical:.4f} >= {l1.bound:.4f}); "
                            f"{c.elapsed:.1f}s")
    assert ok


def test_criterion_05_barvinok_and_polar(record_criterion):
    with Clock() as c:
        barv = [td.barvinok_ball_check(a, n) for a in (2, 5, 20) for n in (4, 16, 64)]
        s = RandomStream(106)
        cube = td.polar_identity_check(LpBall(8, INF), 1_000_000, s)
        ball = [td.polar_identity_check(LpBall(n, 2), 100_000, s) for n in (4, 8, 16)]
    target = 2.0**8 / lp_ball_volume(8, 2)
    rel = abs(cube.empirical / target - 1)
    ok = all(b.passed for b in barv) and cube.passed and rel < 0.05
    ok = ok and all(b.empirical == pytest.approx(1.0, abs=1e-12) for b in ball) and c.elapsed < 30
    record_criterion(5, ok, f"barvinok 9/9 ok={all(b.passed for b in barv)}; polar cube rel err={rel:.3%}; "
                            f"ball exactly 1; {c.elapsed:.1f}s")
    assert ok


def test_criterion_06_gluskin_milman(record_criterion):
    D = LpBall(4, 2)
    with Clock() as c:
        verdicts = [verify_gluskin_milman([D] * 4, D, [0.5] * 4, t, 100_000, RandomStream(107))
                    for t in (0.4, 0.6)]
    ok = True
    for t, v in zip((0.4, 0.6), verdicts):
        b = (t * math.exp((1 - t * t) / 2)) ** 4
        ok &= v.bound == pytest.approx(b) and v.empirical <= b + three_sigma(b, 100_000)
    analytic = all(t**n <= gluskin_milman_bound(n, t)
                   for n in range(1, 17) for t in np.linspace(0.01, 0.99, 50))
    ok = ok and analytic and c.elapsed < 30
    record_criterion(6, ok, "; ".join(f"t={v.params['t']}: {v.empirical:.4f} <= {v.bound:.4f}" for v in verdicts)
                     + f"; m=1 analytic ok={analytic}; {c.elapsed:.1f}s")
    assert ok


def test_criterion_07_cor34(record_criterion):
    with Clock() as c:
        one = verify_cor34(LpBall(1, 2), LpBall(1, 2), 100_000, RandomStream(108))
        twelve = verify_cor34(LpBall(12, 2), LpBall(12, 2), 10_000, RandomStream(109))
    ok = abs(one.empirical - 0.1) <= three_sigma(0.1, 100_000) and one.empirical <= math.exp(-1)
    ok = ok and one.passed and twelve.zero_failure and twelve.failures == 0 and twelve.passed
    ok = ok and c.elapsed < 180
    record_criterion(7, ok, f"n=1 empirical={one.empirical:.4f} (bound {one.bound:.4f}); "
                            f"n=12 failures={twelve.failures}/10^4; {c.elapsed:.1f}s")
    assert ok


def test_criterion_08_random_point_theorems(record_criterion):
    n, delta = 12, 0.5
    D = LpBall(n, INF)
    S = signset_random(n, 4, RandomStream(110), delta)
    with Clock() as c:
        m = gm.exact_median(D)
        t_meas = gm.exact_quantile(D, 1e-2 / (2 * len(S))) / (20 * m)
        meas = verify_thm15_ball(D, delta, S, t_meas, 10_000, RandomStream(111))
        default_t = verify_thm15_ball(D, delta, S, None, 10_000, RandomStream(112))
        # rotation reduction: K = B_2^n against the ball theorem on a shared seed
        t_shared = 0.5
        a = verify_thm15_ball(D, delta, S, t_shared, 20_000, RandomStream(113))
        b = verify_thm16_body(LpBall(n, 2), D, delta, S, t_shared, 200, 100, RandomStream(113),
                              check_precondition=False)
        # thm16 in its own regime: precondition holds, zero flags expected
        t16 = 0.999 * gm.exact_quantile(D, math.exp(-n) / len(S)) / (20 * m)
        own = verify_thm16_body(LpBall(n, 2), D, delta, S, t16, 200, 500, RandomStream(114))
    pooled = b.extra["pooled_inner_rate"]
    p = 0.5 * (a.empirical + pooled)
    sigma = math.sqrt(p * (1 - p) * (1 / 20_000 + 1 / 20_000))
    ok = meas.passed and meas.empirical <= meas.bound + three_sigma(meas.bound, 10_000)
    ok = ok and default_t.failures == 0 and default_t.zero_failure and default_t.passed
    ok = ok and abs(a.empirical - pooled) <= 3 * sigma and own.passed and own.failures == 0
    ok = ok and c.elapsed < 300
    record_criterion(8, ok, f"measurable: {meas.empirical:.4f} <= {meas.bound:.4f}; "
                            f"t=t_delta/10: {default_t.failures} failures/10^4; "
                            f"thm16(K=B2) {pooled:.4f} vs thm15 {a.empirical:.4f} (3s={3 * sigma:.4f}); "
                            f"{c.elapsed:.1f}s")
    assert ok


def test_criterion_09_lp_scaling_trend(record_criterion):
    with Clock() as c:
        rep = verify_lp_scaling(4.0, [16, 32, 64], 256, 200, RandomStream(115))
    ok = rep.passed and all(r > 0.8 for r in rep.doubling_ratios) and c.elapsed < 180
    record_criterion(9, ok, f"q05={['%.3f' % q for q in rep.q05]}, per-doubling ratios="
                            f"{['%.3f' % r for r in rep.doubling_ratios]}; {c.elapsed:.1f}s")
    assert ok


def test_criterion_10_infrastructure(record_criterion, tmp_path, capsys):
    with Clock() as c:
        U = haar_orthogonal(16, RandomStream(116), size=1000)
        orth = np.abs(np.einsum("bji,bjk->bik", U, U) - np.eye(16)).max()
        det = np.abs(np.abs(np.linalg.det(U)) - 1).max()

        def runs(k):
            s = RandomStream(117)
            S = signset_random(12, 8, RandomStream(118), 0.5)
            return (
                gm.gamma_measure(LpBall(10, 1), 4.0, gm.MONTE_CARLO, 150_000, s.split(1)[0], k).as_dict(),
                gm.gauss_stats(LpBall(10, 3), 50_000, RandomStream(119), k).as_dict(),
                td.t_delta(LpBall(4, 1), 0.25, gm.MONTE_CARLO, 300_000, RandomStream(120), k).as_dict(),
                verify_hajela(12, 0.5, S, 1000, RandomStream(121), workers=k).as_dict(),
            )

        ref = runs(1)
        same = all(runs(k) == ref for k in (2, 4, 8))

        cfg = tmp_path / "r.json"
        cfg.write_text(json.dumps({"experiments": [
            ["gamma", "--body", "lp:1", "--n", "6", "--t", "2", "--samples", "100000"],
            ["verify", "cor34", "--n", "6", "--trials", "500"],
            ["tdelta", "--body", "lp:1", "--n", "4", "--delta", "0.25", "--samples", "300000"],
        ]}))
        cli.main(["report", "--out", str(tmp_path / "out"), "--config", str(cfg), "--seed", "11"])
        capsys.readouterr()
        mismatched = cli.replay_manifest(tmp_path / "out" / "manifest.json")
    ok = orth < 1e-12 and det < 1e-10 and same and mismatched == [] and c.elapsed < 120
    record_criterion(10, ok, f"max|UtU-I|={orth:.1e}, max||det|-1|={det:.1e}, workers 1/2/4/8 identical={same}, "
                             f"replay mismatches={len(mismatched)}; {c.elapsed:.1f}s")
    assert ok
