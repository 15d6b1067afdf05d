import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gauge_cgm import oracle
from gauge_cgm.atoms import CoeffMap, SignedBasis, TotalVariation
from gauge_cgm.losses import QuadraticLoss
from gauge_cgm.screening import (ScreenSet, delta_slacks, epsilon_schedule,
                                 f1_score, linearization_error, screen,
                                 screen_mask, threshold)
from gauge_cgm.solver import SolverConfig, run
from gauge_cgm.transforms import GammaPenalty, PhiPenalty


def test_screen_at_scalar_optimum():
    # f = (x-2)^2/2, x* = 1: grad f = -1, z = 1
    removed = screen(np.array([1.0]), SignedBasis(1), res=0.0, L=1.0, eps=0.0)
    assert removed == {1}
    per, dmin = delta_slacks(np.array([1.0]), SignedBasis(1), {0})
    assert per == {0: 0.0, 1: 2.0} and dmin == 2.0


def test_screen_large_residual_keeps_everything():
    z = np.array([3.0, 1.0, 0.0])
    assert screen(z, SignedBasis(3), res=100.0, L=1.0) == set()


def test_screen_zero_gradient_keeps_everything():
    assert screen(np.zeros(4), SignedBasis(4), res=0.0, L=1.0) == set()


def test_delta_slacks_example():
    z = -np.array([-3.0, -1.0, 0.0])   # grad f = (-3, -1, 0)
    per, dmin = delta_slacks(z, SignedBasis(3), {0})
    assert per == {0: 0.0, 1: 6.0, 2: 2.0, 3: 4.0, 4: 3.0, 5: 3.0}
    assert dmin == 2.0
    per, dmin = delta_slacks(np.zeros(3), SignedBasis(3), {0})
    assert set(per.values()) == {0.0} and dmin == 0.0
    _, dmin = delta_slacks(z, SignedBasis(3), set(range(6)))
    assert dmin == math.inf


def test_reweighted_slacks():
    w = np.array([0.5, 1.0, 1.0, 1.0])
    per, dmin = delta_slacks(np.array([1.0, 1.5]), SignedBasis(2), {0}, weights=w)
    # scores / w = (2, -1, 1.5, -1.5); symmetric support 2
    assert per == {0: 0.0, 1: 3.0, 2: 0.5, 3: 3.5}
    assert dmin == 0.5


def test_epsilon_schedule():
    assert epsilon_schedule(7, 0.0) == 0.0
    assert epsilon_schedule(10, 1.0) == 0.1
    vals = [epsilon_schedule(t, 2.0) for t in range(1, 1000)]
    assert all(a >= b for a, b in zip(vals, vals[1:])) and vals[-1] < 3e-3
    with pytest.raises(ValueError):
        epsilon_schedule(0, 1.0)


def test_f1():
    assert f1_score({1, 2}, {2, 3}) == 0.5
    assert f1_score({4, 5}, {4, 5}) == 1.0
    assert f1_score({1}, {2}) == 0.0
    assert f1_score(set(), set()) == 1.0
    assert f1_score(set(), {1}) == 0.0


def test_linearization_error():
    lsp = GammaPenalty("LSP", theta=1.0, xi_bar=1e6)
    assert linearization_error(0, CoeffMap(), 1, CoeffMap({0: 1.0}), lsp) == \
        pytest.approx(1 - math.log(2), abs=1e-15)
    c = CoeffMap({0: 0.7, 3: 2.0})
    assert linearization_error(None, c, None, c, lsp) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = CoeffMap({int(k): float(v) for k, v in zip(rng.choice(6, 3, replace=False), rng.uniform(0, 3, 3))})
        b = CoeffMap({int(k): float(v) for k, v in zip(rng.choice(6, 3, replace=False), rng.uniform(0, 3, 3))})
        assert linearization_error(None, a, None, b, GammaPenalty()) == pytest.approx(0.0, abs=1e-12)
        assert linearization_error(None, a, None, b, lsp) >= -1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 1), st.floats(0, 1),
       st.integers(0, 2 ** 31))
def test_threshold_monotone(r1, r2, e1, e2, seed):
    z = np.random.default_rng(seed).standard_normal(6)
    lo_r, hi_r = sorted((r1, r2))
    lo_e, hi_e = sorted((e1, e2))
    s = SignedBasis(6)
    assert len(screen(z, s, hi_r, 2.0, lo_e)) <= len(screen(z, s, lo_r, 2.0, lo_e))
    assert len(screen(z, s, lo_r, 2.0, hi_e)) <= len(screen(z, s, lo_r, 2.0, lo_e))
    assert threshold(hi_r, 2.0, hi_e) >= threshold(lo_r, 2.0, lo_e)


def test_screen_set_intersection_vs_latest():
    conv = ScreenSet(4, intersect=True)
    heur = ScreenSet(4, intersect=False)
    for t, removed in enumerate(([0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0]), 1):
        mask = np.array(removed, dtype=bool)
        conv.update(mask, t)
        heur.update(mask, t)
    assert conv.cumulative == {0, 3} and conv.last_change == 2
    assert heur.cumulative == {0, 1, 2, 3} and heur.last_change == 3
    assert heur.survivors == {0, 1, 2, 3}


def test_tv_screening_uses_centered_steps():
    z = np.array([1.0, -3.0, 2.0])
    removed, thr, delta = screen_mask(z, TotalVariation(3), 0.0, 1.0, 0.0)
    # dual coordinates (1, -2): atom 3 (-b_2) attains 2
    np.testing.assert_allclose(delta, [1.0, 3.0, 4.0, 0.0], atol=1e-12)
    assert thr == 0.0 and removed.tolist() == [True, True, True, False]


def test_safe_screening_never_drops_the_limit_support():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((30, 15)) / math.sqrt(15)
    x0 = np.zeros(15)
    x0[[1, 6, 11]] = [1.5, -2.0, 1.0]
    loss = QuadraticLoss(A, A @ x0, 0.5)
    cfg = SolverConfig(SignedBasis(15), phi=PhiPenalty(scale=0.5), max_iter=5000,
                       screening="safe", record_history=False)
    masks = []
    res = run(cfg, loss, callback=lambda t, s, r, scr: masks.append(scr.survivors_mask.copy()))
    ref = oracle.reference_solve(loss, cfg.phi, cfg.gauge)
    assert ref.delta_min > 1e-3
    assert all(m[sorted(ref.support)].all() for m in masks)
    assert res.screen.cumulative == ref.support
    assert res.screen.last_change < 5000
