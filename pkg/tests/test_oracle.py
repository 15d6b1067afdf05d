import math

import numpy as np
import pytest

from gauge_cgm import oracle
from gauge_cgm.atoms import LatentGroup, MappedBasis, SignedBasis, TotalVariation
from gauge_cgm.losses import QuadraticLoss
from gauge_cgm.solver import SolverConfig, run
from gauge_cgm.transforms import GammaPenalty, PhiPenalty

TWO_ATOM_SET = np.array([[1.0, 0.0, 3.0], [1.0, 3.0, 0.0]])


def test_reference_scalar():
    loss = QuadraticLoss(np.array([[1.0]]), np.array([2.0]), 0.5)
    ref = oracle.reference_solve(loss, PhiPenalty(), SignedBasis(1), tol=1e-12)
    assert ref.x_star[0] == pytest.approx(1.0, abs=1e-6)
    assert ref.objective == pytest.approx(1.0, abs=1e-10)
    assert ref.residual_at_solution <= 1e-12
    assert ref.support == {0}


def test_reference_zero_data():
    loss = QuadraticLoss(np.eye(3), np.zeros(3), 0.5)
    ref = oracle.reference_solve(loss, PhiPenalty(), SignedBasis(3))
    assert not ref.x_star.any() and ref.objective == 0.0 and ref.support == set()


def test_reference_rejects_unsupported():
    loss = QuadraticLoss(np.eye(2), np.ones(2))
    with pytest.raises(NotImplementedError):
        oracle.reference_solve(loss, PhiPenalty(alpha=3.0), SignedBasis(2))
    with pytest.raises(NotImplementedError):
        oracle.reference_solve(loss, PhiPenalty(), LatentGroup(2, [[0, 1]]))


def test_reference_iteration_cap():
    rng = np.random.default_rng(0)
    loss = QuadraticLoss(rng.standard_normal((20, 10)), rng.standard_normal(20))
    with pytest.raises(oracle.MaxIterExceeded):
        oracle.reference_solve(loss, PhiPenalty(), SignedBasis(10), tol=1e-14, max_iter=20)


def _cvx_reference(loss, lam, B, N=None):
    cp = pytest.importorskip("cvxpy")
    u = cp.Variable(B.shape[1])
    expr = B @ u
    if N is not None:
        m = cp.Variable(N.shape[1])
        expr = expr + N @ m
    obj = loss.scale * cp.sum_squares(loss.A @ expr - loss.b) + 0.5 * lam * cp.square(cp.norm1(u))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL)
    return prob.value


@pytest.mark.parametrize("kind", ["SignedBasis", "MappedBasis", "TotalVariation"])
def test_reference_matches_conic_solver(kind):
    rng = np.random.default_rng(1)
    d = 8
    A = rng.standard_normal((12, d))
    loss = QuadraticLoss(A, rng.standard_normal(12), 0.5)
    if kind == "SignedBasis":
        gauge, B, N = SignedBasis(d), np.eye(d), None
    elif kind == "MappedBasis":
        P = rng.standard_normal((d, d)) + 3 * np.eye(d)
        gauge, B, N = MappedBasis(P), P, None
    else:
        gauge = TotalVariation(d)
        B, N = gauge.steps(), np.ones((d, 1))
    phi = PhiPenalty(scale=0.7)
    ref = oracle.reference_solve(loss, phi, gauge)
    assert ref.residual_at_solution <= 1e-10
    assert ref.objective == pytest.approx(_cvx_reference(loss, 0.7, B, N), abs=1e-6)


def test_reference_agrees_with_conditional_gradient():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((15, 6))
    loss = QuadraticLoss(A, rng.standard_normal(15), 0.5)
    ref = oracle.reference_solve(loss, PhiPenalty(), SignedBasis(6))
    res = run(SolverConfig(SignedBasis(6), max_iter=20_000, record_history=False), loss)
    np.testing.assert_allclose(res.state.x, ref.x_star, atol=1e-3)


def test_constrained_lp_example():
    x, val = oracle.constrained_lp(np.array([-4.0, -3.0, -4.0]))
    np.testing.assert_allclose(x, [0.5, 0.0, 0.5], atol=1e-8)
    assert val == pytest.approx(-4.0, abs=1e-12)


def test_brute_force_gauge_examples():
    assert oracle.brute_force_gauge(TWO_ATOM_SET, np.array([6.0, 6.0])) == pytest.approx(4.0)
    assert oracle.brute_force_gauge(SignedBasis(2), np.array([-1.0, 2.0])) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        oracle.brute_force_gauge(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([-1.0, 1.0]))
    # the recession line is free
    assert oracle.brute_force_gauge(TotalVariation(3), np.array([5.0, 5.0, 6.0])) == pytest.approx(1.0)


def test_brute_force_r_with_square_root():
    val, c = oracle.brute_force_r(TWO_ATOM_SET, np.array([6.0, 6.0]), np.sqrt)
    # sqrt is steep at 0, so the grid minimum sits slightly off the vertex
    assert val == pytest.approx(math.sqrt(6), abs=1e-7)
    np.testing.assert_allclose(c, [6.0, 0.0, 0.0], atol=1e-4)
    # the l1-optimal split of (6, 6) costs more under sqrt
    assert oracle.brute_force_gauge(TWO_ATOM_SET, np.array([6.0, 6.0])) > val


def test_brute_force_lmo_tie_break():
    bid, val = oracle.brute_force_lmo(SignedBasis(3), np.array([1.0, -1.0, 1.0]))
    assert (bid, val) == (0, 1.0)
    bid, val = oracle.brute_force_lmo(SignedBasis(2), np.array([1.0, 3.0]),
                                      weights=np.array([1.0, 1.0, 3.0, 3.0]))
    assert (bid, val) == (0, 1.0)


def test_biconjugate_of_convex_function_is_itself():
    xs, h, hb = oracle.grid_biconjugate(lambda x: 0.5 * x * x + abs(x))
    assert np.max(np.abs(h - hb)) <= 1e-3
    xs, h, hb = oracle.grid_biconjugate(lambda x: 0.0)
    assert np.max(np.abs(hb)) <= 1e-12


def test_biconjugate_convexifies():
    xs, h, hb = oracle.grid_biconjugate(lambda x: math.sqrt(abs(x)))
    assert np.all(hb <= h + 1e-9)
    # sqrt|x| on [-10, 10] convexifies to the chord |x| sqrt(10) / 10; slopes
    # are gridded at spacing 0.01, which bounds the error by 0.01 * 10 / 2
    np.testing.assert_allclose(hb, np.abs(xs) * math.sqrt(10) / 10, atol=5e-2)
    g = GammaPenalty("LSP", theta=1.0, xi_bar=1.0)
    xs, h, hb = oracle.grid_biconjugate(lambda x: g.value(abs(x)), box=(-1, 1))
    assert np.all(hb <= h + 1e-12) and hb[1000] == 0.0


def test_biconjugate_2d():
    (X1, X2), h, hb = oracle.grid_biconjugate(lambda v: abs(v[0]) + v[1] ** 2,
                                              box=(-2, 2), resolution=81, dim=2)
    assert np.all(hb <= h + 1e-12)
    assert np.max(np.abs(h - hb)) <= 3e-2


def test_finite_differences():
    loss = QuadraticLoss(np.eye(2), np.zeros(2), 0.5)
    np.testing.assert_allclose(oracle.finite_diff_grad(loss, np.array([3.0, 4.0])), [3, 4], atol=1e-8)
    np.testing.assert_allclose(oracle.finite_diff_grad(loss, np.zeros(2)), [0, 0], atol=1e-12)


def test_l1_vertices():
    V = oracle.ell1_vertices(3)
    assert V.shape == (8, 3) and set(np.unique(V)) == {-1.0, 1.0}
