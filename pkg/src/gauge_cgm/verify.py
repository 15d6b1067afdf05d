"""Acceptance checks, shared by ``gauge-cgm verify`` and the test suite.

Each ``check_N`` returns a :class:`CriterionResult`. Supplementary checks
that accompany a criterion (for instance the sound half of a compound
criterion) are attached as ``extra`` results.

Three criteria are known not to hold as written; their results carry
``expected_fail`` and the analysis sits in the decisions ledger.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
import math
import time
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from . import oracle
from .atoms import (LatentGroup, MappedBasis, SignedBasis, TotalVariation,
                    recession_minimize, reweight)
from .config import ExperimentConfig
from .harness import coefficient_support, gen_sensing, run_experiment
from .losses import QuadraticLoss, dual_of, gauge_of, smoothness_constant
from .solver import SolverConfig, reweight_state, residual_terms, run
from .transforms import GammaPenalty, PhiPenalty

# -- shared problem family for the convex criteria -------------------------

CONVEX_SEEDS = tuple(range(10))
CONVEX_M, CONVEX_D, CONVEX_K, CONVEX_ETA = 30, 20, 5, 0.01
CONVEX_LAMBDA = 1.0
CONVEX_T = 10_000
NONCONVEX_LAMBDA = 2.0
NONCONVEX_GAMMA = dict(kind="LSP", theta=1.0, xi_bar=1.0)
NONCONVEX_EPS0 = 0.01


@dataclass
class CriterionResult:
    number: int
    label: str
    passed: bool
    detail: str
    seconds: float = 0.0
    expected_fail: bool = False
    extra: list = field(default_factory=list)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        note = " [known: see decisions ledger]" if self.expected_fail and not self.passed else ""
        return "[%s] criterion %2d  %-38s %s (%.1fs)%s" % (
            tag, self.number, self.label, self.detail, self.seconds, note)


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def convex_problem(seed):
    p = gen_sensing(CONVEX_M, CONVEX_D, CONVEX_K, CONVEX_ETA, seed)
    return QuadraticLoss(p.A, p.b, 0.5)


@dataclass
class ConvexRun:
    seed: int
    L: float
    ref: object
    objective: np.ndarray
    residual: np.ndarray
    violations: int
    cumulative_final: set
    first_ident: int | None
    grad_checks: list       # (t, gap, bound)
    ident_after_bound: bool


@lru_cache(maxsize=None)
def convex_run(seed, T=CONVEX_T):
    """P-CGM with safe screening on one of the convex problems, with every
    quantity the convex criteria need recorded on the way."""
    loss = convex_problem(seed)
    gauge = SignedBasis(CONVEX_D)
    phi = PhiPenalty(scale=CONVEX_LAMBDA)
    ref = oracle.reference_solve(loss, phi, gauge, tol=1e-10)
    grad_star = ref.gradient
    L = smoothness_constant(loss, gauge).L
    sample_t = set(np.unique(np.geomspace(1, T, 100).astype(int)).tolist())
    obj = np.empty(T)
    res = np.empty(T)
    state = {"viol": 0, "first": None, "checks": [], "minres": math.inf,
             "after_ok": True}
    support = ref.support

    def cb(t, st, rec, screen):
        obj[t - 1] = rec.objective
        res[t - 1] = rec.residual
        state["minres"] = min(state["minres"], rec.residual)
        if not support <= screen.survivors:
            state["viol"] += 1
        if screen.cumulative == support:
            if state["first"] is None:
                state["first"] = t
        else:
            state["first"] = None
        if math.sqrt(L * max(state["minres"], 0.0)) < ref.delta_min / 3 \
                and screen.cumulative != support:
            state["after_ok"] = False
        if t in sample_t:
            g = loss.grad(st.x + st.y)
            bound = dual_of(gauge, g - grad_star) ** 2 / (2 * L)
            state["checks"].append((t, rec.residual, bound))

    cfg = SolverConfig(gauge, phi, max_iter=T, screening="safe", record_history=False, L=L)
    result = run(cfg, loss, callback=cb)
    return ConvexRun(seed, L, ref, obj, res, state["viol"], result.screen.cumulative,
                     state["first"], state["checks"], state["after_ok"])


# -- criterion 1 -------------------------------------------------------------

SHIPPED_PHIS = (
    PhiPenalty("Monomial", alpha=2.0),
    PhiPenalty("Monomial", alpha=3.0),
    PhiPenalty("Monomial", alpha=4.0),
    PhiPenalty("Monomial", alpha=1.5),
    PhiPenalty("Monomial", alpha=2.0, scale=0.1),
    PhiPenalty("LogBarrier", C=1.0, beta=1.0),
    PhiPenalty("LogBarrier", C=2.0, beta=0.5),
    PhiPenalty("LogBarrier", C=0.5, beta=3.0, scale=4.0),
)


def grid_conjugate(phi, nu, n_grid=4001):
    """``max_xi xi nu - phi(xi)`` by a doubling grid search and a bounded
    Brent refinement around the best grid point."""
    if nu == 0:
        return 0.0
    hi = phi.C if phi.kind == "LogBarrier" else 1.0
    while True:
        xs = np.linspace(0.0, hi, n_grid)
        if phi.kind == "LogBarrier":
            xs = xs[:-1]
        vals = xs * nu - phi.value(xs)
        j = int(np.argmax(vals))
        if phi.kind == "LogBarrier" or j < xs.size - 1:
            break
        hi *= 4.0
    lo_b, hi_b = xs[max(j - 1, 0)], xs[min(j + 1, xs.size - 1)]
    if hi_b <= lo_b:
        return float(vals[j])
    r = minimize_scalar(lambda x: -(x * nu - phi.value(x)), bounds=(lo_b, hi_b),
                        method="bounded", options={"xatol": 1e-14 * max(1.0, hi_b)})
    return float(max(vals[j], -r.fun))


@_timed
def check_1():
    worst_grid, worst_fy = 0.0, 0.0
    nus = np.linspace(0.0, 100.0, 201)
    for phi in SHIPPED_PHIS:
        for nu in nus:
            worst_grid = max(worst_grid, abs(phi.conj(nu) - grid_conjugate(phi, nu)))
        top = phi.C * 0.999 if phi.kind == "LogBarrier" else 50.0
        for xi in np.linspace(0.0, top, 101):
            nu = phi.deriv(xi)
            worst_fy = max(worst_fy, abs(phi.value(xi) + phi.conj(nu) - xi * nu))
    ok = worst_grid <= 1e-6 and worst_fy <= 1e-8
    return CriterionResult(1, "conjugate vs grid oracle", ok,
                           "max |conj - grid| = %.2e, max FY gap = %.2e over %d penalties"
                           % (worst_grid, worst_fy, len(SHIPPED_PHIS)))


# -- criterion 2 -------------------------------------------------------------

def _random_groups(rng, d):
    while True:
        n_groups = int(rng.integers(1, d + 1))
        groups = []
        for _ in range(n_groups):
            size = int(rng.integers(1, d + 1))
            groups.append(sorted(rng.choice(d, size=size, replace=False).tolist()))
        covered = set().union(*map(set, groups))
        if len(covered) == d:
            return groups


def _latent_gauge_cvx(groups, x):
    import cvxpy as cp
    groups = [list(map(int, g)) for g in groups]
    parts = [cp.Variable(len(g)) for g in groups]
    d = x.size
    expr = []
    for i in range(d):
        terms = [parts[k][g.index(i)] for k, g in enumerate(groups) if i in g]
        expr.append(sum(terms) == x[i])
    prob = cp.Problem(cp.Minimize(sum(cp.norm(v, 2) for v in parts)), expr)
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def _random_map(rng, d):
    while True:
        P = rng.standard_normal((d, d))
        if np.linalg.cond(P) < 1e3:
            return P


@_timed
def check_2(n_instances=1000, seed=2):
    rng = np.random.default_rng(seed)
    mismatches = {"SignedBasis": 0, "MappedBasis": 0, "TotalVariation": 0, "LatentGroup": 0}
    for kind in mismatches:
        for _ in range(n_instances):
            d_lmo = int(rng.integers(2, 9))
            d_lp = int(rng.integers(2, 5))
            if kind == "SignedBasis":
                sets = SignedBasis(d_lmo), SignedBasis(d_lp)
            elif kind == "MappedBasis":
                sets = MappedBasis(_random_map(rng, d_lmo)), MappedBasis(_random_map(rng, d_lp))
            elif kind == "TotalVariation":
                sets = TotalVariation(d_lmo), TotalVariation(d_lp)
            else:
                sets = (LatentGroup(d_lmo, _random_groups(rng, d_lmo)),
                        LatentGroup(d_lp, _random_groups(rng, d_lp)))
            s_lmo, s_lp = sets
            z = rng.standard_normal(d_lmo)
            if kind == "TotalVariation":
                z -= z.mean()
            atom, sigma = s_lmo.lmo(z)
            if kind == "LatentGroup":
                norms = [float(np.sqrt(np.sum(z[g] ** 2))) for g in s_lmo.groups]
                best = int(np.argmax(norms))
                bad = atom.id != best or abs(sigma - norms[best]) > 1e-10 \
                    or abs(atom.vector @ z - norms[best]) > 1e-10
            else:
                bid, bval = oracle.brute_force_lmo(s_lmo, z)
                bad = bid != atom.id or abs(bval - sigma) > 1e-10
            x = rng.standard_normal(d_lp) * (rng.random(d_lp) < 0.7)
            if kind == "LatentGroup":
                ref = _latent_gauge_cvx(s_lp.groups, x)
            else:
                ref = oracle.brute_force_gauge(s_lp, x)
            bad = bad or abs(s_lp.gauge_value(x) - ref) > 1e-6
            mismatches[kind] += int(bad)
    total = sum(mismatches.values())
    return CriterionResult(2, "LMO / gauge vs brute force", total == 0,
                           "mismatches %s over %d instances each" % (mismatches, n_instances))


# -- criterion 3 -------------------------------------------------------------

def random_gamma(rng):
    kind = rng.choice(["Identity", "LSP", "SCAD", "MCP", "Fractional"])
    if kind == "Identity":
        return GammaPenalty()
    if kind == "LSP":
        return GammaPenalty("LSP", theta=float(rng.uniform(0.2, 3)), xi_bar=float(rng.uniform(0.01, 3)))
    if kind == "SCAD":
        th = float(rng.uniform(2.5, 4))
        return GammaPenalty("SCAD", theta=th, lam=1.0, xi_bar=float(rng.uniform(0.1, th - 0.1)))
    if kind == "MCP":
        th = float(rng.uniform(1, 4))
        return GammaPenalty("MCP", theta=th, lam=1.0, xi_bar=float(rng.uniform(0.1, th * 0.9)))
    return GammaPenalty("Fractional", q=float(rng.uniform(0.2, 0.8)),
                        xi_bar=float(rng.uniform(0.1, 2)))


def random_phi(rng):
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return PhiPenalty(scale=float(rng.uniform(0.1, 3)))
    if choice == 1:
        return PhiPenalty(alpha=3.0, scale=float(rng.uniform(0.1, 3)))
    return PhiPenalty("LogBarrier", C=float(rng.uniform(5, 20)), beta=float(rng.uniform(0.5, 2)))


def state_residual(loss, gauge, c, gamma, phi):
    """Residual at ``x = sum c_p p`` with the tracked coefficients ``c``."""
    P = np.column_stack([gauge.atom_vector(k) for k in range(gauge.n_atoms)])
    x = P @ c
    y = recession_minimize(gauge, loss, x)
    z = -loss.grad(x + y)

    class _S:
        pass
    st = _S()
    st.c = c
    w, r0 = reweight_state(st, gamma)
    r = float(np.sum(gamma.value(c)))
    nu = max(float(np.max(gauge.scores(z) / w)), 0.0)
    return residual_terms(z, x, y, r, r0, nu, phi)


@_timed
def check_3(n_states=1000, seed=3):
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_states):
        d = int(rng.integers(2, 9))
        kind = rng.choice(["SignedBasis", "MappedBasis", "TotalVariation"])
        gauge = {"SignedBasis": lambda: SignedBasis(d),
                 "MappedBasis": lambda: MappedBasis(_random_map(rng, d)),
                 "TotalVariation": lambda: TotalVariation(d)}[kind]()
        A = rng.standard_normal((int(rng.integers(d, 2 * d + 1)), d))
        loss = QuadraticLoss(A, rng.standard_normal(A.shape[0]), float(rng.uniform(0.1, 1)))
        c = rng.exponential(size=gauge.n_atoms) * (rng.random(gauge.n_atoms) < 0.4)
        res = state_residual(loss, gauge, c, random_gamma(rng), random_phi(rng))
        worst = min(worst, res)
    loss1 = QuadraticLoss(np.eye(1), np.array([2.0]), 0.5)
    res_star = state_residual(loss1, SignedBasis(1), np.array([1.0, 0.0]),
                              GammaPenalty(), PhiPenalty())
    ok = worst >= -1e-9 and abs(res_star) <= 1e-8
    return CriterionResult(3, "residual >= 0 and zero at optimum", ok,
                           "min res over %d states = %.2e, res(x*=1) = %.1e"
                           % (n_states, worst, res_star))


# -- criterion 4 -------------------------------------------------------------

@_timed
def check_4():
    worst_f, worst_r = 0.0, 0.0
    for seed in CONVEX_SEEDS:
        cr = convex_run(seed)
        t = np.arange(1, CONVEX_T + 1)
        gap = cr.objective - cr.ref.objective
        qf = (t * gap)[99:]
        qr = (t * np.minimum.accumulate(cr.residual))[99:]
        worst_f = max(worst_f, float(qf.max() / qf[0]))
        worst_r = max(worst_r, float(qr.max() / qr[0]))
    ok = worst_f <= 10.0 and worst_r <= 10.0
    return CriterionResult(4, "O(1/t) objective and min-res", ok,
                           "max_t t*gap / (100*gap_100) = %.2f, same for min-res = %.2f"
                           % (worst_f, worst_r))


# -- criterion 5 -------------------------------------------------------------

@_timed
def check_5():
    violations, not_identified, bound_fail, after_fail = 0, [], [], []
    ratios = []
    for seed in CONVEX_SEEDS:
        cr = convex_run(seed)
        violations += cr.violations
        dmin = cr.ref.delta_min
        if dmin <= 1e-6:
            continue
        if cr.cumulative_final != cr.ref.support or cr.first_ident is None:
            not_identified.append(seed)
            continue
        minres = float(np.min(cr.residual[:cr.first_ident]))
        lhs = math.sqrt(cr.L * max(minres, 0.0))
        ratios.append(lhs / (dmin / 3))
        if not lhs < dmin / 3 + 1e-6:
            bound_fail.append(seed)
        if not cr.ident_after_bound:
            after_fail.append(seed)
    core = violations == 0 and not not_identified
    res = CriterionResult(
        5, "safe screening and identification", core and not bound_fail,
        "violations=%d, unidentified=%s, first-t' bound fails on seeds %s "
        "(sqrt(L minres)/(dmin/3) = %s)" % (violations, not_identified, bound_fail,
                                             ", ".join("%.2f" % r for r in ratios)),
        expected_fail=core and bool(bound_fail))
    res.extra.append(CriterionResult(
        5, "safety + identification by T", core,
        "violations=%d, unidentified=%s" % (violations, not_identified)))
    res.extra.append(CriterionResult(
        5, "identified once sqrt(L minres) < dmin/3", not after_fail,
        "seeds failing: %s" % (after_fail,)))
    return res


# -- criterion 6 -------------------------------------------------------------

@_timed
def check_6():
    worst = math.inf
    n = 0
    for seed in CONVEX_SEEDS:
        for _, gap, bound in convex_run(seed).grad_checks:
            worst = min(worst, gap - bound)
            n += 1
    return CriterionResult(6, "gap bounds gradient error", worst >= -1e-7,
                           "min(gap - sigma^2/2L) = %.2e over %d iterates" % (worst, n))


# -- criterion 7 -------------------------------------------------------------

@_timed
def check_7(n_pairs=10_000, seed=7):
    rng = np.random.default_rng(seed)
    worst_gap, worst_eq = math.inf, 0.0
    for _ in range(n_pairs):
        d = int(rng.integers(1, 7))
        gauge = SignedBasis(d) if rng.random() < 0.5 else MappedBasis(_random_map(rng, d))
        gamma = random_gamma(rng)
        phi = PhiPenalty(alpha=float(rng.choice([2.0, 3.0])), scale=float(rng.uniform(0.1, 3)))
        A = rng.standard_normal((d + 2, d))
        loss = QuadraticLoss(A, rng.standard_normal(d + 2))
        x = rng.standard_normal(d) * (rng.random(d) < 0.7) * rng.exponential()
        xh = rng.standard_normal(d) * (rng.random(d) < 0.7) * rng.exponential()
        cx, _ = gauge.decompose(x)
        ch, _ = gauge.decompose(xh)
        rws = reweight(gauge, ch, gamma)

        def r_of(cm):
            return float(sum(gamma.value(v) for v in cm.entries.values()))

        r0 = r_of(ch) - rws.gauge_value(xh)
        F = loss.value(x) + phi.value(r_of(cx))
        Fbar = loss.value(x) + phi.value(max(r0 + rws.gauge_value(x), 0.0))
        Fh = loss.value(xh) + phi.value(r_of(ch))
        Fbar_h = loss.value(xh) + phi.value(max(r0 + rws.gauge_value(xh), 0.0))
        worst_gap = min(worst_gap, Fbar - F)
        worst_eq = max(worst_eq, abs(Fbar_h - Fh))
    ok = worst_gap >= -1e-9 and worst_eq <= 1e-10
    return CriterionResult(7, "majorant upper-bounds and touches", ok,
                           "min(Fbar - F) = %.2e, max |Fbar(xh) - F(xh)| = %.2e"
                           % (worst_gap, worst_eq))


# -- criterion 8 -------------------------------------------------------------

@_timed
def check_8():
    g = np.array([-4.0, -3.0, -4.0])
    x_star, f_star = oracle.constrained_lp(g, 1.0)
    f_bar = float(g @ np.array([0.0, math.sqrt(2.0), 0.0]))
    P = np.array([[1.0, 0.0, 3.0], [1.0, 3.0, 0.0]])
    x = np.array([6.0, 6.0])
    kappa = oracle.brute_force_gauge(P, x)
    # r at the gauge-optimal decomposition 2*(0,3) + 2*(3,0)
    r_gauge = 2 * math.sqrt(2.0)
    c_gauge = np.array([0.0, 2.0, 2.0])
    recon_ok = np.allclose(P @ c_gauge, x) and abs(c_gauge.sum() - kappa) < 1e-9
    r_min, c_min = oracle.brute_force_r(P, x, np.sqrt)
    checks = {
        "x*": np.allclose(x_star, [0.5, 0.0, 0.5], atol=1e-8),
        "f(x*)": abs(f_star + 4.0) <= 1e-10,
        "f(xbar)": abs(f_bar + 3 * math.sqrt(2.0)) <= 1e-10,
        "r 2sqrt2": recon_ok and abs(float(np.sum(np.sqrt(c_gauge))) - r_gauge) <= 1e-12,
        "r sqrt6": abs(r_min - math.sqrt(6.0)) <= 1e-6 and np.allclose(c_min, [6, 0, 0], atol=1e-6),
    }
    return CriterionResult(8, "worked two-atom example", all(checks.values()),
                           "x*=%s f(xbar)=%.10f kappa(6,6)=%.6g r=%.6f/%.6f %s"
                           % (np.round(x_star, 10), f_bar, kappa, r_gauge, r_min,
                              [k for k, v in checks.items() if not v] or "all ok"))


# -- criterion 9 -------------------------------------------------------------

def _certificates(rng):
    A = rng.standard_normal((10, 6))
    loss = QuadraticLoss(A, rng.standard_normal(10), 0.5)
    groups = [[0, 1, 2], [2, 3], [3, 4, 5], [0, 5]]
    return loss, ["l1", "l2", "linf", MappedBasis(_random_map(rng, 6)),
                  TotalVariation(6), LatentGroup(6, groups)]


@_timed
def check_9(n_pairs=1000, seed=9):
    diag = QuadraticLoss(np.diag([1.0, 2.0]), np.zeros(2), 0.5)
    L1 = smoothness_constant(diag, "l1").L
    Linf = smoothness_constant(diag, "linf").L
    L2 = smoothness_constant(diag, "l2").L
    exact = abs(L1 - 4) <= 1e-12 and abs(Linf - 9) <= 1e-12 and abs(L2 - 4) <= 1e-12 * 4
    rng = np.random.default_rng(seed)
    loss, gauges = _certificates(rng)
    worst = {}
    for gauge in gauges:
        name = gauge if isinstance(gauge, str) else gauge.kind
        L = smoothness_constant(loss, gauge).L
        w = 0.0
        for _ in range(n_pairs):
            x = rng.standard_normal(6) * rng.exponential()
            y = rng.standard_normal(6) * rng.exponential()
            if name == "TotalVariation":
                y = x + (y - x) - np.mean(y - x)
            gx, gy = loss.grad(x), loss.grad(y)
            lhs = loss.value(x) - loss.value(y) - gy @ (x - y)
            rhs = 0.5 * L * gauge_of(gauge, x - y) ** 2
            w = max(w, (lhs - rhs) / max(abs(rhs), 1e-300))
            if name != "TotalVariation":
                dg = gx - gy
                s2 = dual_of(gauge, dg) ** 2 + dual_of(gauge, -dg) ** 2
                e1 = s2 / (2 * L) - dg @ (x - y)
                e2 = loss.value(x) + gx @ (y - x) + dual_of(gauge, gy - gx) ** 2 / (2 * L) \
                    - loss.value(y)
                scale = max(abs(dg @ (x - y)), abs(loss.value(y)), 1.0)
                w = max(w, e1 / scale, e2 / scale)
        worst[name] = w
    ok = exact and all(v <= 1e-8 for v in worst.values())
    return CriterionResult(9, "smoothness certificates", ok,
                           "diag: L1=%.15g Linf=%.15g L2=%.15g; worst rel. excess %s"
                           % (L1, Linf, L2, {k: "%.1e" % v for k, v in worst.items()}))


# -- criterion 10 ------------------------------------------------------------

SUPPORT_T = 10_000


@_timed
def check_10(seeds=range(1, 21), T=SUPPORT_T):
    sizes = {"P": [], "RP": []}
    errors = {"P": 0, "RP": 0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for seed in seeds:
            base = ExperimentConfig(m=100, n=100, sparsity=5, eta=100.0, seed=seed,
                                    lam=1e-5, max_iter=T, record_every=T)
            rp = replace(base, gamma=GammaPenalty("LSP", theta=2.5, xi_bar=0.01))
            for name, cfg in (("P", base), ("RP", rp)):
                row = run_experiment(cfg)[-1]
                if row[-1] != "summary":
                    errors[name] += 1
                else:
                    sizes[name].append(row[9])
    if errors["P"] or errors["RP"]:
        return CriterionResult(
            10, "RP-CGM support no larger than P-CGM", False,
            "diverged runs: P-CGM %d/%d, RP-CGM %d/%d (float overflow at lambda=1e-5)"
            % (errors["P"], len(list(seeds)), errors["RP"], len(list(seeds))),
            expected_fail=True)
    mp, mr = float(np.median(sizes["P"])), float(np.median(sizes["RP"]))
    return CriterionResult(10, "RP-CGM support no larger than P-CGM", mr <= mp,
                           "median support P-CGM %.1f, RP-CGM %.1f" % (mp, mr),
                           expected_fail=True)


# -- criterion 11 ------------------------------------------------------------

@_timed
def check_11(seeds=CONVEX_SEEDS, T=CONVEX_T):
    bad = []
    stable = []
    for seed in seeds:
        loss = convex_problem(seed)
        cfg = SolverConfig(SignedBasis(CONVEX_D), PhiPenalty(scale=NONCONVEX_LAMBDA),
                           GammaPenalty(**NONCONVEX_GAMMA), max_iter=T,
                           screening="heuristic", epsilon0=NONCONVEX_EPS0,
                           record_history=False)
        result = run(cfg, loss)
        stable.append(result.screen.last_change)
        if not (result.screen.last_change < T
                and result.screen.cumulative == coefficient_support(result.state.c)):
            bad.append(seed)
    return CriterionResult(11, "heuristic screening stabilizes", not bad,
                           "last change at t = %s; failing seeds %s" % (stable, bad))


# -- criterion 12 ------------------------------------------------------------

GAP_BOUND_CONFIGS = (
    ("LSP theta=2.5 xi_bar=0.01", dict(kind="LSP", theta=2.5, xi_bar=0.01)),
    ("LSP theta=1 xi_bar=1", dict(kind="LSP", theta=1.0, xi_bar=1.0)),
)


def gap_bound_margin(gamma, phi=PhiPenalty(), n_samples=50, seed=12):
    """Smallest ``(h - h**) - (phi(gamma|x|) - phi(gamma_min |x|))`` at sampled
    grid points of ``[-10, 10]``."""
    def h(x):
        return phi.value(gamma.value(abs(x)))
    xs, hv, hb = oracle.grid_biconjugate(h)
    idx = np.random.default_rng(seed).choice(xs.size, size=n_samples, replace=False)
    margins = []
    for i in idx:
        x = abs(xs[i])
        rhs = phi.value(gamma.value(x)) - phi.value(gamma.gamma_min * x)
        margins.append((hv[i] - hb[i]) - rhs)
    return float(min(margins))


@_timed
def check_12():
    margins = {name: gap_bound_margin(GammaPenalty(**kw)) for name, kw in GAP_BOUND_CONFIGS}
    ok = {name: m >= -1e-2 for name, m in margins.items()}
    res = CriterionResult(12, "nonconvexity gap lower bound (grid)", all(ok.values()),
                          "; ".join("%s: min margin %.3g" % (k, v) for k, v in margins.items()),
                          expected_fail=not all(ok.values()))
    for name in margins:
        res.extra.append(CriterionResult(12, name, ok[name], "min margin %.3g" % margins[name]))
    return res


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6,
          7: check_7, 8: check_8, 9: check_9, 10: check_10, 11: check_11, 12: check_12}


def run_all(only=None, stream=print):
    results = []
    for n, fn in CHECKS.items():
        if only and n not in only:
            continue
        r = fn()
        results.append(r)
        stream(r.line())
        for e in r.extra:
            stream("       + %s: %s %s" % (e.label, "ok" if e.passed else "FAILED", e.detail))
    return results
