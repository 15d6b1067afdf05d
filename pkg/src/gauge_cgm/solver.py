"""Penalized and reweighted penalized conditional gradient iterations.

One iteration at ``x`` (with recession part ``y`` minimized exactly):

1. ``z = -grad f(x + y)``;
2. weights ``w_p = gamma'(c_p)`` and offset ``r0 = sum gamma(c_p) - w_p c_p``
   from the tracked coefficients;
3. ``p, nu = LMO`` over the reweighted atoms, ``xi = max(0, (phi*)'(nu) - r0)``
   and ``s = xi * p / w_p``;
4. ``x <- (1 - theta) x + theta s`` with the coefficient map updated in step;
5. ``y <- argmin_{y in K} f(x + y)``.

With ``gamma`` the identity the weights are all one and ``r0 = 0``, which is
the plain penalized method.
"""
from collections import deque
from dataclasses import dataclass, field, replace
import math
from typing import Callable

import numpy as np

from . import kernels
from .atoms import CoeffMap, LatentGroup, ReweightedAtomSet, recession_minimize
from .losses import smoothness_constant
from .screening import ScreenSet, epsilon_schedule, screen_mask
from .transforms import IDENTITY, GammaPenalty, PhiPenalty

PRUNE_TOL = 1e-14
HISTORY_CAP = 1_000_000
SCREEN_MODES = ("off", "safe", "heuristic")


class DivergenceError(RuntimeError):
    """The objective became non-finite."""


def default_step(t):
    return 2.0 / (1.0 + t)


@dataclass
class SolverConfig:
    gauge: object
    phi: PhiPenalty = field(default_factory=PhiPenalty)
    gamma: GammaPenalty = IDENTITY
    max_iter: int = 1000
    step_schedule: Callable[[int], float] = default_step
    screening: str = "off"
    epsilon0: float = 0.0
    record_history: bool = True
    L: float | None = None
    reweight: bool = True
    x0: np.ndarray | None = None

    def __post_init__(self):
        if self.screening not in SCREEN_MODES:
            raise ValueError("screening must be one of %s" % (SCREEN_MODES,))
        if not math.isfinite(self.gamma.gamma_max):
            raise ValueError("gamma has unbounded slope at 0; the reweighted "
                             "step is undefined")
        if self.epsilon0 < 0:
            raise ValueError("epsilon0 must be nonnegative")
        if not self.reweight and not self.gamma.is_identity:
            raise ValueError("reweight=False is only meaningful for identity gamma")

    @property
    def screening_enabled(self):
        return self.screening != "off"


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray                      # dense coefficients over atom ids
    t: int = 1
    r: float = 0.0                     # sum gamma(c_p)
    r0: float = 0.0
    weights: np.ndarray | None = None
    comps: np.ndarray | None = None    # latent groups: one row per group

    @property
    def coeffs(self):
        if self.comps is None:
            return CoeffMap.from_dense(self.c)
        dirs = {k: self.comps[k] / self.c[k] for k in np.flatnonzero(self.c > 0)}
        return CoeffMap.from_dense(self.c, dirs)

    def copy(self):
        return replace(
            self, x=self.x.copy(), y=self.y.copy(), c=self.c.copy(),
            weights=None if self.weights is None else self.weights.copy(),
            comps=None if self.comps is None else self.comps.copy())


@dataclass
class IterationRecord:
    t: int
    objective: float
    residual: float
    sigma: float
    atom_id: int
    xi: float
    screen_threshold: float
    survivor_count: int


def initial_state(gauge, loss=None, x0=None):
    n, d = gauge.n_atoms, gauge.dim
    comps = np.zeros((n, d)) if isinstance(gauge, LatentGroup) else None
    if x0 is None or not np.any(x0):
        x = np.zeros(d)
        c = np.zeros(n)
    else:
        x = np.asarray(x0, dtype=float).copy()
        coeffs, rec = gauge.decompose(x)
        x = x - rec
        c = coeffs.dense(n)
        if comps is not None:
            for k, v in coeffs.entries.items():
                comps[k] = v * coeffs.directions[k]
    y = np.zeros(d) if loss is None else recession_minimize(gauge, loss, x)
    return SolverState(x=x, y=y, c=c, comps=comps)


def reweight_state(state, gamma):
    """Weights ``gamma'(c_p)`` (``gamma_max`` for absent atoms) and offset
    ``r0 = sum gamma(c_p) - gamma'(c_p) c_p``."""
    w = gamma.deriv(state.c)
    if gamma.is_identity:
        return w, 0.0
    active = state.c > 0
    ca = state.c[active]
    r0 = float(np.sum(gamma.value(ca)) - np.sum(w[active] * ca))
    return w, r0


def _r_value(c, gamma):
    if gamma.is_identity:
        return float(np.sum(c))
    return float(np.sum(gamma.value(c[c > 0])))


def min_maj_step(z, rws, phi, r0):
    """Penalized LMO step: returns ``(s, atom, xi, nu)``."""
    atom, nu = rws.lmo(z)
    nu = max(nu, 0.0)
    xi = max(0.0, phi.conj_deriv(nu) - r0)
    s = (xi / rws.weights[atom.id]) * atom.vector
    return s, atom, xi, nu


def merge_step(state, s, atom, xi, theta):
    """Convex combination ``(1 - theta) x + theta s`` with coefficient
    bookkeeping; returns a new state."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    new = state.copy()
    w = 1.0 if state.weights is None else state.weights[atom.id]
    _merge_inplace(new, s, atom.id, atom.vector, xi / w, theta)
    return new


def _merge_inplace(state, s, atom_id, atom_vec, increment, theta):
    keep = 1.0 - theta
    state.x *= keep
    state.x += theta * s
    state.c *= keep
    if state.comps is None:
        state.c[atom_id] += theta * increment
    else:
        state.comps *= keep
        state.comps[atom_id] += (theta * increment) * atom_vec
        state.c[atom_id] = float(np.linalg.norm(state.comps[atom_id]))
    small = (state.c < PRUNE_TOL) & (state.c > 0)
    if small.any():
        state.c[small] = 0.0
        if state.comps is not None:
            state.comps[small] = 0.0


def residual_terms(z, x, y, r, r0, nu, phi):
    """Residual (linearized duality gap at reference ``x``)."""
    return float(-(z @ (x + y)) + phi.value(r) + phi.conj(nu) - r0 * nu)


def residual(state, loss, phi, rws):
    z = -loss.grad(state.x + state.y)
    nu = max(rws.support_value(z), 0.0)
    return residual_terms(z, state.x, state.y, state.r, state.r0, nu, phi)


def objective(state, loss, phi):
    return loss.value(state.x + state.y) + phi.value(state.r)


@dataclass
class RunResult:
    state: SolverState
    history: deque
    screen: ScreenSet | None
    L: float | None
    min_residual: float


def run(config, loss, callback=None):
    """Run ``config.max_iter`` iterations. ``callback(t, state, record, screen)``
    is invoked once per iteration, before the merge step."""
    gauge, phi, gamma = config.gauge, config.phi, config.gamma
    if loss.dim != gauge.dim:
        raise ValueError("loss dimension %d does not match gauge dimension %d"
                         % (loss.dim, gauge.dim))
    phi.warn_if_unsupported()
    state = initial_state(gauge, loss, config.x0)
    history = deque(maxlen=HISTORY_CAP)

    L = config.L
    screen = None
    if config.screening_enabled:
        if L is None:
            L = smoothness_constant(loss, gauge).L
        heuristic = config.screening == "heuristic"
        screen = ScreenSet(gauge.n_atoms, intersect=not heuristic)
        # reweighted slacks err by at most sigma(grad error) / gamma_min
        thr_scale = 1.0 / gamma.gamma_min if heuristic else 1.0

    use_weights = config.reweight
    ones = np.ones(gauge.n_atoms)
    min_res = math.inf

    for t in range(1, config.max_iter + 1):
        state.t = t
        f_val, g = loss.value_and_grad(state.x + state.y)
        z = -g
        if use_weights:
            w, r0 = reweight_state(state, gamma)
        else:
            w, r0 = ones, 0.0
        state.weights, state.r0 = w, r0
        state.r = _r_value(state.c, gamma)

        gauge.check_dual(z)
        scores = gauge.scores(z)
        k, nu = kernels.argmax_ratio(scores, w)
        k = int(k)
        nu = max(float(nu), 0.0)

        obj = f_val + phi.value(state.r)
        if not math.isfinite(obj):
            raise DivergenceError("objective is %r at iteration %d" % (obj, t))
        res = residual_terms(z, state.x, state.y, state.r, r0, nu, phi)
        min_res = min(min_res, res)

        thr = math.nan
        survivors = gauge.n_atoms
        if screen is not None:
            eps = 0.0 if not heuristic else epsilon_schedule(t, config.epsilon0)
            removed, thr, delta = screen_mask(
                z, gauge, res, L, eps, weights=w if heuristic else None,
                scale=thr_scale)
            screen.update(removed, t, delta)
            survivors = int(screen.survivors_mask.sum())

        xi = max(0.0, phi.conj_deriv(nu) - r0)
        record = IterationRecord(t, obj, res, nu, k, xi, thr, survivors)
        if config.record_history:
            history.append(record)
        if callback is not None:
            callback(t, state, record, screen)

        atom_vec = gauge.atom_vector(k, z=z)
        inc = xi / w[k]
        s = inc * atom_vec
        theta = config.step_schedule(t)
        _merge_inplace(state, s, k, atom_vec, inc, theta)
        if gauge.recession is not None:
            state.y = recession_minimize(gauge, loss, state.x)

    state.t = config.max_iter + 1
    w, r0 = reweight_state(state, gamma) if use_weights else (ones, 0.0)
    state.weights, state.r0 = w, r0
    state.r = _r_value(state.c, gamma)
    return RunResult(state, history, screen, L, min_res)


def final_residual(result, loss, phi, gauge):
    """Residual at the iterate returned by :func:`run`."""
    st = result.state
    return residual(st, loss, phi, ReweightedAtomSet(gauge, st.weights))
