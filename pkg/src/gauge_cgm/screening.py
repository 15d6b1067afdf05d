"""Gap-based atom screening, degeneracy slack and support metrics.

The slack of atom ``p`` at dual point ``z = -grad f`` is
``delta_p = sigma_sym(z) - p^T z``: zero for atoms that attain the support
function, positive for atoms that cannot be active at the point generating
``z``. Screening removes every atom whose slack exceeds what the gradient
error, bounded through the residual, could explain.
"""
from dataclasses import dataclass
import math

import numpy as np


@dataclass
class ScreenSet:
    """Surviving atom ids for one run.

    ``survivors`` is the latest screened set; ``cumulative`` is the running
    intersection when ``intersect`` is set (convex, safe regime) and the latest
    set otherwise.
    """
    n_units: int
    intersect: bool = True
    survivors_mask: np.ndarray = None
    cumulative_mask: np.ndarray = None
    per_atom_slack: np.ndarray = None
    last_change: int = 0

    def __post_init__(self):
        if self.survivors_mask is None:
            self.survivors_mask = np.ones(self.n_units, dtype=bool)
        if self.cumulative_mask is None:
            self.cumulative_mask = np.ones(self.n_units, dtype=bool)

    @property
    def survivors(self):
        return set(np.flatnonzero(self.survivors_mask).tolist())

    @property
    def cumulative(self):
        return set(np.flatnonzero(self.cumulative_mask).tolist())

    def update(self, removed_mask, t, slack=None):
        self.survivors_mask = ~removed_mask
        new = self.cumulative_mask & self.survivors_mask if self.intersect \
            else self.survivors_mask.copy()
        if not np.array_equal(new, self.cumulative_mask):
            self.last_change = t
        self.cumulative_mask = new
        if slack is not None:
            self.per_atom_slack = slack


def slacks(z, atom_set, weights=None):
    """Per-atom slack and the support value it is measured from.

    With ``weights`` the slacks live on the reweighted set ``p / w_p``.
    """
    z = np.asarray(z, dtype=float)
    s = atom_set.scores(z)
    if weights is not None:
        s = s / weights
        sigma = max(float(np.max(s)), float(np.max(atom_set.scores(-z) / weights)))
    else:
        sigma = atom_set.support_sym(z)
    return sigma - s, sigma


def threshold(res, L, eps):
    return eps + 2.0 * math.sqrt(L * max(res, 0.0) + eps)


def screen_mask(z, atom_set, res, L, eps, weights=None, scale=1.0):
    """Boolean mask of removed atoms plus the threshold used."""
    delta, _ = slacks(z, atom_set, weights)
    thr = scale * threshold(res, L, eps)
    return delta > thr, thr, delta


def screen(z, atom_set, res, L, eps=0.0, weights=None):
    """Atom ids certified (convex, ``eps = 0``) to be outside the support."""
    removed, _, _ = screen_mask(z, atom_set, res, L, eps, weights)
    return set(np.flatnonzero(removed).tolist())


def epsilon_schedule(t, eps0):
    if t < 1:
        raise ValueError("t starts at 1")
    return eps0 / t


def delta_slacks(z, atom_set, support, weights=None):
    """Slacks for every atom and ``delta_min`` over atoms outside ``support``.

    ``delta_min`` is ``inf`` when the support covers every atom; a value of 0
    flags a degenerate point.
    """
    delta, _ = slacks(z, atom_set, weights)
    per_atom = {i: float(d) for i, d in enumerate(delta)}
    outside = [per_atom[i] for i in per_atom if i not in support]
    return per_atom, (min(outside) if outside else math.inf)


def f1_score(estimated, truth):
    estimated, truth = set(estimated), set(truth)
    if not estimated and not truth:
        return 1.0
    tp = len(estimated & truth)
    if tp == 0:
        return 0.0
    precision = tp / len(estimated)
    recall = tp / len(truth)
    return 2 * precision * recall / (precision + recall)


def linearization_error(x, coeffs, x_star, coeffs_star, gamma):
    """Gap of the gamma-linearization at ``x`` evaluated at ``x_star``:
    ``r(x) - rbar(x; x) + rbar(x*; x) - r(x*)``, nonnegative by concavity.

    ``x`` and ``x_star`` are accepted for interface symmetry; the value only
    depends on the coefficient maps.
    """
    c = coeffs.entries
    cs = coeffs_star.entries
    r_x = sum(gamma.value(v) for v in c.values())
    r_star = sum(gamma.value(v) for v in cs.values())
    lin_x = sum(gamma.deriv(v) * v for v in c.values())
    lin_star = sum(gamma.deriv(c.get(k, 0.0)) * v for k, v in cs.items())
    return float(r_x - lin_x + lin_star - r_star)
