"""Atomic sets and the gauge machinery built on them.

Every set enumerates a finite list of atoms with integer ids; for the signed
families atom ``2j`` is ``+p_j`` and atom ``2j + 1`` is ``-p_j``. The core
primitive is :meth:`AtomSet.scores`, the vector of inner products ``p^T z``
over all atom ids, from which the LMO, the support function and the
screening slacks all follow.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls

from . import kernels

SET_KINDS = ("SignedBasis", "MappedBasis", "LatentGroup", "TotalVariation")

LATENT_TOL = 1e-8
LATENT_MAX_ITER = 200_000
# step-size scales tried in turn, with sweep budgets; small rho is fast on
# most inputs, large rho is robust near kinks
LATENT_SCHEDULE = ((1.0, 2_000), (10.0, LATENT_MAX_ITER))


class TVInfeasibleGradient(ValueError):
    """The dual vector has a component along the recession direction, so the
    support function is infinite and the LMO is undefined."""


@dataclass(frozen=True)
class Atom:
    id: int
    vector: np.ndarray
    group: int | None = None


@dataclass
class CoeffMap:
    """Sparse conic decomposition ``x = sum_p c_p p``.

    ``directions`` is only used by latent group sets, whose atoms are unit
    vectors inside a group and therefore not fixed by the id alone.
    """
    entries: dict = field(default_factory=dict)
    directions: dict = field(default_factory=dict)

    @classmethod
    def from_dense(cls, coeffs, directions=None, tol=0.0):
        ids = np.flatnonzero(coeffs > tol)
        entries = {int(i): float(coeffs[i]) for i in ids}
        dirs = {}
        if directions is not None:
            dirs = {i: np.array(directions[i]) for i in entries}
        return cls(entries, dirs)

    def dense(self, n_atoms):
        out = np.zeros(n_atoms)
        for k, v in self.entries.items():
            out[k] = v
        return out

    def support(self):
        return set(self.entries)

    def total(self):
        return float(sum(self.entries.values()))

    def reconstruct(self, atom_set):
        x = np.zeros(atom_set.dim)
        for k, c in self.entries.items():
            x += c * atom_set.atom_vector(k, direction=self.directions.get(k))
        return x

    def __len__(self):
        return len(self.entries)


class AtomSet:
    """Base class. Subclasses fill in ``scores`` and the gauge routines."""
    kind = None
    recession = None  # None, or a unit direction spanning the line K

    def __init__(self, dim):
        self.dim = int(dim)

    # -- to be provided -----------------------------------------------------

    @property
    def n_atoms(self):
        raise NotImplementedError

    def scores(self, z):
        raise NotImplementedError

    def atom_vector(self, atom_id, z=None, direction=None):
        raise NotImplementedError

    def gauge_value(self, x):
        raise NotImplementedError

    def decompose(self, x):
        raise NotImplementedError

    # -- shared -----------------------------------------------------------

    def check_dual(self, z):
        """Raise if ``z`` is outside the polar of the recession cone."""

    def support_value(self, z):
        z = np.asarray(z, dtype=float)
        return float(np.max(self.scores(z)))

    def finite_support(self, z):
        """Support function of the finite part, ignoring the recession cone."""
        return float(np.max(self.scores(np.asarray(z, dtype=float))))

    def support_sym(self, z):
        """Support function of the symmetrized finite set ``P u (-P)``."""
        z = np.asarray(z, dtype=float)
        return max(self.finite_support(z), self.finite_support(-z))

    def lmo(self, z, weights=None):
        z = np.asarray(z, dtype=float)
        self.check_dual(z)
        s = self.scores(z)
        w = np.ones_like(s) if weights is None else weights
        k, val = kernels.argmax_ratio(s, w)
        k = int(k)
        return Atom(k, self.atom_vector(k, z=z), self.atom_group(k)), float(val)

    def atom_group(self, atom_id):
        return None

    def atom_matrix(self):
        """Columns are the finite atoms, in id order (finite sets only)."""
        return np.column_stack([self.atom_vector(k) for k in range(self.n_atoms)])

    def screen_units(self):
        return range(self.n_atoms)

    def __repr__(self):
        return "%s(dim=%d)" % (type(self).__name__, self.dim)


class SignedBasis(AtomSet):
    """``{+-e_1, ..., +-e_d}``; gauge is the l1 norm."""
    kind = "SignedBasis"

    @property
    def n_atoms(self):
        return 2 * self.dim

    def scores(self, z):
        return kernels.signed_scores(np.ascontiguousarray(z, dtype=float))

    def atom_vector(self, atom_id, z=None, direction=None):
        v = np.zeros(self.dim)
        v[atom_id // 2] = -1.0 if atom_id % 2 else 1.0
        return v

    def support_value(self, z):
        return float(np.max(np.abs(z)))

    finite_support = support_value

    def gauge_value(self, x):
        return float(np.sum(np.abs(x)))

    def decompose(self, x):
        x = np.asarray(x, dtype=float)
        c = np.zeros(self.n_atoms)
        c[0::2] = np.maximum(x, 0.0)
        c[1::2] = np.maximum(-x, 0.0)
        return CoeffMap.from_dense(c), np.zeros(self.dim)


class MappedBasis(AtomSet):
    """``{+-p_1, ..., +-p_k}`` for the columns of a full-column-rank ``P``.
    The gauge is ``||P^+ x||_1`` on ``range(P)`` and infinite elsewhere."""
    kind = "MappedBasis"

    def __init__(self, map_matrix):
        P = np.array(map_matrix, dtype=float)
        if P.ndim != 2:
            raise ValueError("map_matrix must be 2-D")
        super().__init__(P.shape[0])
        if np.linalg.matrix_rank(P) < P.shape[1]:
            raise ValueError("map_matrix must have full column rank")
        self.map_matrix = P
        self._pinv = np.linalg.pinv(P)

    @property
    def n_atoms(self):
        return 2 * self.map_matrix.shape[1]

    def scores(self, z):
        return kernels.signed_scores(self.map_matrix.T @ z)

    def atom_vector(self, atom_id, z=None, direction=None):
        v = self.map_matrix[:, atom_id // 2].copy()
        return -v if atom_id % 2 else v

    def support_value(self, z):
        return float(np.max(np.abs(self.map_matrix.T @ z)))

    finite_support = support_value

    def _preimage(self, x):
        c = self._pinv @ x
        if np.linalg.norm(self.map_matrix @ c - x) > 1e-9 * (1 + np.linalg.norm(x)):
            return None
        return c

    def gauge_value(self, x):
        c = self._preimage(np.asarray(x, dtype=float))
        return np.inf if c is None else float(np.sum(np.abs(c)))

    def decompose(self, x):
        x = np.asarray(x, dtype=float)
        c = self._preimage(x)
        if c is None:
            raise ValueError("x is not in the range of the map")
        dense = np.zeros(self.n_atoms)
        dense[0::2] = np.maximum(c, 0.0)
        dense[1::2] = np.maximum(-c, 0.0)
        return CoeffMap.from_dense(dense), np.zeros(self.dim)


class TotalVariation(AtomSet):
    """Mean-centred step atoms ``+-b_k`` plus the constant line.

    ``b_k = beta_k - (k/d) 1`` with ``beta_k`` the indicator of the first
    ``k`` coordinates, so that ``D b_k = e_k`` for the forward difference
    ``(Dx)_k = x_k - x_{k+1}``.
    """
    kind = "TotalVariation"

    def __init__(self, dim):
        if dim < 2:
            raise ValueError("TotalVariation needs dim >= 2")
        super().__init__(dim)
        self.recession = np.ones(self.dim) / np.sqrt(self.dim)

    @property
    def n_atoms(self):
        return 2 * (self.dim - 1)

    def steps(self):
        d = self.dim
        B = np.triu(np.ones((d, d - 1)))
        return B - (np.arange(1, d) / d)[None, :]

    def dual_residual(self, z):
        return abs(float(np.sum(z))) / np.sqrt(self.dim)

    def check_dual(self, z):
        if self.dual_residual(z) > 1e-8 * (1.0 + float(np.linalg.norm(z))):
            raise TVInfeasibleGradient(
                "gradient has a component along the constant direction")

    def _dual_coords(self, z):
        d = self.dim
        return np.cumsum(z)[:-1] - np.arange(1, d) / d * np.sum(z)

    def scores(self, z):
        return kernels.signed_scores(self._dual_coords(np.asarray(z, dtype=float)))

    def atom_vector(self, atom_id, z=None, direction=None):
        k = atom_id // 2
        v = np.where(np.arange(self.dim) <= k, 1.0, 0.0) - (k + 1) / self.dim
        return -v if atom_id % 2 else v

    def support_value(self, z):
        z = np.asarray(z, dtype=float)
        if self.dual_residual(z) > 1e-8 * (1.0 + float(np.linalg.norm(z))):
            return np.inf
        return float(np.max(np.abs(self._dual_coords(z))))

    def finite_support(self, z):
        return float(np.max(np.abs(self._dual_coords(np.asarray(z, dtype=float)))))

    def gauge_value(self, x):
        return float(np.sum(np.abs(np.diff(x))))

    def decompose(self, x):
        x = np.asarray(x, dtype=float)
        dx = x[:-1] - x[1:]
        dense = np.zeros(self.n_atoms)
        dense[0::2] = np.maximum(dx, 0.0)
        dense[1::2] = np.maximum(-dx, 0.0)
        coeffs = CoeffMap.from_dense(dense)
        return coeffs, x - coeffs.reconstruct(self)


class LatentGroup(AtomSet):
    """Overlapping groups; each group contributes the unit l2 ball on its
    coordinates. Atom ids are group ids."""
    kind = "LatentGroup"

    def __init__(self, dim, groups):
        super().__init__(dim)
        groups = [np.unique(np.asarray(g, dtype=np.int64)) for g in groups]
        if not groups or any(g.size == 0 for g in groups):
            raise ValueError("groups must be a nonempty list of nonempty index sets")
        if any(g.min() < 0 or g.max() >= dim for g in groups):
            raise ValueError("group index out of range")
        self.groups = groups
        self.idx = np.concatenate(groups)
        self.ptr = np.concatenate([[0], np.cumsum([g.size for g in groups])]).astype(np.int64)
        self.counts = np.bincount(self.idx, minlength=dim).astype(float)
        self._slot_group = np.repeat(np.arange(len(groups)), np.diff(self.ptr))

    @property
    def n_atoms(self):
        return len(self.groups)

    def atom_group(self, atom_id):
        return atom_id

    def scores(self, z):
        return kernels.group_norms(np.ascontiguousarray(z, dtype=float), self.idx, self.ptr)

    def atom_vector(self, atom_id, z=None, direction=None):
        g = self.groups[atom_id]
        v = np.zeros(self.dim)
        if direction is not None:
            return np.asarray(direction, dtype=float)
        if z is not None:
            nrm = np.linalg.norm(z[g])
            if nrm > 0:
                v[g] = z[g] / nrm
                return v
        v[g] = 1.0 / np.sqrt(g.size)
        return v

    def atom_matrix(self):
        raise TypeError("latent group atoms form a continuum")

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((self.counts == 0) & (x != 0)):
            raise ValueError("x has mass outside every group")
        if not np.any(x):
            return np.zeros(self.idx.size)
        counts = np.where(self.counts > 0, self.counts, 1.0)
        xmax = float(np.max(np.abs(x)))
        tol = LATENT_TOL * (1.0 + xmax)
        for factor, budget in LATENT_SCHEDULE:
            v, it = kernels.latent_dr(x, self.idx, self.ptr, counts, factor * xmax,
                                      tol, budget)
            if it < budget:
                return v
        v = self._dual_polish(x, counts)
        if v is None:
            raise RuntimeError("latent group decomposition did not reach duality gap "
                               "%.1e" % tol)
        return v

    def _dual_polish(self, x, counts):
        """Fallback for inputs near a kink, where splitting crawls: solve
        ``max x^T z  s.t.  ||z_G|| <= 1`` by SQP, then recover the group
        weights on the active groups by nonnegative least squares."""
        cons = [{"type": "ineq", "fun": lambda z, g=g: 1.0 - z[g] @ z[g],
                 "jac": lambda z, g=g: _embed(-2.0 * z[g], g, z.size)}
                for g in self.groups]
        z0 = x / max(np.linalg.norm(x[g]) for g in self.groups)
        res = minimize(lambda z: -(x @ z), z0, jac=lambda z: -x, constraints=cons,
                       method="SLSQP", options={"ftol": 1e-16, "maxiter": 1000})
        z = res.x
        norms = np.array([np.linalg.norm(z[g]) for g in self.groups])
        z = z / np.max(norms)
        norms = norms / np.max(norms)
        active = np.flatnonzero(norms > 1.0 - 1e-6)
        M = np.column_stack([_embed(z[self.groups[k]], self.groups[k], self.dim)
                             for k in active])
        c, _ = nnls(M, x)
        v = np.zeros(self.idx.size)
        for ck, k in zip(c, active):
            v[self.ptr[k]:self.ptr[k + 1]] = ck * z[self.groups[k]]
        resid = np.bincount(self.idx, weights=v, minlength=self.dim) - x
        v -= resid[self.idx] / counts[self.idx]
        primal = float(np.sum(np.sqrt(np.add.reduceat(v * v, self.ptr[:-1]))))
        tol = LATENT_TOL * (1.0 + float(np.max(np.abs(x))))
        return v if primal - float(x @ z) <= tol else None

    def group_components(self, x):
        """Per-group vectors ``s_k`` minimizing ``sum ||s_k||`` with sum ``x``."""
        v = self._split(x)
        comps = []
        for k, g in enumerate(self.groups):
            s = np.zeros(self.dim)
            s[g] = v[self.ptr[k]:self.ptr[k + 1]]
            comps.append(s)
        return comps

    def gauge_value(self, x):
        v = self._split(x)
        return float(np.sum(np.sqrt(np.add.reduceat(v * v, self.ptr[:-1]))))

    def decompose(self, x, tol=0.0):
        entries, dirs = {}, {}
        for k, s in enumerate(self.group_components(x)):
            c = float(np.linalg.norm(s))
            if c > tol:
                entries[k] = c
                dirs[k] = s / c
        return CoeffMap(entries, dirs), np.zeros(self.dim)


def _embed(vals, g, dim):
    out = np.zeros(dim)
    out[g] = vals
    return out


class ReweightedAtomSet:
    """Atoms ``p / w_p``. ``weights`` is dense over atom ids."""

    def __init__(self, base, weights):
        self.base = base
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (base.n_atoms,):
            raise ValueError("need one weight per atom")

    @property
    def dim(self):
        return self.base.dim

    @property
    def n_atoms(self):
        return self.base.n_atoms

    def scores(self, z):
        return self.base.scores(z) / self.weights

    def lmo(self, z):
        return self.base.lmo(z, self.weights)

    def support_value(self, z):
        z = np.asarray(z, dtype=float)
        if np.isinf(self.base.support_value(z)):
            return np.inf
        return float(np.max(self.scores(z)))

    def support_sym(self, z):
        z = np.asarray(z, dtype=float)
        return max(float(np.max(self.scores(z))), float(np.max(self.scores(-z))))

    def gauge_value(self, x):
        """Weighted gauge ``min sum w_p c_p`` (signed families only)."""
        if self.base.kind == "LatentGroup":
            raise NotImplementedError("weighted latent group gauge")
        coeffs, _ = self.base.decompose(x)
        return float(sum(self.weights[k] * c for k, c in coeffs.entries.items()))


# --------------------------------------------------------------------------
# functional interface

def make_atom_set(kind, dim, groups=None, map_matrix=None):
    if kind == "SignedBasis":
        return SignedBasis(dim)
    if kind == "MappedBasis":
        if map_matrix is None:
            raise ValueError("MappedBasis needs a map matrix")
        return MappedBasis(map_matrix)
    if kind == "TotalVariation":
        return TotalVariation(dim)
    if kind == "LatentGroup":
        if groups is None:
            raise ValueError("LatentGroup needs groups")
        return LatentGroup(dim, groups)
    raise ValueError("unknown gauge kind %r" % (kind,))


def lmo(atom_set, z):
    return atom_set.lmo(z)


def support_value(atom_set, z):
    return atom_set.support_value(z)


def gauge_value(atom_set, x):
    return atom_set.gauge_value(x)


def decompose(atom_set, x):
    return atom_set.decompose(x)


def reweight(atom_set, coeffs, gamma):
    w = np.full(atom_set.n_atoms, gamma.gamma_max)
    if coeffs.entries:
        ids = np.fromiter(coeffs.entries.keys(), dtype=np.int64)
        vals = np.fromiter(coeffs.entries.values(), dtype=float)
        w[ids] = gamma.deriv(vals)
    return ReweightedAtomSet(atom_set, w)


def recession_minimize(atom_set, loss, x):
    """Exact minimizer over the recession line of ``f(x + y)``."""
    if atom_set.recession is None:
        return np.zeros(atom_set.dim)
    direction = atom_set.recession
    return loss.line_minimize(x, direction) * direction
