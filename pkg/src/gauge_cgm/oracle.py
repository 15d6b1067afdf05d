"""Reference computations that do not go through the conditional gradient
code path: accelerated proximal gradient solves, LP gauges, enumeration
LMOs, grid conjugates and finite differences."""
from dataclasses import dataclass
import itertools

import numpy as np
from scipy.optimize import linprog, minimize

from . import kernels
from .atoms import (MappedBasis, SignedBasis, TotalVariation,
                    recession_minimize)
from .screening import delta_slacks
from .solver import residual_terms

MAX_ITER = 1_000_000
SUPPORT_TOL = 1e-9


class MaxIterExceeded(RuntimeError):
    pass


@dataclass
class ReferenceSolution:
    x_star: np.ndarray          # finite-atom part
    y_star: np.ndarray          # recession part
    objective: float
    gradient: np.ndarray        # grad f(x* + y*)
    support: set
    delta_min: float
    residual_at_solution: float
    coeffs: dict


def _signed_columns(gauge):
    """Matrix whose columns are the positive atoms ``p_j`` (``+p_j`` has id
    ``2j``) and the recession basis, if any."""
    if isinstance(gauge, SignedBasis):
        return np.eye(gauge.dim), None
    if isinstance(gauge, MappedBasis):
        return gauge.map_matrix, None
    if isinstance(gauge, TotalVariation):
        return gauge.steps(), np.ones((gauge.dim, 1))
    raise NotImplementedError("no reference solver for %s" % gauge.kind)


def reference_solve(loss, phi, gauge, tol=1e-10, max_iter=MAX_ITER, check_every=10):
    """Minimize ``f(x + y) + (scale/2) kappa(x)^2`` to residual ``tol``.

    Works in signed coordinates ``x = B u + N m`` where the gauge is
    ``||u||_1``; FISTA with gradient restarts, prox by sort and threshold.
    """
    if phi.kind != "Monomial" or phi.alpha != 2.0:
        raise NotImplementedError("reference solver covers phi = xi^2 / 2 only")
    lam = phi.scale
    B, N = _signed_columns(gauge)
    k = B.shape[1]
    M = B if N is None else np.hstack([B, N])
    AM = loss.A @ M
    lip = 2.0 * loss.scale * np.linalg.norm(AM, 2) ** 2
    step = 1.0 / lip
    w = np.ones(k)

    def smooth_grad(v):
        return 2.0 * loss.scale * (AM.T @ (AM @ v - loss.b))

    def prox(v):
        out = v.copy()
        out[:k] = kernels.prox_sq_wl1(np.ascontiguousarray(v[:k]), w, step * lam)
        return out

    def evaluate(v):
        x = B @ v[:k]
        y = recession_minimize(gauge, loss, x)
        z = -loss.grad(x + y)
        kappa = float(np.sum(np.abs(v[:k])))
        nu = gauge.support_value(z)
        res = residual_terms(z, x, y, kappa, 0.0, nu, phi)
        return x, y, z, kappa, res

    v = np.zeros(M.shape[1])
    v_prev = v.copy()
    mom = v.copy()
    tk = 1.0
    res = np.inf
    for it in range(1, max_iter + 1):
        g = smooth_grad(mom)
        v_new = prox(mom - step * g)
        # gradient-based adaptive restart
        if (mom - v_new) @ (v_new - v) > 0:
            tk = 1.0
            mom = v.copy()
            g = smooth_grad(mom)
            v_new = prox(mom - step * g)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        v_prev, v = v, v_new
        mom = v + ((tk - 1.0) / t_next) * (v - v_prev)
        tk = t_next
        if it % check_every == 0:
            x, y, z, kappa, res = evaluate(v)
            if res <= tol:
                break
    else:
        raise MaxIterExceeded("residual %.3e above tol %.1e after %d iterations"
                              % (res, tol, max_iter))
    x, y, z, kappa, res = evaluate(v)
    coeffs = {}
    for j, uj in enumerate(v[:k]):
        if abs(uj) > SUPPORT_TOL:
            coeffs[2 * j + (1 if uj < 0 else 0)] = float(abs(uj))
    support = set(coeffs)
    _, dmin = delta_slacks(z, gauge, support)
    F = loss.value(x + y) + phi.value(kappa)
    return ReferenceSolution(x, y, F, -z, support, dmin, res, coeffs)


# --------------------------------------------------------------------------
# gauges and LMOs by brute force

def _atoms_and_recession(atoms):
    if isinstance(atoms, np.ndarray):
        return atoms, None
    P = np.column_stack([atoms.atom_vector(k) for k in range(atoms.n_atoms)])
    rec = None if atoms.recession is None else atoms.recession[:, None]
    return P, rec


def brute_force_gauge(atoms, x):
    """``min sum c_p  s.t.  sum c_p p (+ K part) = x, c >= 0`` by LP.

    ``atoms`` is an :class:`AtomSet` with finite atoms or a matrix whose
    columns are the atoms.
    """
    P, rec = _atoms_and_recession(atoms)
    x = np.asarray(x, dtype=float)
    n = P.shape[1]
    cost = np.ones(n)
    A_eq = P
    bounds = [(0, None)] * n
    if rec is not None:
        A_eq = np.hstack([P, rec])
        cost = np.concatenate([cost, np.zeros(rec.shape[1])])
        bounds += [(None, None)] * rec.shape[1]
    sol = linprog(cost, A_eq=A_eq, b_eq=x, bounds=bounds, method="highs")
    if sol.status == 2:
        raise ValueError("x is not in the cone of the atoms")
    if not sol.success:
        raise RuntimeError("LP failed: %s" % sol.message)
    return float(sol.fun)


def brute_force_lmo(atom_set, z, weights=None):
    """Enumerate every finite atom; ties go to the lowest id."""
    z = np.asarray(z, dtype=float)
    best, best_val = None, -np.inf
    for k in range(atom_set.n_atoms):
        val = float(atom_set.atom_vector(k) @ z)
        if weights is not None:
            val /= weights[k]
        if val > best_val:
            best, best_val = k, val
    return best, best_val


def brute_force_r(atoms, x, gamma_fn, resolution=200_001):
    """Minimize ``sum gamma(c_p)`` over conic decompositions of ``x`` when the
    atoms have a one-dimensional null space, by a grid along it."""
    P = np.asarray(atoms, dtype=float)
    c0, *_ = np.linalg.lstsq(P, x, rcond=None)
    _, sv, vt = np.linalg.svd(P)
    null = vt[np.sum(sv > 1e-12):]
    if null.shape[0] != 1:
        raise NotImplementedError("grid search needs a 1-D null space")
    n = null[0]
    # feasible interval of t with c0 + t n >= 0
    lo, hi = -np.inf, np.inf
    for ci, ni in zip(c0, n):
        if ni > 0:
            lo = max(lo, -ci / ni)
        elif ni < 0:
            hi = min(hi, -ci / ni)
        elif ci < -1e-12:
            raise ValueError("x is not in the cone of the atoms")
    if lo > hi:
        raise ValueError("x is not in the cone of the atoms")
    ts = np.linspace(lo, hi, resolution)
    C = np.maximum(c0[None, :] + ts[:, None] * n[None, :], 0.0)
    vals = np.sum(gamma_fn(C), axis=1)
    j = int(np.argmin(vals))
    return float(vals[j]), C[j]


def constrained_lp(g, radius=1.0):
    """Minimize ``g^T x`` over the l1 ball; among optimal points return the one
    of least Euclidean norm."""
    g = np.asarray(g, dtype=float)
    d = g.size
    # x = u - v, u, v >= 0, sum(u + v) <= radius
    c = np.concatenate([g, -g])
    A_ub = np.ones((1, 2 * d))
    sol = linprog(c, A_ub=A_ub, b_ub=[radius], bounds=[(0, None)] * (2 * d),
                  method="highs")
    if not sol.success:
        raise RuntimeError("LP failed: %s" % sol.message)
    opt = sol.fun
    cons = [
        {"type": "ineq", "fun": lambda uv: radius - np.sum(uv)},
        {"type": "ineq", "fun": lambda uv: opt + 1e-12 - c @ uv},
    ]
    # strictly convex in (u, v), so the least-norm optimal point is unique
    res = minimize(lambda uv: uv @ uv, sol.x, jac=lambda uv: 2 * uv,
                   bounds=[(0, None)] * (2 * d), constraints=cons,
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    uv = res.x if res.success else sol.x
    return uv[:d] - uv[d:], float(opt)


# --------------------------------------------------------------------------
# conjugates on grids

def conjugate_1d(x, h, nu, chunk=512):
    """``h*(nu) = max_x x nu - h(x)`` over the grid points ``x``."""
    out = np.empty(nu.size)
    finite = np.isfinite(h)
    xs, hs = x[finite], h[finite]
    for i in range(0, nu.size, chunk):
        blk = nu[i:i + chunk]
        out[i:i + chunk] = np.max(blk[:, None] * xs[None, :] - hs[None, :], axis=1)
    return out


def _slope_grid(x, h, resolution):
    slopes = np.diff(h) / np.diff(x)
    slopes = slopes[np.isfinite(slopes)]
    lo, hi = float(np.min(slopes)), float(np.max(slopes))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return np.linspace(lo, hi, resolution)


def grid_biconjugate(h, box=(-10.0, 10.0), resolution=2001, dim=1):
    """Tabulate ``h**`` on a regular grid; returns ``(grid, h_values, h_bi)``.

    ``dim = 2`` conjugates axis by axis (the discrete Legendre transform is
    separable), at cost ``O(resolution^3)``.
    """
    lo, hi = box
    x = np.linspace(lo, hi, resolution)
    if dim == 1:
        hv = np.array([h(xi) for xi in x], dtype=float)
        nu = _slope_grid(x, hv, resolution)
        hs = conjugate_1d(x, hv, nu)
        return x, hv, conjugate_1d(nu, hs, x)
    if dim != 2:
        raise ValueError("grid biconjugate supports dim 1 or 2")
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    hv = np.vectorize(lambda a, b: h(np.array([a, b])))(X1, X2).astype(float)
    span = np.max(np.abs(np.diff(hv, axis=0))) / (x[1] - x[0])
    span = max(span, np.max(np.abs(np.diff(hv, axis=1))) / (x[1] - x[0]), 1.0)
    nu = np.linspace(-span, span, resolution)
    # h*(n1, n2) = max_x1 [n1 x1 + g(x1, n2)], g the x2-conjugate at fixed x1
    g = np.stack([conjugate_1d(x, hv[i], nu) for i in range(resolution)])
    hs = np.stack([conjugate_1d(x, -g[:, j], nu) for j in range(resolution)], axis=1)
    g2 = np.stack([conjugate_1d(nu, hs[i], x) for i in range(resolution)])
    hb = np.stack([conjugate_1d(nu, -g2[:, j], x) for j in range(resolution)], axis=1)
    return (X1, X2), hv, hb


def finite_diff_grad(loss, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (loss.value(x + e) - loss.value(x - e)) / (2 * h)
    return g


def ell1_vertices(d):
    """All sign vectors, for tight l-infinity curvature by enumeration."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
