"""Hot inner loops.

Every kernel exists twice: an explicit-loop version compiled with numba, and
a vectorized numpy version. ``gauge_cgm._jit`` decides which one the rest of
the package sees; both stay importable through ``LOOP`` and ``NUMPY`` so the
benchmark and the tests can compare them.
"""
import numpy as np

from ._jit import HAS_NUMBA, njit


# --------------------------------------------------------------------------
# argmax of scores / weights, lowest index on ties

def _argmax_ratio_loop(scores, weights):
    best = 0
    best_val = scores[0] / weights[0]
    for i in range(1, scores.shape[0]):
        v = scores[i] / weights[i]
        if v > best_val:
            best_val = v
            best = i
    return best, best_val


def _argmax_ratio_np(scores, weights):
    ratio = scores / weights
    k = int(np.argmax(ratio))
    return k, float(ratio[k])


# --------------------------------------------------------------------------
# interleave +u and -u: atom 2j is +p_j, atom 2j+1 is -p_j

def _signed_scores_loop(u):
    out = np.empty(2 * u.shape[0])
    for j in range(u.shape[0]):
        out[2 * j] = u[j]
        out[2 * j + 1] = -u[j]
    return out


def _signed_scores_np(u):
    out = np.empty(2 * u.shape[0])
    out[0::2] = u
    out[1::2] = -u
    return out


# --------------------------------------------------------------------------
# Euclidean norm of z restricted to each group (CSR layout: idx[ptr[k]:ptr[k+1]])

def _group_norms_loop(z, idx, ptr):
    k_groups = ptr.shape[0] - 1
    out = np.empty(k_groups)
    for k in range(k_groups):
        acc = 0.0
        for j in range(ptr[k], ptr[k + 1]):
            acc += z[idx[j]] * z[idx[j]]
        out[k] = np.sqrt(acc)
    return out


def _group_norms_np(z, idx, ptr):
    sq = np.add.reduceat(z[idx] ** 2, ptr[:-1]) if idx.size else np.zeros(0)
    # reduceat misbehaves on empty groups; none are allowed upstream
    return np.sqrt(sq)


# --------------------------------------------------------------------------
# prox of (tau/2) * (sum_i w_i |x_i|)^2

def _prox_sq_wl1_loop(v, w, tau):
    n = v.shape[0]
    ratio = np.abs(v) / w
    order = np.argsort(-ratio)
    num = 0.0
    den = 1.0
    s = 0.0
    for jj in range(n):
        i = order[jj]
        num_try = num + w[i] * abs(v[i])
        den_try = den + tau * w[i] * w[i]
        s_try = num_try / den_try
        if ratio[i] <= tau * s_try:
            break
        num = num_try
        den = den_try
        s = s_try
    out = np.empty(n)
    for i in range(n):
        mag = abs(v[i]) - tau * w[i] * s
        if mag > 0.0:
            out[i] = mag if v[i] >= 0.0 else -mag
        else:
            out[i] = 0.0
    return out


def _prox_sq_wl1_np(v, w, tau):
    ratio = np.abs(v) / w
    order = np.argsort(-ratio, kind="stable")
    aw = (w * np.abs(v))[order]
    w2 = (tau * w * w)[order]
    s_all = np.cumsum(aw) / (1.0 + np.cumsum(w2))
    keep = ratio[order] > tau * s_all
    if not keep.any():
        return np.zeros_like(v)
    # active set is a prefix of the sorted order
    k = int(np.argmin(keep)) if not keep.all() else keep.size
    s = s_all[k - 1]
    return np.sign(v) * np.maximum(np.abs(v) - tau * w * s, 0.0)


# --------------------------------------------------------------------------
# Douglas-Rachford for min sum_k ||v_k||_2  s.t.  sum of duplicated copies = x
# v is the stacked vector of group copies, idx maps each slot to a coordinate.

GAP_EVERY = 16


def _latent_dr_loop(x, idx, ptr, counts, rho, tol, max_iter):
    n_slots = idx.shape[0]
    k_groups = ptr.shape[0] - 1
    d = x.shape[0]
    u = np.zeros(n_slots)
    for j in range(n_slots):
        u[j] = x[idx[j]] / counts[idx[j]]
    v = np.empty(n_slots)
    r = np.empty(n_slots)
    resid = np.empty(d)
    z = np.empty(d)
    it = 0
    while it < max_iter:
        it += 1
        # prox of rho * sum ||.||
        for k in range(k_groups):
            acc = 0.0
            for j in range(ptr[k], ptr[k + 1]):
                acc += u[j] * u[j]
            nrm = np.sqrt(acc)
            scale = 0.0
            if nrm > rho:
                scale = 1.0 - rho / nrm
            for j in range(ptr[k], ptr[k + 1]):
                v[j] = scale * u[j]
        if it % GAP_EVERY == 0:
            # duality gap: projected primal point against the scaled multiplier
            for i in range(d):
                resid[i] = -x[i]
                z[i] = 0.0
            for j in range(n_slots):
                resid[idx[j]] += v[j]
                z[idx[j]] += (u[j] - v[j]) / counts[idx[j]]
            primal = 0.0
            zmax = 0.0
            for k in range(k_groups):
                acc = 0.0
                zacc = 0.0
                for j in range(ptr[k], ptr[k + 1]):
                    pj = v[j] - resid[idx[j]] / counts[idx[j]]
                    acc += pj * pj
                    zacc += z[idx[j]] * z[idx[j]]
                primal += np.sqrt(acc)
                if zacc > zmax:
                    zmax = zacc
            dual = 0.0
            if zmax > 0.0:
                for i in range(d):
                    dual += x[i] * z[i]
                dual /= np.sqrt(zmax)
            if primal - dual <= tol:
                break
        # projection of the reflection onto the affine constraint
        for j in range(n_slots):
            r[j] = 2.0 * v[j] - u[j]
        for i in range(d):
            resid[i] = -x[i]
        for j in range(n_slots):
            resid[idx[j]] += r[j]
        for j in range(n_slots):
            u[j] += r[j] - resid[idx[j]] / counts[idx[j]] - v[j]
    # final feasible point: project the prox output
    for i in range(d):
        resid[i] = -x[i]
    for j in range(n_slots):
        resid[idx[j]] += v[j]
    for j in range(n_slots):
        v[j] -= resid[idx[j]] / counts[idx[j]]
    return v, it


def _latent_dr_np(x, idx, ptr, counts, rho, tol, max_iter):
    d = x.shape[0]
    sizes = np.diff(ptr)
    u = x[idx] / counts[idx]
    v = u.copy()
    it = 0
    while it < max_iter:
        it += 1
        nrm = np.sqrt(np.add.reduceat(u * u, ptr[:-1]))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(nrm > rho, 1.0 - rho / nrm, 0.0)
        v = np.repeat(scale, sizes) * u
        if it % GAP_EVERY == 0:
            resid = np.bincount(idx, weights=v, minlength=d) - x
            p = v - resid[idx] / counts[idx]
            z = np.bincount(idx, weights=(u - v) / counts[idx], minlength=d)
            primal = np.sum(np.sqrt(np.add.reduceat(p * p, ptr[:-1])))
            zmax = np.max(np.add.reduceat(z[idx] ** 2, ptr[:-1]))
            dual = x @ z / np.sqrt(zmax) if zmax > 0 else 0.0
            if primal - dual <= tol:
                break
        r = 2.0 * v - u
        resid = np.bincount(idx, weights=r, minlength=d) - x
        u = u + (r - resid[idx] / counts[idx] - v)
    resid = np.bincount(idx, weights=v, minlength=d) - x
    return v - resid[idx] / counts[idx], it


_NAMES = ("argmax_ratio", "signed_scores", "group_norms", "prox_sq_wl1",
          "latent_dr")

NUMPY = {name: globals()["_%s_np" % name] for name in _NAMES}

if HAS_NUMBA:
    LOOP = {name: njit(cache=True)(globals()["_%s_loop" % name])
            for name in _NAMES}
    ACTIVE = LOOP
else:
    LOOP = {name: globals()["_%s_loop" % name] for name in _NAMES}
    ACTIVE = NUMPY

argmax_ratio = ACTIVE["argmax_ratio"]
signed_scores = ACTIVE["signed_scores"]
group_norms = ACTIVE["group_norms"]
prox_sq_wl1 = ACTIVE["prox_sq_wl1"]
latent_dr = ACTIVE["latent_dr"]
