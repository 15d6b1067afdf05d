"""Smooth convex losses and gauge-relative smoothness constants."""
from dataclasses import dataclass

import numpy as np

from .atoms import AtomSet

POWER_MAX_ITER = 200
POWER_RTOL = 1e-12


class QuadraticLoss:
    """``f(x) = scale * ||A x - b||^2``."""

    def __init__(self, A, b, scale=0.5):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A has %d rows but b has %d entries"
                             % (self.A.shape[0], self.b.shape[0]))
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)

    @property
    def dim(self):
        return self.A.shape[1]

    def value(self, x):
        r = self.A @ x - self.b
        return self.scale * float(r @ r)

    def grad(self, x):
        return 2.0 * self.scale * (self.A.T @ (self.A @ x - self.b))

    def value_and_grad(self, x):
        r = self.A @ x - self.b
        return self.scale * float(r @ r), 2.0 * self.scale * (self.A.T @ r)

    def conj(self, g):
        """``f*(g)``; finite only for ``g`` in the range of ``A^T``."""
        # f*(g) = sup_x g^T x - f(x); at a maximizer 2 s A^T(Ax - b) = g
        rhs = g + 2.0 * self.scale * (self.A.T @ self.b)
        x, *_ = np.linalg.lstsq(2.0 * self.scale * (self.A.T @ self.A), rhs, rcond=None)
        return float(g @ x - self.value(x))

    def line_minimize(self, x, direction):
        """``argmin_c f(x + c * direction)``; 0 when the direction is flat."""
        Ad = self.A @ direction
        denom = float(Ad @ Ad)
        # rounding alone leaves |A d|^2 around eps^2 |A|^2 |d|^2
        if denom <= 1e-24 * float(np.sum(self.A * self.A)) * float(direction @ direction):
            return 0.0
        return float(Ad @ (self.b - self.A @ x)) / denom


def loss_eval(loss, x):
    return loss.value(x)


def loss_grad(loss, x):
    return loss.grad(x)


@dataclass(frozen=True)
class SmoothnessCertificate:
    gauge_kind: str
    L: float


def spectral_norm_sq(M, max_iter=POWER_MAX_ITER, rtol=POWER_RTOL):
    """Largest eigenvalue of ``M^T M`` by power iteration."""
    M = np.asarray(M, dtype=float)
    v = np.ones(M.shape[1]) / np.sqrt(M.shape[1])
    # a deterministic start orthogonal to the top eigenvector would stall
    v = v + 1e-3 * np.sin(np.arange(1, M.shape[1] + 1))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    # Rayleigh quotient at the final vector
    Mv = M @ v
    return max(lam, float(Mv @ Mv))


def smoothness_constant(loss, gauge):
    """``L`` such that ``f(x) - f(y) <= grad f(y)^T (x-y) + L/2 kappa(x-y)^2``.

    ``gauge`` is one of ``"l1"``, ``"l2"``, ``"linf"`` or an :class:`AtomSet`.
    """
    A = loss.A
    c = 2.0 * loss.scale
    if isinstance(gauge, AtomSet):
        kind = gauge.kind
        if kind == "SignedBasis":
            return SmoothnessCertificate(kind, smoothness_constant(loss, "l1").L)
        if kind == "MappedBasis":
            AP = A @ gauge.map_matrix
            return SmoothnessCertificate(kind, c * float(np.max(np.sum(AP * AP, axis=0))))
        if kind == "TotalVariation":
            AB = A @ gauge.steps()
            return SmoothnessCertificate(kind, c * float(np.max(np.sum(AB * AB, axis=0))))
        if kind == "LatentGroup":
            L = max(spectral_norm_sq(A[:, g]) for g in gauge.groups)
            return SmoothnessCertificate(kind, c * L)
        raise ValueError("unsupported gauge kind %r" % (kind,))
    col = np.sqrt(np.sum(A * A, axis=0))
    if gauge == "l1":
        return SmoothnessCertificate("l1", c * float(np.max(col)) ** 2)
    if gauge == "l2":
        return SmoothnessCertificate("l2", c * spectral_norm_sq(A))
    if gauge == "linf":
        return SmoothnessCertificate("linf", c * float(np.sum(col)) ** 2)
    raise ValueError("unsupported gauge kind %r" % (gauge,))


def gauge_of(gauge, v):
    """Gauge named by a certificate, evaluated at ``v``."""
    if isinstance(gauge, AtomSet):
        return gauge.gauge_value(v)
    if gauge == "l1":
        return float(np.sum(np.abs(v)))
    if gauge == "l2":
        return float(np.linalg.norm(v))
    if gauge == "linf":
        return float(np.max(np.abs(v)))
    raise ValueError("unsupported gauge kind %r" % (gauge,))


def dual_of(gauge, z):
    """Symmetrized support function matching :func:`gauge_of`."""
    if isinstance(gauge, AtomSet):
        return gauge.support_sym(z)
    if gauge == "l1":
        return float(np.max(np.abs(z)))
    if gauge == "l2":
        return float(np.linalg.norm(z))
    if gauge == "linf":
        return float(np.sum(np.abs(z)))
    raise ValueError("unsupported gauge kind %r" % (gauge,))
