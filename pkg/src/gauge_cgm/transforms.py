"""Scalar transforms: the convex outer penalty phi and the concave
coefficient transform gamma.

Both are immutable. ``PhiPenalty`` maps an aggregate size to a penalty and
knows its conjugate and the maximizer map ``(phi*)'``; ``GammaPenalty``
applies the piecewise-affine extension above ``xi_bar`` so that its slope
stays inside ``[gamma_min, gamma_max]``.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

PHI_KINDS = ("Monomial", "LogBarrier")
GAMMA_KINDS = ("Identity", "LSP", "SCAD", "MCP", "Fractional")

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


class ConvergenceWarning(UserWarning):
    """phi is outside the regime where convergence is guaranteed."""


def _check_nonneg(value, name):
    if np.any(np.asarray(value) < 0):
        raise ValueError("%s must be nonnegative, got %r" % (name, value))


@dataclass(frozen=True)
class PhiPenalty:
    """Convex, increasing ``phi: R+ -> R+`` with ``phi(0) = 0``.

    ``scale`` multiplies the whole penalty (the regularization weight); the
    conjugate is then ``scale * phi*(nu / scale)``.
    """
    kind: str = "Monomial"
    alpha: float = 2.0
    C: float = 1.0
    beta: float = 1.0
    scale: float = 1.0
    mu_phi: float = field(init=False)
    phi0: float = field(init=False)
    xi0: float = field(init=False)

    def __post_init__(self):
        if self.kind not in PHI_KINDS:
            raise ValueError("unknown phi kind %r" % (self.kind,))
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "Monomial":
            if self.alpha <= 1:
                raise ValueError(
                    "Monomial phi needs alpha > 1; alpha = 1 makes the "
                    "conjugate an indicator and the method does not converge")
            mu, phi0, xi0 = _monomial_curvature(self.alpha)
        else:
            if not (self.C > 0 and self.beta > 0):
                raise ValueError("LogBarrier needs C > 0 and beta > 0")
            # phi = +inf beyond C, so any mu works; this one is certified
            # with phi0 = 1/2 and (phi*)' < C
            mu, phi0, xi0 = 1.0 / (2.0 * self.C ** 2), 0.5, self.C
        object.__setattr__(self, "mu_phi", self.scale * mu)
        object.__setattr__(self, "phi0", self.scale * phi0)
        object.__setattr__(self, "xi0", xi0)

    @property
    def asymptotically_quadratic(self):
        return self.kind == "LogBarrier" or self.alpha >= 2

    def warn_if_unsupported(self):
        if not self.asymptotically_quadratic:
            warnings.warn(
                "Monomial phi with alpha=%g < 2 has no quadratic lower bound; "
                "iterates may diverge" % self.alpha, ConvergenceWarning,
                stacklevel=3)

    # -- values -----------------------------------------------------------

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        _check_nonneg(xi, "xi")
        if self.kind == "Monomial":
            out = xi ** self.alpha / self.alpha
        else:
            C, beta = self.C, self.beta
            with np.errstate(divide="ignore", invalid="ignore"):
                inside = (-np.log(C - xi) - xi / C + math.log(C)) / beta
            out = np.where(xi < C, inside, np.inf)
        return self.scale * out if out.ndim else float(self.scale * out)

    def deriv(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.kind == "Monomial":
            out = xi ** (self.alpha - 1)
        else:
            C, beta = self.C, self.beta
            with np.errstate(divide="ignore"):
                out = np.where(xi < C, xi / (beta * C * (C - xi)), np.inf)
        return self.scale * out if out.ndim else float(self.scale * out)

    def conj(self, nu):
        nu = np.asarray(nu, dtype=float)
        _check_nonneg(nu, "nu")
        u = nu / self.scale
        if self.kind == "Monomial":
            b = self.alpha / (self.alpha - 1.0)
            out = u ** b / b
        else:
            C, beta = self.C, self.beta
            out = C * u - np.log1p(C * beta * u) / beta
        return self.scale * out if out.ndim else float(self.scale * out)

    def conj_deriv(self, nu):
        """Maximizer of ``xi * nu - phi(xi)`` over ``xi >= 0``."""
        nu = np.asarray(nu, dtype=float)
        _check_nonneg(nu, "nu")
        u = nu / self.scale
        if self.kind == "Monomial":
            out = u ** (1.0 / (self.alpha - 1.0))
        else:
            C, beta = self.C, self.beta
            out = C * C * beta * u / (C * beta * u + 1.0)
        return out if out.ndim else float(out)

    def conj_deriv_bisect(self, nu, tol=BISECT_TOL, max_iter=BISECT_MAX_ITER):
        """Generic fallback: solve ``phi'(xi) = nu`` by bisection."""
        _check_nonneg(nu, "nu")
        if nu == 0.0:
            return 0.0
        lo = 0.0
        hi = 1.0
        if self.kind == "LogBarrier":
            hi = self.C
        else:
            while self.deriv(hi) < nu:
                hi *= 2.0
                if hi > 1e300:
                    raise RuntimeError("bisection could not bracket phi' = %g"
                                       % nu)
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if self.deriv(mid) < nu:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        return 0.5 * (lo + hi)

    def to_config(self):
        out = {"phi.kind": self.kind}
        if self.kind == "Monomial":
            out["phi.alpha"] = self.alpha
        else:
            out["phi.C"] = self.C
            out["phi.beta"] = self.beta
        return out


def _monomial_curvature(alpha):
    """Return (mu, phi0, xi0) with phi >= mu xi^2 - phi0 and
    (phi*)'(nu) <= nu/mu + xi0, for phi = xi^alpha / alpha."""
    if alpha == 2.0:
        return 0.5, 0.0, 0.0
    if alpha < 2.0:
        return 0.0, math.inf, math.inf
    # anchor xi_c = 1: mu = phi(1) / 2
    mu = 1.0 / (2.0 * alpha)
    xi_m = alpha ** (-1.0 / (alpha - 2.0))
    phi0 = max(0.0, -(xi_m ** alpha / alpha - mu * xi_m ** 2))
    q = 1.0 / (alpha - 1.0)
    nu_star = (q * mu) ** (1.0 / (1.0 - q))
    xi0 = max(0.0, nu_star ** q - nu_star / mu)
    return mu, phi0, xi0


# ==========================================================================

@dataclass(frozen=True)
class GammaPenalty:
    """Concave increasing ``gamma`` with ``gamma(0) = 0``.

    Above ``xi_bar`` the base penalty is replaced by its tangent line, which
    pins the smallest slope to ``gamma0'(xi_bar) > 0``.
    """
    kind: str = "Identity"
    theta: float = 1.0
    lam: float = 1.0
    q: float = 0.5
    xi_bar: float = math.inf
    gamma_min: float = field(init=False)
    gamma_max: float = field(init=False)

    def __post_init__(self):
        if self.kind not in GAMMA_KINDS:
            raise ValueError("unknown gamma kind %r" % (self.kind,))
        if self.kind == "Identity":
            object.__setattr__(self, "gamma_min", 1.0)
            object.__setattr__(self, "gamma_max", 1.0)
            return
        if not (math.isfinite(self.xi_bar) and self.xi_bar > 0):
            raise ValueError(
                "%s has vanishing slope at infinity; a finite xi_bar > 0 is "
                "required" % self.kind)
        if self.kind == "LSP" and not self.theta > 0:
            raise ValueError("LSP needs theta > 0")
        if self.kind == "SCAD":
            if not self.theta > 2 or not self.lam > 0:
                raise ValueError("SCAD needs theta > 2 and lambda > 0")
            if self.xi_bar >= self.theta * self.lam:
                raise ValueError("SCAD is flat beyond theta*lambda; "
                                 "xi_bar must be smaller")
        if self.kind == "MCP":
            if not self.theta > 0 or not self.lam > 0:
                raise ValueError("MCP needs theta > 0 and lambda > 0")
            if self.xi_bar >= self.theta * self.lam:
                raise ValueError("MCP is flat beyond theta*lambda; "
                                 "xi_bar must be smaller")
        if self.kind == "Fractional" and not 0 < self.q < 1:
            raise ValueError("Fractional needs 0 < q < 1")
        object.__setattr__(self, "gamma_min", float(self._base_deriv(self.xi_bar)))
        object.__setattr__(self, "gamma_max", float(self._base_deriv(0.0)))

    @property
    def is_identity(self):
        return self.kind == "Identity"

    # -- base penalties (valid on [0, xi_bar]) -----------------------------

    def _base(self, c):
        k = self.kind
        if k == "LSP":
            return np.log1p(c / self.theta)
        if k == "SCAD":
            lam, th = self.lam, self.theta
            mid = (-c * c + 2 * th * lam * c - lam * lam) / (2 * (th - 1))
            return np.where(c <= lam, lam * c,
                            np.where(c <= th * lam, mid, (th + 1) * lam * lam / 2))
        if k == "MCP":
            lam, th = self.lam, self.theta
            return np.where(c <= th * lam, lam * c - c * c / (2 * th),
                            th * lam * lam / 2)
        if k == "Fractional":
            return c ** self.q / self.q
        return c

    def _base_deriv(self, c):
        k = self.kind
        c = np.asarray(c, dtype=float)
        if k == "LSP":
            return 1.0 / (self.theta + c)
        if k == "SCAD":
            lam, th = self.lam, self.theta
            return np.where(c <= lam, lam,
                            np.where(c <= th * lam, (th * lam - c) / (th - 1), 0.0))
        if k == "MCP":
            return np.maximum(self.lam - c / self.theta, 0.0)
        if k == "Fractional":
            with np.errstate(divide="ignore"):
                return np.where(c > 0, c ** (self.q - 1.0), np.inf)
        return np.ones_like(c)

    # -- public ------------------------------------------------------------

    def value(self, c):
        c = np.asarray(c, dtype=float)
        _check_nonneg(c, "c")
        if self.is_identity:
            out = c.copy()
        else:
            xb = self.xi_bar
            head = self._base(np.minimum(c, xb))
            tail = self.gamma_min * np.maximum(c - xb, 0.0)
            out = head + tail
        return out if out.ndim else float(out)

    def deriv(self, c):
        """``gamma'(c)``; at ``c = 0`` this is the right limit ``gamma_max``."""
        c = np.asarray(c, dtype=float)
        _check_nonneg(c, "c")
        if self.is_identity:
            out = np.ones_like(c)
        else:
            out = np.where(c <= self.xi_bar, self._base_deriv(c), self.gamma_min)
        return out if out.ndim else float(out)

    def to_config(self):
        out = {"gamma.kind": self.kind}
        if self.kind in ("LSP", "SCAD", "MCP"):
            out["gamma.theta"] = self.theta
        if self.kind in ("SCAD", "MCP"):
            out["gamma.lambda"] = self.lam
        if self.kind == "Fractional":
            out["gamma.q"] = self.q
        if not self.is_identity:
            out["gamma.xi_bar"] = self.xi_bar
        return out


IDENTITY = GammaPenalty()


def phi_eval(phi, xi):
    return phi.value(xi)


def phi_conj(phi, nu):
    return phi.conj(nu)


def phi_conj_deriv(phi, nu):
    return phi.conj_deriv(nu)


def gamma_eval(gamma, c):
    return gamma.value(c)


def gamma_deriv(gamma, c):
    return gamma.deriv(c)
