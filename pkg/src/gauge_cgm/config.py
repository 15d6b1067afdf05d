"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` are comments. Recognised keys::

    phi.kind phi.alpha phi.C phi.beta
    gamma.kind gamma.theta gamma.lambda gamma.q gamma.xi_bar
    gauge.kind gauge.groups gauge.map
    loss.A loss.b loss.scale
    problem.m problem.n problem.sparsity problem.eta problem.seed
    solver.max_iter solver.screen solver.eps0 solver.record_every
    lambda

``gauge.groups`` lists 1-based index groups separated by ``;`` (``1,2;2,3``).
``gauge.map``, ``loss.A`` and ``loss.b`` name whitespace-separated text files,
resolved relative to the config file. Without ``loss.A`` a sensing problem is
generated from the ``problem.*`` keys.

A grid file uses the same syntax with comma-separated value lists.
"""
from dataclasses import dataclass, field, replace
import itertools
import math
from pathlib import Path

import numpy as np

from .transforms import GammaPenalty, PhiPenalty

KNOWN_KEYS = {
    "phi.kind", "phi.alpha", "phi.C", "phi.beta",
    "gamma.kind", "gamma.theta", "gamma.lambda", "gamma.q", "gamma.xi_bar",
    "gauge.kind", "gauge.groups", "gauge.map",
    "loss.A", "loss.b", "loss.scale",
    "problem.m", "problem.n", "problem.sparsity", "problem.eta", "problem.seed",
    "solver.max_iter", "solver.screen", "solver.eps0", "solver.record_every",
    "lambda",
}


def parse_kv(text):
    """Parse ``key = value`` lines into an ordered dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("line %d: expected 'key = value'" % lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ValueError("line %d: unknown key %r" % (lineno, key))
        out[key] = value
    return out


def _float(s):
    return math.inf if s.lower() in ("inf", "+inf") else float(s)


def parse_groups(s):
    groups = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if chunk:
            groups.append([int(v) - 1 for v in chunk.replace(",", " ").split()])
    return groups


@dataclass
class ExperimentConfig:
    m: int = 100
    n: int = 100
    sparsity: int = 5
    eta: float = 100.0
    seed: int = 1
    lam: float = 1e-5
    phi: PhiPenalty = field(default_factory=PhiPenalty)
    gamma: GammaPenalty = field(default_factory=GammaPenalty)
    gauge_kind: str = "SignedBasis"
    groups: list | None = None
    map_matrix: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    loss_scale: float | None = None
    max_iter: int = 1000
    screen: str = "off"
    eps0: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _phi_from(kv):
    kind = kv.get("phi.kind", "Monomial")
    args = {"kind": kind}
    if "phi.alpha" in kv:
        args["alpha"] = float(kv["phi.alpha"])
    if "phi.C" in kv:
        args["C"] = float(kv["phi.C"])
    if "phi.beta" in kv:
        args["beta"] = float(kv["phi.beta"])
    return PhiPenalty(**args)


def _gamma_from(kv):
    args = {"kind": kv.get("gamma.kind", "Identity")}
    for key, name in (("gamma.theta", "theta"), ("gamma.lambda", "lam"),
                      ("gamma.q", "q"), ("gamma.xi_bar", "xi_bar")):
        if key in kv:
            args[name] = _float(kv[key])
    return GammaPenalty(**args)


def config_from_kv(kv, base_dir="."):
    base_dir = Path(base_dir)

    def load(key):
        return np.loadtxt(base_dir / kv[key], ndmin=1) if key in kv else None

    cfg = ExperimentConfig(
        phi=_phi_from(kv), gamma=_gamma_from(kv),
        gauge_kind=kv.get("gauge.kind", "SignedBasis"),
        groups=parse_groups(kv["gauge.groups"]) if "gauge.groups" in kv else None,
        map_matrix=None, A=None, b=None,
        loss_scale=float(kv["loss.scale"]) if "loss.scale" in kv else None,
        lam=float(kv.get("lambda", 1e-5)),
        max_iter=int(kv.get("solver.max_iter", 1000)),
        screen=kv.get("solver.screen", "off"),
        eps0=float(kv.get("solver.eps0", 0.0)),
        record_every=int(kv.get("solver.record_every", 1)),
        m=int(kv.get("problem.m", 100)), n=int(kv.get("problem.n", 100)),
        sparsity=int(kv.get("problem.sparsity", 5)),
        eta=float(kv.get("problem.eta", 100.0)),
        seed=int(kv.get("problem.seed", 1)),
    )
    if "gauge.map" in kv:
        cfg.map_matrix = np.atleast_2d(load("gauge.map"))
    if "loss.A" in kv:
        cfg.A = np.atleast_2d(load("loss.A"))
        if "loss.b" not in kv:
            raise ValueError("loss.A given without loss.b")
        cfg.b = load("loss.b")
    return cfg


def load_config(path):
    path = Path(path)
    return config_from_kv(parse_kv(path.read_text()), path.parent)


def load_grid(path):
    """Grid file: ``key = v1, v2, ...``; returns a list of (key, values)."""
    kv = parse_kv(Path(path).read_text())
    return [(k, [v.strip() for v in vals.split(",") if v.strip()])
            for k, vals in kv.items()]


def expand_grid(base_kv, grid):
    """Cartesian product of the grid over a base key-value map, in order."""
    keys = [k for k, _ in grid]
    cells = []
    for combo in itertools.product(*(vals for _, vals in grid)):
        kv = dict(base_kv)
        kv.update(zip(keys, combo))
        cells.append((dict(zip(keys, combo)), kv))
    return cells
