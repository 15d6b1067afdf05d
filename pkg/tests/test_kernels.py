import os
import subprocess
import sys

import numpy as np
import pytest

from gauge_cgm import backend, kernels
from gauge_cgm.atoms import LatentGroup


def test_backend_reports_numba_when_available():
    pytest.importorskip("numba")
    if os.environ.get("GAUGE_CGM_DISABLE_NUMBA"):
        pytest.skip("numba disabled by the environment")
    assert backend() == "numba"
    assert kernels.ACTIVE is kernels.LOOP


def test_argmax_ratio_agrees():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 50))
        s = np.round(rng.standard_normal(n), 1)      # rounding forces ties
        w = rng.choice([0.5, 1.0, 2.0], n)
        assert kernels.LOOP["argmax_ratio"](s, w) == kernels.NUMPY["argmax_ratio"](s, w)
    k, val = kernels.NUMPY["argmax_ratio"](np.array([1.0, 2.0, 2.0]), np.ones(3))
    assert (k, val) == (1, 2.0)


def test_signed_scores_agree():
    u = np.random.default_rng(1).standard_normal(37)
    a, b = kernels.LOOP["signed_scores"](u), kernels.NUMPY["signed_scores"](u)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[0::2], u)
    np.testing.assert_array_equal(a[1::2], -u)


def test_group_norms_agree():
    rng = np.random.default_rng(2)
    lg = LatentGroup(30, [rng.choice(30, int(rng.integers(1, 6)), replace=False) for _ in range(12)])
    z = rng.standard_normal(30)
    a = kernels.LOOP["group_norms"](z, lg.idx, lg.ptr)
    b = kernels.NUMPY["group_norms"](z, lg.idx, lg.ptr)
    np.testing.assert_allclose(a, b, rtol=1e-14)
    np.testing.assert_allclose(a, [np.linalg.norm(z[g]) for g in lg.groups], rtol=1e-14)


def _prox_objective(x, v, w, tau):
    return 0.5 * np.sum((x - v) ** 2) + 0.5 * tau * np.sum(w * np.abs(x)) ** 2


def test_prox_agrees_and_is_optimal():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 20))
        v, w, tau = rng.standard_normal(n), rng.uniform(0.2, 2.0, n), float(rng.uniform(0, 3))
        a = kernels.LOOP["prox_sq_wl1"](v, w, tau)
        b = kernels.NUMPY["prox_sq_wl1"](v, w, tau)
        np.testing.assert_allclose(a, b, atol=1e-13)
        best = _prox_objective(a, v, w, tau)
        for _ in range(20):
            y = a + 1e-3 * rng.standard_normal(n)
            assert best <= _prox_objective(y, v, w, tau) + 1e-12


def test_latent_dr_agrees():
    rng = np.random.default_rng(4)
    lg = LatentGroup(12, [[0, 1, 2], [2, 3, 4], [4, 5, 6, 7], [7, 8, 9, 10, 11], [0, 11]])
    x = rng.standard_normal(12)
    counts = np.maximum(lg.counts, 1.0)
    rho = float(np.max(np.abs(x)))
    va, ia = kernels.LOOP["latent_dr"](x, lg.idx, lg.ptr, counts, rho, 1e-10, 5000)
    vb, ib = kernels.NUMPY["latent_dr"](x, lg.idx, lg.ptr, counts, rho, 1e-10, 5000)
    assert ia == ib
    np.testing.assert_allclose(va, vb, atol=1e-9)
    # both outputs satisfy the sum constraint
    np.testing.assert_allclose(np.bincount(lg.idx, weights=va, minlength=12), x, atol=1e-12)


SCRIPT = """
import numpy as np
from gauge_cgm import backend
from gauge_cgm.config import ExperimentConfig
from gauge_cgm.harness import rows_to_csv, run_experiment
cfg = ExperimentConfig(m=30, n=40, sparsity=4, eta=0.01, seed=3, lam=0.1,
                       max_iter=300, screen="safe")
print(backend())
print(rows_to_csv(run_experiment(cfg)))
"""


def _run_script(disable):
    env = dict(os.environ)
    env.pop("GAUGE_CGM_DISABLE_NUMBA", None)
    if disable:
        env["GAUGE_CGM_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, check=True,
                         capture_output=True, text=True).stdout
    name, _, csv_text = out.partition("\n")
    return name, csv_text


def test_env_flag_selects_numpy_with_matching_results():
    pytest.importorskip("numba")
    name_np, csv_np = _run_script(True)
    name_jit, csv_jit = _run_script(False)
    assert (name_np, name_jit) == ("numpy", "numba")
    rows_np = [line.split(",") for line in csv_np.strip().splitlines()[1:]]
    rows_jit = [line.split(",") for line in csv_jit.strip().splitlines()[1:]]
    assert len(rows_np) == len(rows_jit)
    for a, b in zip(rows_np, rows_jit):
        assert a[4] == b[4] and a[-1] == b[-1]          # same atoms, same status
        np.testing.assert_allclose(float(a[1]), float(b[1]), rtol=1e-9)
