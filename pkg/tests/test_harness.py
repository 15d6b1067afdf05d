import csv
import io
import math

import numpy as np
import pytest

from gauge_cgm import cli, harness
from gauge_cgm.config import (ExperimentConfig, config_from_kv, expand_grid,
                              load_config, load_grid, parse_groups, parse_kv)
from gauge_cgm.screening import f1_score
from gauge_cgm.transforms import GammaPenalty

SMALL = """\
problem.m = 20
problem.n = 15
problem.sparsity = 3
problem.eta = 0.01
problem.seed = 4
lambda = 0.5
solver.max_iter = 200
"""


def _read(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_sensing_is_deterministic():
    a = harness.gen_sensing(30, 20, 4, 0.1, 7)
    b = harness.gen_sensing(30, 20, 4, 0.1, 7)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b) and a.true_support == b.true_support
    c = harness.gen_sensing(30, 20, 4, 0.1, 8)
    assert not np.array_equal(a.A, c.A)


def test_gen_sensing_shapes_and_noise():
    p = harness.gen_sensing(100, 100, 5, 100.0, 1)
    assert p.A.shape == (100, 100) and p.b.shape == (100,)
    assert np.count_nonzero(p.x0) == 5 and len(p.true_support) == 5
    for k in p.true_support:
        j, neg = divmod(k, 2)
        assert (p.x0[j] < 0) == bool(neg)
    q = harness.gen_sensing(40, 30, 3, 0.0, 2)
    np.testing.assert_array_equal(q.b, q.A @ q.x0)
    with pytest.raises(ValueError):
        harness.gen_sensing(5, 5, 6, 0.0, 0)
    with pytest.raises(ValueError):
        harness.gen_sensing(5, 5, 2, -1.0, 0)


def test_csv_header_and_summary():
    cfg = config_from_kv(parse_kv(SMALL))
    rows = harness.run_experiment(cfg)
    text = harness.rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(harness.CSV_HEADER)
    recs = _read(text)
    assert len(recs) == 201
    assert [int(r["iter"]) for r in recs[:-1]] == list(range(1, 201))
    summary = recs[-1]
    assert summary["status"] == "summary" and summary["iter"] == "0"
    # without screening every atom survives
    assert {r["survivor_count"] for r in recs} == {"30"}
    assert all(float(r["residual"]) >= -1e-9 for r in recs[:-1])


def test_summary_f1_matches_support():
    cfg = config_from_kv(parse_kv(SMALL + "solver.screen = heuristic\nsolver.eps0 = 0.01\n"))
    rows = harness.run_experiment(cfg)
    _, _, _, truth = harness.build(cfg)
    loss, gauge, scfg, _ = harness.build(cfg)
    from gauge_cgm.solver import run
    res = run(scfg, loss)
    assert rows[-1][8] == f1_score(res.screen.cumulative, truth)
    assert rows[-1][9] == len(res.screen.cumulative)
    assert rows[-1][0] == res.screen.last_change


def test_csv_is_byte_identical_across_runs():
    cfg = config_from_kv(parse_kv(SMALL))
    assert harness.rows_to_csv(harness.run_experiment(cfg)) == \
        harness.rows_to_csv(harness.run_experiment(cfg))


def test_record_every_thins_rows():
    cfg = config_from_kv(parse_kv(SMALL + "solver.record_every = 50\n"))
    rows = harness.run_experiment(cfg)
    assert [r[0] for r in rows[:-1]] == [50, 100, 150, 200]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_errors_are_reported_in_status():
    # a tiny lambda blows up the iterates
    cfg = config_from_kv(parse_kv(SMALL.replace("lambda = 0.5", "lambda = 1e-9")
                                  .replace("max_iter = 200", "max_iter = 5000")))
    rows = harness.run_experiment(cfg)
    assert rows[-1][-1].startswith("error: DivergenceError")
    bad = ExperimentConfig(m=5, n=5, sparsity=9)
    rows = harness.run_experiment(bad)
    assert len(rows) == 1 and rows[0][-1].startswith("error: ValueError")


def test_config_parsing():
    kv = parse_kv("# comment\nlambda = 0.1  # trailing\ngamma.kind = LSP\n"
                  "gamma.theta = 2\ngamma.xi_bar = 3\ngauge.kind = LatentGroup\n"
                  "gauge.groups = 1,2;2,3\nproblem.n = 3\n")
    cfg = config_from_kv(kv)
    assert cfg.lam == 0.1 and cfg.groups == [[0, 1], [1, 2]]
    assert cfg.gamma.kind == "LSP" and cfg.gamma.xi_bar == 3.0
    # LSP flattens out, so an unbounded cap is rejected
    with pytest.raises(ValueError):
        config_from_kv(parse_kv("gamma.kind = LSP\ngamma.xi_bar = inf\n"))
    with pytest.raises(ValueError):
        parse_kv("lambda 0.1")
    with pytest.raises(ValueError):
        parse_kv("solver.speed = 3")
    with pytest.raises(ValueError):
        config_from_kv(parse_kv("lambda = 0"))
    assert parse_groups("1 2 3; 4") == [[0, 1, 2], [3]]


def test_config_files_and_matrices(tmp_path):
    np.savetxt(tmp_path / "A.txt", np.eye(2))
    np.savetxt(tmp_path / "b.txt", [2.0, 0.0])
    (tmp_path / "c.cfg").write_text("loss.A = A.txt\nloss.b = b.txt\nlambda = 1\nsolver.max_iter = 3000\n")
    cfg = load_config(tmp_path / "c.cfg")
    assert cfg.A.shape == (2, 2) and cfg.loss_scale is None
    rows = harness.run_experiment(cfg)
    # f = |x - b|^2 / 2 with (1/2)||x||_1^2: optimum (1, 0), objective 1
    assert rows[-1][1] == pytest.approx(1.0, abs=1e-3)
    assert math.isnan(rows[-1][8])
    (tmp_path / "d.cfg").write_text("loss.A = A.txt\n")
    with pytest.raises(ValueError):
        load_config(tmp_path / "d.cfg")


def test_grid_expansion(tmp_path):
    (tmp_path / "g.grid").write_text("gamma.theta = 1, 2.5, 5\ngamma.xi_bar = 0.01, 1\n")
    grid = load_grid(tmp_path / "g.grid")
    cells = expand_grid({"lambda": "1"}, grid)
    assert len(cells) == 6
    assert cells[0][0] == {"gamma.theta": "1", "gamma.xi_bar": "0.01"}
    assert cells[1][0] == {"gamma.theta": "1", "gamma.xi_bar": "1"}
    assert all(kv["lambda"] == "1" for _, kv in cells)


def test_single_cell_sweep_equals_run():
    base = parse_kv(SMALL)
    (params, rows), = harness.sweep(base, [("lambda", ["0.5"])])
    assert params == {"lambda": "0.5"}
    assert harness.rows_to_csv(rows) == harness.rows_to_csv(harness.run_experiment(config_from_kv(base)))


def test_sweep_writes_one_summary_row_per_cell(tmp_path):
    base = parse_kv(SMALL + "gamma.kind = LSP\n")
    grid = [("gamma.theta", ["1", "2.5", "5"]), ("gamma.xi_bar", ["0.01", "1"])]
    results = harness.sweep(base, grid, jobs=2)
    summary = harness.write_sweep(results, tmp_path, base)
    recs = _read(summary.read_text())
    assert len(recs) == 6
    assert list(recs[0])[:2] == ["gamma.theta", "gamma.xi_bar"]
    assert all(r["status"] == "summary" for r in recs)
    names = sorted(p.name for p in tmp_path.glob("run_*.csv"))
    assert len(names) == 6 and all("lambda=0.5" in n for n in names)
    # parallel and serial sweeps agree
    serial = harness.sweep(base, grid, jobs=1)
    assert [harness.rows_to_csv(r) for _, r in serial] == [harness.rows_to_csv(r) for _, r in results]


def test_sweep_keeps_going_after_a_bad_cell(tmp_path):
    base = parse_kv(SMALL)
    results = harness.sweep(base, [("lambda", ["0.5", "-1"])])
    assert results[0][1][-1][-1] == "summary"
    assert results[1][1][-1][-1].startswith("error: ValueError")


def test_experiment_filename_has_lambda():
    cfg = ExperimentConfig(lam=0.25)
    assert harness.experiment_filename(cfg) == "run_lambda=0.25.csv"
    assert harness.experiment_filename(cfg, {"seed": 3}) == "run_lambda=0.25_seed=3.csv"


def test_cli_run_and_sweep(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--max-iter", "50",
                     "--lambda", "0.25", "--screen", "safe"]) == 0
    target = out / "run_lambda=0.25.csv"
    recs = _read(target.read_text())
    assert len(recs) == 51 and recs[-1]["status"] == "summary"

    grid = tmp_path / "g.grid"
    grid.write_text("problem.seed = 1, 2\n")
    assert cli.main(["sweep", "--config", str(cfg), "--grid", str(grid),
                     "--out", str(tmp_path / "sw"), "--max-iter", "20"]) == 0
    recs = _read((tmp_path / "sw" / "summary.csv").read_text())
    assert [r["problem.seed"] for r in recs] == ["1", "2"]
    assert capsys.readouterr().out.strip().endswith("summary.csv")


def test_cli_verify_subset(capsys):
    assert cli.main(["verify", "--only", "8"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_rejects_missing_args():
    with pytest.raises(SystemExit):
        cli.main(["run"])
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", "x", "--screen", "sometimes"])


def test_lsp_gamma_through_config():
    cfg = config_from_kv(parse_kv(SMALL + "gamma.kind = LSP\ngamma.theta = 2.5\ngamma.xi_bar = 0.01\n"))
    assert cfg.gamma == GammaPenalty("LSP", theta=2.5, xi_bar=0.01)
    assert harness.run_experiment(cfg)[-1][-1] == "summary"
