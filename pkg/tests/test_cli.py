import subprocess
import sys

import numpy as np
import pytest

from blocksvd.cli import main
from blocksvd.metrics import parse_eval_csv
from blocksvd.pipeline import read_block_record
from blocksvd.repair import RepairReport
from blocksvd.sparse import SparseMatrix, load_matrix_market, save_matrix_market


@pytest.fixture
def mtx(tmp_path):
    path = tmp_path / "a.mtx"
    assert main(["synth", "--rows", "64", "--cols", "8192", "--density", "0.002", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_synth_prints_pinned_nnz(tmp_path, capsys):
    path = tmp_path / "a.mtx"
    main(["synth", "--rows", "64", "--cols", "8192", "--density", "0.002", "--seed", "7", "--out", str(path)])
    assert capsys.readouterr().out.strip() == "1046"
    assert load_matrix_market(path).nnz == 1046


def test_synth_byte_identical(tmp_path):
    for name in ("x.mtx", "y.mtx"):
        main(["synth", "--rows", "10", "--cols", "50", "--density", "0.1", "--seed", "3", "--out", str(tmp_path / name)])
    assert (tmp_path / "x.mtx").read_bytes() == (tmp_path / "y.mtx").read_bytes()


def test_synth_zero_density_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--rows", "4", "--cols", "4", "--density", "0", "--seed", "1", "--out", str(tmp_path / "z.mtx")])
    assert exc.value.code == 2


def test_svd_writes_outputs(mtx, tmp_path):
    out = tmp_path / "run"
    code = main(["svd", "--in", str(mtx), "--blocks", "8", "--method", "neighbor-random", "--seed", "7",
                 "--out-dir", str(out)])
    assert code == 0
    sigma = [float(x) for x in (out / "sigma.txt").read_text().split()]
    assert len(sigma) == 64 and sigma == sorted(sigma, reverse=True)
    u = read_block_record(out / "u.rec")
    assert (u.m, u.k) == (64, 64)
    np.testing.assert_allclose(u.payload.T @ u.payload, np.eye(64), atol=1e-10)
    report = RepairReport.from_log((out / "repair.log").read_text())
    assert len(report.lonely_counts) == 8 and report.added_edges


def test_svd_zero_blocks_is_usage_error(mtx):
    with pytest.raises(SystemExit) as exc:
        main(["svd", "--in", str(mtx), "--blocks", "0", "--seed", "1"])
    assert exc.value.code == 2


def test_svd_too_many_blocks_is_runtime_error(tmp_path, capsys):
    path = tmp_path / "s.mtx"
    save_matrix_market(SparseMatrix.from_entries((2, 3), [(0, 0, 1.0)]), path)
    assert main(["svd", "--in", str(path), "--blocks", "4", "--seed", "1", "--out-dir", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_svd_requires_exactly_one_input(mtx):
    with pytest.raises(SystemExit) as exc:
        main(["svd", "--in", str(mtx), "--rows", "3", "--blocks", "2", "--seed", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["svd", "--blocks", "2", "--seed", "1"])
    assert exc.value.code == 2


def test_svd_method_none_completes(mtx, tmp_path):
    out = tmp_path / "none"
    assert main(["svd", "--in", str(mtx), "--blocks", "8", "--method", "none", "--seed", "7",
                 "--out-dir", str(out)]) == 0
    report = RepairReport.from_log((out / "repair.log").read_text())
    assert report.added_edges == [] and sum(report.lonely_counts) > 0


def test_evaluate_sweep(mtx, tmp_path):
    out = tmp_path / "eval.csv"
    assert main(["evaluate", "--in", str(mtx), "--blocks", "2", "4", "8", "16", "--method", "neighbor-random",
                 "--seed", "7", "--out", str(out)]) == 0
    rows = parse_eval_csv(out.read_text())
    assert [r.blocks for r in rows] == [2, 4, 8, 16]
    assert [r.ni for r in rows] == [4096, 2048, 1024, 512]
    assert all(r.e_sigma <= 1e-9 for r in rows)


def test_evaluate_dense_none(tmp_path, capsys):
    path = tmp_path / "d.mtx"
    save_matrix_market(SparseMatrix.from_dense(np.random.default_rng(2).random((6, 48)) + 0.5), path)
    assert main(["evaluate", "--in", str(path), "--blocks", "1", "2", "3", "8", "--seed", "0"]) == 0
    rows = parse_eval_csv(capsys.readouterr().out)
    assert len(rows) == 4
    assert all(r.e_sigma <= 1e-10 * 30 for r in rows)


def test_evaluate_empty_sweep(mtx, capsys):
    assert main(["evaluate", "--in", str(mtx), "--seed", "0"]) == 0
    assert capsys.readouterr().out == "D,M,Ni,method,seed,e_sigma,e_u\n"


def test_evaluate_synth_input(capsys):
    assert main(["evaluate", "--rows", "16", "--cols", "512", "--density", "0.01", "--blocks", "4",
                 "--method", "random", "--seed", "3"]) == 0
    (row,) = parse_eval_csv(capsys.readouterr().out)
    assert row.e_sigma <= 1e-10


def test_evaluate_oracle_cap(capsys):
    code = main(["evaluate", "--rows", "512", "--cols", "262144", "--density", "0.0000001", "--blocks", "2",
                 "--seed", "1"])
    assert code == 1
    assert "desk-scale" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "blocksvd", "synth", "--rows", "3", "--cols", "9", "--density", "1", "--seed", "0",
         "--out", str(tmp_path / "m.mtx")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "27"
