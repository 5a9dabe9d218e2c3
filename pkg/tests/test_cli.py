import json

import numpy as np
import pytest

from lsecond import LseProblem
from lsecond import cli
from lsecond.harness import gen_toeplitz_pair
from lsecond.mmio import read_matrix, read_problem, read_vector, write_matrix, write_problem


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def fixture_dir(tmp_path):
    d = tmp_path / "ident"
    write_problem(d, LseProblem(np.eye(2), np.array([[1.0, 0.0]]), np.array([3.0, 4.0]), np.array([7.0])))
    return d


@pytest.fixture
def random_dir(tmp_path):
    rng = np.random.default_rng(0)
    d = tmp_path / "rand"
    write_problem(d, LseProblem(rng.standard_normal((9, 6)), rng.standard_normal((2, 6)),
                                rng.standard_normal(9), rng.standard_normal(2)))
    return d


def test_mmio_roundtrip(tmp_path):
    M = np.random.default_rng(1).standard_normal((4, 3))
    write_matrix(tmp_path / "M.mtx", M)
    np.testing.assert_array_equal(read_matrix(tmp_path / "M.mtx"), M)
    write_matrix(tmp_path / "v.mtx", M[:, 0])
    np.testing.assert_array_equal(read_vector(tmp_path / "v.mtx"), M[:, 0])
    assert sorted(p.name for p in tmp_path.iterdir()) == ["M.mtx", "v.mtx"]


def test_mmio_coordinate_format(tmp_path):
    (tmp_path / "c.mtx").write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 5.0\n")
    np.testing.assert_array_equal(read_matrix(tmp_path / "c.mtx"), [[0, 5.0], [0, 0]])


def test_json_manifest_bundle(tmp_path, fixture_dir):
    man = tmp_path / "problem.json"
    man.write_text(json.dumps({"A": "ident/A.mtx", "B": "ident/B.mtx", "b": "ident/b.mtx",
                               "d": "ident/d.mtx"}))
    p = read_problem(man)
    assert (p.m, p.n, p.s) == (2, 2, 1)


def test_solve_identity(capsys, fixture_dir, tmp_path):
    code, out, _ = run(capsys, "solve", fixture_dir, "--out", tmp_path / "o")
    assert code == 0
    np.testing.assert_allclose(read_vector(tmp_path / "o" / "x.mtx"), [7.0, 4.0], atol=1e-14)
    np.testing.assert_allclose(read_vector(tmp_path / "o" / "r.mtx"), [-4.0, 0.0], atol=1e-14)
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["manifest"]["command"] == "solve"
    assert json.loads(out)["n"] == 2


def test_missing_file_exit_2(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", tmp_path / "nope")
    assert code == 2 and json.loads(out)["error"]["kind"] == "io"
    (tmp_path / "broken").mkdir()
    (tmp_path / "broken" / "A.mtx").write_text("garbage\n")
    (tmp_path / "broken" / "b.mtx").write_text("garbage\n")
    code, out, _ = run(capsys, "cond", tmp_path / "broken")
    assert code == 2 and json.loads(out)["error"]["kind"] == "io"


def test_rank_deficient_exit_3(capsys, tmp_path):
    d = tmp_path / "rd"
    write_problem(d, LseProblem(np.eye(2), np.array([[1.0, 0.0], [2.0, 0.0]]), np.ones(2), np.ones(2)))
    code, out, _ = run(capsys, "solve", d, "--out", tmp_path / "o")
    assert code == 3 and json.loads(out)["error"]["kind"] == "assumptions"


def test_bad_flags_exit_5(capsys, fixture_dir):
    assert run(capsys, "cond", fixture_dir, "--method", "nope")[0] == 5
    assert run(capsys, "cond", fixture_dir, "--weights", "1,2")[0] == 5
    assert run(capsys, "cond", fixture_dir, "--L", "e9")[0] == 5
    code, out, _ = run(capsys, "frobnicate")
    assert code == 5 and json.loads(out)["error"]["kind"] == "flags"
    assert run(capsys, "bench", "--experiment", "ratio", "--trials", "0")[0] == 5


def test_cond_routes_agree(capsys, random_dir):
    vals = {}
    for method in ("kron", "closed", "gsvd"):
        code, out, _ = run(capsys, "cond", random_dir, "--method", method)
        assert code == 0
        vals[method] = json.loads(out)["kappa"]
    assert abs(vals["closed"] - vals["gsvd"]) <= 1e-9 * vals["closed"]
    assert abs(vals["kron"] - vals["gsvd"]) <= 1e-9 * vals["closed"]


def test_exact_alias_and_weights_default(capsys, fixture_dir):
    a = json.loads(run(capsys, "exact", fixture_dir, "--method", "closed")[1])
    b = json.loads(run(capsys, "cond", fixture_dir, "--method", "closed", "--weights", "1,1,1,1")[1])
    assert a["kappa"] == b["kappa"]
    e1 = json.loads(run(capsys, "cond", fixture_dir, "--L", "e1")[1])
    assert e1["kappa"] <= a["kappa"]


def test_L_from_file(capsys, random_dir, tmp_path):
    write_matrix(tmp_path / "L.mtx", np.eye(6)[:, :1])
    f = json.loads(run(capsys, "cond", random_dir, "--L", tmp_path / "L.mtx")[1])
    e = json.loads(run(capsys, "cond", random_dir, "--L", "e1")[1])
    assert f["kappa"] == pytest.approx(e["kappa"], rel=1e-14)


def test_upper_and_lls_methods(capsys, fixture_dir, tmp_path):
    code, out, _ = run(capsys, "cond", fixture_dir, "--method", "upper")
    assert code == 0 and json.loads(out)["kappa_upper"] > 0
    assert run(capsys, "cond", fixture_dir, "--method", "lls")[0] == 5
    d = tmp_path / "lls"
    rng = np.random.default_rng(2)
    write_problem(d, LseProblem.lls(rng.standard_normal((7, 3)), rng.standard_normal(7)))
    a = json.loads(run(capsys, "cond", d, "--method", "lls")[1])["kappa"]
    b = json.loads(run(capsys, "cond", d, "--method", "lls_svd")[1])["kappa"]
    assert a == pytest.approx(b, rel=1e-10)


def test_structured_command(capsys, tmp_path):
    d = tmp_path / "toep"
    write_problem(d, gen_toeplitz_pair(8, 1.0, seed=1).problem)
    code, out, _ = run(capsys, "structured", d, "--struct-a", "toeplitz", "--struct-b", "toeplitz",
                       "--exact")
    rep = json.loads(out)
    assert code == 0 and rep["struct_a"] == "toeplitz" and rep["ratio"] >= 1 - 1e-12
    code, out, _ = run(capsys, "structured", d, "--struct-a", "hankel")
    assert code == 3 and json.loads(out)["error"]["kind"] == "structure"


def test_estimate_deterministic(capsys, random_dir, tmp_path):
    for method in ("pce", "ssce"):
        a = run(capsys, "estimate", random_dir, "--method", method, "--seed", 5, "--exact")[1]
        b = run(capsys, "estimate", random_dir, "--method", method, "--seed", 5, "--exact")[1]
        assert a == b
        rep = json.loads(a)
        assert rep["manifest"]["seed"] == 5 and rep["ratio"] > 0
    rep = json.loads(run(capsys, "estimate", random_dir, "--seed", 1)[1])
    assert rep["converged"] and rep["eps"] == 0.001 and rep["delta"] == 0.01
    assert rep["interval"][0] <= rep["kappa_hat"] <= rep["interval"][1]
    assert json.loads(run(capsys, "estimate", random_dir, "--method", "ssce", "--seed", 1)[1])["q"] == 2


def test_estimate_generates_seed(capsys, random_dir):
    code, out, err = run(capsys, "estimate", random_dir, "--method", "ssce")
    seed = json.loads(out)["manifest"]["seed"]
    assert code == 0 and f"seed: {seed}" in err


def test_estimate_non_convergence_exit_4(capsys, random_dir, monkeypatch):
    from lsecond.estimators import pce_estimate as real

    monkeypatch.setattr(cli, "estimate_condition_pce",
                        lambda *a, **k: real(np.diag([1.0, 2.0, 3.0]), 1e-3, 1e-9, 0, max_dim=1))
    code, out, _ = run(capsys, "estimate", random_dir, "--seed", 0)
    assert code == 4 and '"converged": false' in out


def test_bench_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", "--experiment", "table1", "--trials", 1, "--seed", 0,
                       "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "table1.csv").read_text().splitlines()
    assert len(lines) == 1 + 9 * 3 * 2
    assert json.loads((tmp_path / "table1.manifest.json").read_text())["seed"] == 0
    run(capsys, "bench", "--experiment", "dimsweep", "--trials", 1, "--seed", 0, "--out", tmp_path)
    assert len((tmp_path / "dimsweep.csv").read_text().splitlines()) == 12
    run(capsys, "bench", "--experiment", "ratio", "--n", 6, "--trials", 3, "--seed", 0,
        "--out", tmp_path)
    assert len((tmp_path / "ratio_n6.csv").read_text().splitlines()) == 1 + 3 * 3


def test_bench_byte_identical(capsys, tmp_path):
    for sub in ("a", "b"):
        run(capsys, "bench", "--experiment", "ratio", "--n", 6, "--trials", 4, "--seed", 9,
            "--out", tmp_path / sub)
    assert (tmp_path / "a" / "ratio_n6.csv").read_bytes() == (tmp_path / "b" / "ratio_n6.csv").read_bytes()
