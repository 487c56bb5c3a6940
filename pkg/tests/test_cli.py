import csv
import io
import json
from pathlib import Path

import jsonschema
import pytest

from cphdae import cli

ROOT = Path(__file__).resolve().parents[1]
NETS = ROOT / "circuits"
SCHEMA = json.loads((ROOT / "src" / "cphdae" / "schemas" / "analyze.schema.json").read_text())


def run(*argv):
    out = io.StringIO()
    code = cli.main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def test_analyze_running_example_json():
    code, text = run("analyze", NETS / "running_example.net", "--tree", "V,C1,R,L1", "--json")
    assert code == 0
    rep = json.loads(text)
    jsonschema.validate(rep, SCHEMA)
    assert rep["F"] == [[1, -1, 0, 0], [-1, 0, 1, 0], [-1, 1, 1, 1], [0, -1, 0, -1]]
    assert rep["dof"] == 2
    assert rep["structural_index"] == 1
    assert rep["amenable"] is True


@pytest.mark.parametrize("name", ["running_example", "diode_clipper", "lc_loop", "rc_loop", "vr_loop"])
def test_analyze_reports_validate_against_schema(name):
    code, text = run("analyze", NETS / f"{name}.net", "--json")
    assert code == 0
    jsonschema.validate(json.loads(text), SCHEMA)


def test_analyze_is_deterministic():
    a = run("analyze", NETS / "running_example.net", "--json")
    b = run("analyze", NETS / "running_example.net", "--json")
    assert a == b


def test_parallel_sources_exit_2(capsys):
    code, _ = run("analyze", NETS / "parallel_sources.net")
    assert code == 2
    assert "VoltageCycle" in capsys.readouterr().err


def test_non_normal_tree_exit_3(capsys):
    code, _ = run("analyze", NETS / "running_example.net", "--tree", "V,R,L1,L2")
    assert code == 3
    assert "NotNormal" in capsys.readouterr().err


def test_syntax_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text("edge V V 1 2 1\nedge R R 1 2 {(1+}\n")
    code, _ = run("analyze", bad)
    assert code == 65
    assert f"{bad}:2:" in capsys.readouterr().err


def test_tree_command_both_algorithms():
    for algo in ("kruskal", "rref"):
        code, text = run("tree", NETS / "running_example.net", "--algorithm", algo, "--json")
        assert code == 0
        rep = json.loads(text)
        assert sorted(rep["twig_counts"].values()) == [1, 1, 1, 1]
        assert list(rep["ranks"].values()) == [1, 2, 3, 4]


def test_simulate_running_example_columns(tmp_path):
    path = tmp_path / "run.csv"
    code, summary = run("simulate", NETS / "running_example.net", "--tree", "V,C1,R,L1",
                        "--t1", "0.01", "--rtol", "1e-4", "--guess", "1", "--out", path)
    assert code == 0 and "steps:" in summary
    rows = list(csv.reader(path.open()))
    xs = ["q_C2", "q_C1", "phi_L1", "phi_L2", "i_R", "v_G"]
    assert rows[0] == ["t", *xs, *[f"d_{n}" for n in xs], "i_V", "v_I", "H", "balance"]
    assert len(rows) > 2
    # full double precision survives the round trip
    assert all(len(r) == len(rows[0]) for r in rows)
    assert float(rows[1][0]) == 0.0


def test_simulate_diode_has_voltmeter_column(tmp_path):
    path = tmp_path / "diode.csv"
    code, _ = run("simulate", NETS / "diode_clipper.net", "--t1", "0.002", "--rtol", "1e-5",
                  "--guess", "0", "--out", path)
    assert code == 0
    header = next(csv.reader(path.open()))
    assert "v_I" in header and "i_V" in header


def test_simulate_is_deterministic(tmp_path):
    texts = []
    for k in range(2):
        path = tmp_path / f"rc{k}.csv"
        run("simulate", NETS / "rc_loop.net", "--t1", "0.5", "--out", path)
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]


@pytest.mark.parametrize("t1", ["0", "-1"])
def test_simulate_bad_interval_is_usage_error(t1):
    code, _ = run("simulate", NETS / "rc_loop.net", "--t1", t1)
    assert code == 64


def test_eig_running_example():
    code, text = run("eig", NETS / "running_example.net", "--json")
    assert code == 0
    rep = json.loads(text)
    assert rep["dof"] == 2 and rep["degree"] == 2
    ims = sorted(z["im"] for z in rep["eigenvalues"])
    assert ims[0] < 0 < ims[1]


def test_eig_diode_is_not_lti(capsys):
    code, _ = run("eig", NETS / "diode_clipper.net")
    assert code == 1
    assert "NotLTI" in capsys.readouterr().err


def test_reduce_running_example():
    code, text = run("reduce", NETS / "running_example.net", "--tree", "V,C1,R,L1", "--json")
    assert code == 0
    rep = json.loads(text)
    assert rep["ode_variables"] == ["q_C1", "phi_L2"]
    assert rep["dimension"] == 2 and rep["dae_size"] == 6


def test_random_same_seed_is_byte_identical():
    a = run("random", "--nodes", 9, "--edges", 15, "--seed", 4)
    b = run("random", "--nodes", 9, "--edges", 15, "--seed", 4)
    assert a[0] == 0 and a == b
    assert run("random", "--nodes", 9, "--edges", 15, "--seed", 5)[1] != a[1]


def test_random_circuit_analyzes_end_to_end(tmp_path):
    path = tmp_path / "r.net"
    assert run("random", "--nodes", 9, "--edges", 15, "--seed", 4, "--out", path)[0] == 0
    code, text = run("analyze", path, "--json")
    assert code == 0
    rep = json.loads(text)
    assert len(rep["tree"]) == 8 and len(rep["cotree"]) == 7


def test_random_too_few_edges_is_usage_error():
    assert run("random", "--nodes", 9, "--edges", 7)[0] == 64


def test_unknown_flag_is_usage_error():
    assert run("analyze", NETS / "rc_loop.net", "--bogus")[0] == 64


def test_verify_running_example():
    code, text = run("verify", NETS / "running_example.net")
    assert code == 0
    assert text.count("[PASS]") == 4
