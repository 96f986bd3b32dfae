import csv
import io
import json
import subprocess
import sys

import pytest

from almostsparse.cli import run
from almostsparse.csp import parse_dimacs_cnf
from almostsparse.generate import parse_answer
from almostsparse.graph import format_graph, parse_graph

from conftest import TRIANGLE, random_graph


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code, doc = run(argv, stdout=out, stderr=err)
    return code, doc, out.getvalue(), err.getvalue()


@pytest.fixture
def tri(tmp_path):
    path = tmp_path / "tri.graph"
    path.write_text(format_graph(TRIANGLE))
    return str(path)


def test_maxcut_triangle_ratio_one(tri):
    code, doc, out, _ = call(["maxcut", "--in", tri, "--eps", "0.2", "--mode", "planted", "--oracle", "--seed", "1"])
    assert code == 0
    assert doc["report"]["ratio"] == 1.0
    assert json.loads(out) == doc
    assert doc["schema_version"] == 1 and doc["instance"]["sha256"]


def test_gen_random_ksat(tmp_path):
    path = tmp_path / "f.cnf"
    code, doc, _, _ = call(["gen", "--family", "random-ksat", "--n", "14", "--k", "2", "--delta", "0.5",
                            "--seed", "7", "--out", str(path)])
    assert code == 0 and doc["report"]["count"] == 52
    assert parse_dimacs_cnf(path.read_text()).m == 52


def test_gen_planted_writes_answer(tmp_path):
    path = tmp_path / "p.graph"
    code, doc, _, _ = call(["gen", "--family", "planted-cut", "--n", "10", "--delta", "0.5", "--out", str(path)])
    assert code == 0
    g = parse_graph(path.read_text())
    side = parse_answer((tmp_path / "p.graph.answer").read_text(), g.n)
    assert list(side) == doc["report"]["answer"]
    assert g.cut_value(side) >= 0.8 * g.m


def test_gen_to_stdout():
    code, _, out, _ = call(["gen", "--family", "graph-density", "--n", "16", "--delta", "1"])
    assert code == 0 and parse_graph(out).m == 120


def test_lemmas_smoke():
    code, doc, _, _ = call(["lemmas", "--which", "sampling", "--n", "100", "--trials", "10000", "--seed", "3"])
    assert code == 0
    assert "empirical_rate" in doc["report"]
    assert doc["report"]["empirical_rate"] <= 0.01


def test_csv_output(tri):
    code, _, out, _ = call(["maxcut", "--in", tri, "--oracle", "--format", "csv"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["report.value"] == "2"


def test_out_file(tri, tmp_path):
    dest = tmp_path / "r.json"
    code, _, out, _ = call(["maxcut", "--in", tri, "--out", str(dest)])
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["report"]["value"] == 2


def test_oracle_commands(tmp_path, tri):
    code, doc, _, _ = call(["oracle", "--problem", "maxcut", "--in", tri])
    assert code == 0 and doc["report"]["value"] == 2
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 2 2\n1 2 0\n-1 -2 0\n")
    code, doc, _, _ = call(["oracle", "--problem", "csp", "--in", str(cnf)])
    assert doc["report"]["value"] == 2
    code, doc, _, _ = call(["oracle", "--problem", "kdense", "--k", "2", "--in", tri])
    assert doc["report"]["value"] == 1


def test_scheme_commands(tmp_path):
    poly = tmp_path / "p.poly"
    poly.write_text("p poly 3\n2 1 2\n-1 2 3\n1 1\n")
    # twelve draws cover all three variables, so one assignment is the optimum
    code, doc, _, _ = call(["smooth", "--in", str(poly), "--oracle", "--sample-size", "12"])
    assert code == 0 and doc["report"]["sample_distinct"] == 3
    assert doc["report"]["ratio"] == 1.0
    csp = tmp_path / "c.csp"
    csp.write_text("2 3 2\n1 2 : 6\n2 3 : 9\n")
    code, doc, _, _ = call(["csp", "--in", str(csp), "--oracle"])
    assert code == 0 and doc["report"]["extra"]["satisfied"] == 2
    g = tmp_path / "g.graph"
    g.write_text(format_graph(random_graph(10, 20, 0)))
    code, doc, _, _ = call(["kdense", "--in", str(g), "--k", "4", "--oracle"])
    assert code == 0 and doc["report"]["ratio"] == 1.0


def test_answer_file_drives_planted(tmp_path, tri):
    ans = tmp_path / "a.answer"
    ans.write_text("v 1 -2 -3 0\n")
    code, doc, _, _ = call(["maxcut", "--in", tri, "--answer", str(ans), "--mode", "planted"])
    assert code == 0 and doc["report"]["value"] == 2


def test_reports_are_reproducible(tri):
    argv = ["maxcut", "--in", tri, "--seed", "4", "--sample-size", "2"]
    a, b = call(argv)[1], call(argv + ["--threads", "2"])[1]
    a.pop("timings"), b.pop("timings")
    assert a == b


def test_exit_input_error(tmp_path):
    bad = tmp_path / "bad.cnf"
    bad.write_text("p cnf 2 1\n3 0\n")
    code, _, _, err = call(["csp", "--in", str(bad)])
    assert code == 2 and "line 2" in err
    assert call(["maxcut", "--in", str(tmp_path / "missing")])[0] == 2


def test_exit_configuration_error(tmp_path):
    g = tmp_path / "g.graph"
    g.write_text(format_graph(random_graph(30, 100, 0)))
    code, _, _, err = call(["maxcut", "--in", str(g), "--mode", "exhaustive", "--sample-size", "40", "--cap", "10"])
    assert code == 3 and "configuration" in err


def test_exit_solver_error(tri, monkeypatch):
    from almostsparse import cli
    from almostsparse.errors import SolverError

    def boom(*a, **k):
        raise SolverError("forced")

    monkeypatch.setattr(cli, "approximate_maxcut", boom)
    assert call(["maxcut", "--in", tri])[0] == 4


def test_exit_usage():
    assert call(["maxcut", "--bogus"])[0] == 64
    assert call([])[0] == 64
    assert call(["lemmas", "--which", "other"])[0] == 64


def test_module_entry_point(tri):
    proc = subprocess.run([sys.executable, "-m", "almostsparse", "maxcut", "--in", tri],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["report"]["value"] == 2
