import csv
import io
import json
import subprocess
import sys

from qrepbench import analytic, cli

TWO_ROUTE = """\
vertices 8
v a1 T
v b1 T
v a2 T
v b2 T
v x1 R
v x2 R
v y1 R
v y2 R
e a1 x1
e x1 b1
e a1 y1
e y1 b1
e a2 x1
e x1 b2
e a2 y2
e y2 b2
e x1 x2
e y1 y2
d a1 b1
d a2 b2
"""

STAR = "vertices 5\nv hub R\n" + "".join(f"v t{i} T\ne t{i} hub\n" for i in range(4))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestFidelity:
    def test_default_shape(self, capsys):
        code, out, _ = run(capsys, "fidelity")
        assert code == 0
        data = rows(out)
        assert len(data) == 2 * 5 * 11
        assert list(data[0]) == ["scheme", "F0", "n", "fidelity"]

    def test_twelve_digits(self, capsys):
        _, out, _ = run(capsys, "fidelity", "--f0", "0.51", "--n", "1", "--scheme", "purification")
        assert rows(out)[1]["fidelity"] == "0.519992003199"

    def test_threshold(self, capsys):
        code, _, err = run(capsys, "fidelity", "--f0", "0.5", "--scheme", "purification")
        assert code == 2 and "0.5" in err

    def test_unit_fidelity(self, capsys):
        code, out, _ = run(capsys, "fidelity", "--f0", "1.0", "--n", "3")
        assert code == 0
        assert {r["fidelity"] for r in rows(out)} == {"1"}

    def test_json(self, capsys):
        _, out, _ = run(capsys, "fidelity", "--f0", "0.6", "--n", "2", "--format", "json", "--scheme", "ecc")
        data = json.loads(out)
        assert [d["n"] for d in data] == [0, 1, 2]

    def test_out_file(self, capsys, tmp_path):
        f = tmp_path / "fid.csv"
        assert run(capsys, "fidelity", "--out", str(f))[0] == 0
        assert len(rows(f.read_text())) == 110


class TestConfig:
    def test_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"f0": [0.7], "n": 4, "scheme": "ecc"}))
        _, out, _ = run(capsys, "fidelity", "--config", str(cfg))
        assert len(rows(out)) == 5
        _, out, _ = run(capsys, "fidelity", "--config", str(cfg), "--n", "1")
        assert len(rows(out)) == 2

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"f0": [0.7], "color": "red"}))
        code, _, err = run(capsys, "fidelity", "--config", str(cfg))
        assert code == 2 and "color" in err

    def test_bad_json(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{nope")
        assert run(capsys, "fidelity", "--config", str(cfg))[0] == 2

    def test_bad_flag(self, capsys):
        assert run(capsys, "fidelity", "--bogus")[0] == 2
        assert run(capsys)[0] == 2
        assert run(capsys, "fidelity", "--scheme", "surface")[0] == 2


class TestIterationsAndResources:
    def test_iterations(self, capsys):
        _, out, _ = run(capsys, "iterations", "--f0", "0.51", "--targets", "0.99")
        got = {r["scheme"]: int(r["n"]) for r in rows(out)}
        assert got == {"purification": 7, "ecc": 3}

    def test_resources_final_rows(self, capsys):
        code, out, _ = run(capsys, "resources", "--ell", "4")
        assert code == 0
        data = rows(out)
        last = {r["scheme"]: r for r in data}
        assert (last["purification"]["n"], last["purification"]["qubits"], last["purification"]["operations"]) == ("7", "1024", "147")
        assert (last["ecc"]["n"], last["ecc"]["qubits"], last["ecc"]["operations"]) == ("3", "729", "12")

    def test_resources_ell1(self, capsys):
        _, out, _ = run(capsys, "resources", "--ell", "1", "--scheme", "purification")
        assert {r["operations"] for r in rows(out)} == {"0"}

    def test_overflow_exit(self, capsys):
        code, _, err = run(capsys, "resources", "--ell", "700", "--scheme", "ecc")
        assert code == 1 and "n=1" in err and "ell=700" in err


class TestVerify:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0
        data = rows(out)
        assert len(data) >= 5
        assert all(float(r["max_deviation"]) < 1e-12 for r in data)

    def test_corrupt_formula(self, capsys, monkeypatch):
        monkeypatch.setattr(analytic, "purified_pair_fidelity", lambda p: (1 - p) ** 2)
        code, out, err = run(capsys, "verify")
        assert code == 1
        assert "purification_fidelity" in err
        bad = [r for r in rows(out) if r["passed"] == "False"]
        assert [r["check"] for r in bad] == ["purification_fidelity"]


class TestGridsim:
    def test_requires_seed(self, capsys, tmp_path):
        assert run(capsys, "gridsim", "--out", str(tmp_path))[0] == 2

    def test_byte_identical(self, capsys, tmp_path):
        args = ["gridsim", "--seed", "4", "--k-min", "10", "--k-max", "12", "--runs", "5"]
        assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
        assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
        for name in ("runs_purification.csv", "runs_ecc.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        summary = json.loads((tmp_path / "a" / "summary.json").read_text())
        assert len(summary) == 6
        assert {"crossing_bound", "mean_crossings"} <= set(summary[0])

    def test_zero_activation(self, capsys, tmp_path):
        run(capsys, "gridsim", "--seed", "1", "--k-min", "3", "--k-max", "3", "--runs", "1",
            "--p", "0", "--scheme", "ecc", "--out", str(tmp_path))
        (row,) = rows((tmp_path / "runs_ecc.csv").read_text())
        assert all(row[c] == "0" for c in ("active", "reversals", "congestion", "ell", "qubits", "ops"))

    def test_invalid_range(self, capsys, tmp_path):
        assert run(capsys, "gridsim", "--seed", "1", "--k-min", "9", "--k-max", "3", "--out", str(tmp_path))[0] == 2


class TestCapacity:
    def test_two_route(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text(TWO_ROUTE)
        code, out, _ = run(capsys, "capacity", str(f), "--format", "json")
        assert code == 0
        assert json.loads(out) == {"shortest_path": 2, "heuristic": 1, "brute_force": 1}

    def test_star(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text(STAR)
        _, out, _ = run(capsys, "capacity", str(f))
        assert {r["method"]: r["capacity"] for r in rows(out)} == {
            "shortest_path": "6", "heuristic": "6", "brute_force": "6"}

    def test_malformed(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("vertices 2\nv a T\nv b Q\n")
        code, _, err = run(capsys, "capacity", str(f))
        assert code == 2 and "line 3" in err

    def test_no_repeater_path(self, capsys, tmp_path):
        f = tmp_path / "g.txt"
        f.write_text("vertices 5\nv t1 T\nv r1 R\nv t2 T\nv r2 R\nv t3 T\ne t1 r1\ne r1 t2\ne t2 r2\ne r2 t3\n")
        assert run(capsys, "capacity", str(f))[0] == 1

    def test_missing_graph(self, capsys):
        assert run(capsys, "capacity")[0] == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qrepbench", "iterations", "--f0", "0.9", "--targets", "0.99"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("scheme,F0,target,n")
