import os
import subprocess
import sys

import pytest

from shtukalab import catalog, cli

INPUTS = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "inputs")


def _inp(name):
    return os.path.join(INPUTS, name)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_dm_decompose_table(capsys):
    code, out, _ = run(capsys, "--machine", "sigma", "dm-decompose", "--matrix",
                       _inp("standard_1_2.yaml"))
    assert code == 0
    assert _kv(out)["summands"] == "(1,2)×1"


def test_session_flags_after_subcommand(capsys):
    code, out, _ = run(capsys, "sigma", "dm-decompose", "--matrix", _inp("standard_1_2.yaml"),
                       "--machine")
    assert code == 0 and "summands=(1,2)×1" in out


def test_machine_output_is_deterministic(capsys):
    argv = ["--machine", "--seed", "3", "period", "demo", "--example", "8.1", "--n", "2",
            "--count", "6"]
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a[0] == b[0] == 0 and a[1] == b[1]
    assert _kv(a[1])["status"] == "PASS"


def test_hodge_pink_commands(capsys):
    code, out, _ = run(capsys, "--machine", "hp", "weights", _inp("tate_hp.yaml"))
    kv = _kv(out)
    assert code == 0 and kv["weights"] == "[1]" and kv["pair_degrees"] == "[-1, 0]"
    code, out, _ = run(capsys, "--machine", "hp", "check-wa", _inp("twisted_line_hp.yaml"))
    kv = _kv(out)
    assert code == 0 and kv["WA"] == "No" and kv["witness_verified"] == "True"


def test_classify_family_point(capsys):
    code, out, _ = run(capsys, "--machine", "period", "classify", "--b", _inp("scalar_b.yaml"),
                       "--weights=-2,0", "--point", _inp("family_point.yaml"))
    kv = _kv(out)
    assert code == 0 and kv["WA"] == "No" and kv["Adm"] == "No"
    code, out, _ = run(capsys, "--machine", "period", "classify", "--b", _inp("scalar_b.yaml"),
                       "--weights=-2,0", "--point", _inp("chart_point.yaml"))
    kv = _kv(out)
    assert code == 0 and kv["WA"] == "Yes" and kv["Adm"] == "Yes"


def test_rigidify_tate(capsys):
    code, out, _ = run(capsys, "--machine", "shtuka", "rigidify", _inp("tate_shtuka.yaml"))
    kv = _kv(out)
    assert code == 0 and kv["t_power"] == "-1" and kv["relation_holds"] == "True"


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "sigma", "newton", "--matrix", _inp("standard_1_2.yaml"), "--nope")[0] == 2
    assert run(capsys, "--q", "6", "field", "info")[0] == 2
    assert run(capsys, "period", "demo", "--example", "8.2", "--d", "5")[0] == 2
    assert run(capsys, "sigma", "newton", "--matrix", "/nonexistent.yaml")[0] == 2


def test_missing_gamma_exits_2(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("q: 2\nphi: [['z']]\nshift: 0\n")
    code, _, err = run(capsys, "hp", "weights", str(p))
    assert code == 2 and "error" in err


def test_precision_exits_3_with_certificate(capsys):
    code, out, _ = run(capsys, "series", "jet", "z + O(z^2)", "--jet", "4")
    assert code == 3
    assert out.startswith("certificate=InsufficientPrecision")


def test_demo_mismatch_exits_1(capsys, monkeypatch):
    real = catalog.run_demo

    def broken(*a, **k):
        res = real(*a, **k)
        res.rows[0].expected = ("No", "No")
        return res

    monkeypatch.setattr(catalog, "run_demo", broken)
    code, out, _ = run(capsys, "--machine", "period", "demo", "--example", "8.1", "--count", "3")
    assert code == 1 and _kv(out)["status"] == "FAIL"


def test_out_file(capsys, tmp_path):
    p = tmp_path / "r.txt"
    code, out, _ = run(capsys, "--machine", "--out", str(p), "polygon", "sum", "1/2^2",
                       "0^1 + 1^1")
    assert code == 0
    assert "=" in p.read_text()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "shtukalab", "--machine", "field", "info",
                        "--q", "4"], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and "q=4" in r.stdout


@pytest.mark.parametrize("example,extra", [("8.3", ["--d", "2", "--levels", "1"])])
def test_demo_small_grid(capsys, example, extra):
    code, out, _ = run(capsys, "--machine", "period", "demo", "--example", example, *extra)
    assert code == 0 and _kv(out)["mismatches"] == "0"
