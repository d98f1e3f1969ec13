import csv
import io
import json
import subprocess
import sys

import pytest

from tangentmap.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestChardirs:
    def test_f(self, capsys):
        code, out, _ = run(capsys, "chardirs", "--family", "f")
        assert code == EXIT_OK
        rows = json.loads(out)
        dirs = {tuple(r["direction"]): r for r in rows}
        assert set(dirs) == {(1, 0, 0, 0), (0, 0, 1, 0), (1, 0, 1, 0)}
        assert dirs[(1, 0, 0, 0)]["director"] == [-2, 0]
        assert dirs[(0, 0, 1, 0)]["director"] == [-2, 0]
        assert dirs[(1, 0, 1, 0)]["director"] is None

    def test_ftilde(self, capsys):
        code, out, _ = run(capsys, "chardirs", "--family", "ftilde")
        degenerate = [r["direction"] for r in json.loads(out) if r["degenerate"]]
        assert code == EXIT_OK and degenerate == [[1, 0, 0, 0]]

    def test_identity(self, capsys):
        code, _, err = run(capsys, "chardirs", "--map", "(z,w)")
        assert code == EXIT_USAGE and "identity" in err

    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "chardirs", "--map", "(z + * w, w)")
        assert code == EXIT_USAGE and err.startswith("tangentmap chardirs:")

    def test_needs_exactly_one_source(self, capsys):
        assert run(capsys, "chardirs")[0] == EXIT_USAGE
        assert run(capsys, "chardirs", "--family", "f", "--map", "(z+z^2,w)")[0] == EXIT_USAGE

    def test_dicritical(self, capsys):
        code, out, _ = run(capsys, "chardirs", "--map", "(z - z^2, w - z*w)")
        assert code == EXIT_OK and json.loads(out) == {"dicritical": True}

    def test_degreewise(self, capsys):
        code, out, _ = run(capsys, "chardirs", "--family", "g", "--a", "1", "--r", "3", "--degreewise")
        assert code == EXIT_OK
        assert all("degreewise" in r for r in json.loads(out))

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "dirs.json"
        code, out, _ = run(capsys, "chardirs", "--family", "f", "--out", str(path))
        assert code == EXIT_OK and out == ""
        assert len(json.loads(path.read_text())) == 3


class TestOrbit:
    def test_line(self, capsys):
        code, out, _ = run(capsys, "orbit", "--family", "f", "--start", "0.3,0.2")
        assert code == EXIT_OK
        assert json.loads(out)["class"] == "ConvergesToLineNotOrigin"

    def test_fixed(self, capsys):
        code, out, _ = run(capsys, "orbit", "--family", "f", "--start", "0.25,0.25")
        res = json.loads(out)
        assert res["class"] == "ConvergesToLineNotOrigin" and res["iterations_used"] == 1

    def test_trace_to_stdout(self, capsys):
        code, out, err = run(capsys, "orbit", "--family", "f", "--start", "0.3,0.2", "--steps", "5",
                             "--trace", "-")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][:5] == ["n", "re_z", "im_z", "re_w", "im_w"]
        assert len(rows) == 7
        assert json.loads(err)["class"] == "ConvergesToLineNotOrigin"

    def test_diagnostics_columns(self, capsys):
        code, out, _ = run(capsys, "orbit", "--family", "h", "--a", "0.1", "--start", "0.05,0.05",
                           "--diagnostics", "--steps", "20")
        header = out.splitlines()[0].split(",")
        assert code == EXIT_OK
        assert {"re_u", "re_v", "re_t"} <= set(header)

    def test_complex_start(self, capsys):
        code, out, _ = run(capsys, "orbit", "--family", "f", "--start", "0.3+0.1i,0.2")
        assert code == EXIT_OK and json.loads(out)["class"] in ("ConvergesToLineNotOrigin",
                                                                "ConvergesToOrigin", "Escapes",
                                                                "Indeterminate")

    def test_bad_start(self, capsys):
        assert run(capsys, "orbit", "--family", "f", "--start", "0.3")[0] == EXIT_USAGE


class TestRender:
    def test_one_pixel(self, capsys, tmp_path):
        ppm = tmp_path / "a.ppm"
        code, out, _ = run(capsys, "render", "--family", "f", "--window", "0.3,0.2,0.01,0.01",
                           "--px", "1,1", "--out", str(ppm), "--stats", "-")
        assert code == EXIT_OK
        data = ppm.read_bytes()
        assert data.startswith(b"P6\n1 1\n255\n") and len(data) == 14
        assert out.splitlines()[0] == "class,count,fraction"
        assert "line,1,1" in out

    def test_threads_identical(self, capsys, tmp_path):
        outs = []
        for t in ("1", "8"):
            ppm = tmp_path / f"t{t}.ppm"
            run(capsys, "render", "--family", "f", "--px", "64,64", "--threads", t, "--out", str(ppm))
            outs.append(ppm.read_bytes())
        assert outs[0] == outs[1]

    def test_probes(self, capsys, tmp_path):
        code, out, _ = run(capsys, "render", "--family", "f", "--px", "30,30", "--out",
                           str(tmp_path / "p.ppm"), "--probe", "0.3,0.2", "--probe", "0.5,0")
        rows = json.loads(out)
        assert code == EXIT_OK
        assert [r["class"] for r in rows] == ["ConvergesToLineNotOrigin", "ConvergesToOrigin"]

    def test_stats_and_probes_conflict(self, capsys, tmp_path):
        code, _, _ = run(capsys, "render", "--family", "f", "--px", "2,2", "--out",
                         str(tmp_path / "x.ppm"), "--stats", "-", "--probe", "0.3,0.2")
        assert code == EXIT_USAGE

    def test_bad_window(self, capsys, tmp_path):
        code, _, _ = run(capsys, "render", "--family", "f", "--window", "0,0,0,1",
                         "--out", str(tmp_path / "x.ppm"))
        assert code == EXIT_USAGE


class TestVerify:
    def test_e1_pass(self, capsys):
        code, out, err = run(capsys, "verify", "--experiment", "E1", "--samples", "1000")
        assert code == EXIT_OK and json.loads(out)["verdict"] == "pass"
        assert "E1 pass" in err

    def test_e6_rejected(self, capsys):
        assert run(capsys, "verify", "--experiment", "E6", "--a", "1", "--r", "2")[0] == EXIT_USAGE

    def test_e8_evidence(self, capsys):
        code, out, _ = run(capsys, "verify", "--experiment", "E8", "--samples", "50",
                           "--horizon", "500")
        assert code == EXIT_OK and json.loads(out)["verdict"] == "evidence"

    def test_flag_not_taken(self, capsys):
        assert run(capsys, "verify", "--experiment", "E2", "--family", "f")[0] == EXIT_USAGE

    def test_unknown(self, capsys):
        assert run(capsys, "verify", "--experiment", "E12")[0] == EXIT_USAGE

    def test_seed_determinism(self, capsys):
        a = run(capsys, "verify", "--experiment", "E2", "--seed", "7", "--samples", "20",
                "--horizon", "500")[1]
        b = run(capsys, "verify", "--experiment", "E2", "--seed", "7", "--samples", "20",
                "--horizon", "500")[1]
        assert a == b and json.loads(a)["seed"] == 7


class TestFmt:
    def test_family(self, capsys):
        code, out, _ = run(capsys, "fmt", "--family", "ftilde")
        assert code == EXIT_OK and out.strip() == "(x - y^2, y - x*y)"

    def test_canonicalises(self, capsys):
        code, out, _ = run(capsys, "fmt", "--map", "(z*(1-(z-w)), w*(1+(z-w)))")
        assert out.strip() == "(z - z^2 + z*w, w + z*w - w^2)"


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["nonsense"])
    assert err.value.code == EXIT_USAGE


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tangentmap.cli", "fmt", "--family", "f"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "(z - z^2 + z*w, w + z*w - w^2)"


def test_exit_fail_constant():
    assert (EXIT_OK, EXIT_FAIL, EXIT_USAGE) == (0, 1, 2)
