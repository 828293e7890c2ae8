import csv
import io as stdio
import subprocess
import sys

import numpy as np
import pytest

from squeeze.cli import BENCH_HEADER, main
from squeeze.grid import to_expanded
from squeeze.io import read_pgm, read_snapshot


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_expanded(tmp_path, capsys):
    path = tmp_path / "t.pgm"
    assert run_cli(capsys, "generate", "--fractal", "sierpinski-triangle", "--level", "3", "--out", str(path))[0] == 0
    img = read_pgm(path)
    assert img.shape == (8, 8) and (img == 0).sum() == 27 and set(np.unique(img)) == {0, 255}


def test_generate_compact(tmp_path, capsys):
    path = tmp_path / "c.pgm"
    run_cli(capsys, "generate", "--fractal", "sierpinski-triangle", "--level", "3", "--form", "compact", "--out", str(path))
    img = read_pgm(path)
    assert img.shape == (9, 3) and (img == 0).all()


def test_generate_vicsek(tmp_path, capsys):
    path = tmp_path / "v.pgm"
    run_cli(capsys, "generate", "--fractal", "vicsek", "--level", "2", "--out", str(path))
    img = read_pgm(path)
    assert img.shape == (9, 9) and (img == 0).sum() == 25


def test_generate_io_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "generate", "--fractal", "vicsek", "--level", "1",
                           "--out", str(tmp_path / "missing" / "x.pgm"))
    assert code == 2 and "missing" in err


@pytest.mark.parametrize(
    "argv, out, code",
    [
        (["--level", "1", "--direction", "c2e", "--coord", "0,2"], "1,1", 0),
        (["--level", "1", "--direction", "e2c", "--coord", "1,0"], "HOLE", 2),
        (["--level", "5", "--direction", "c2e", "--coord", "0,0"], "0,0", 0),
        (["--level", "2", "--direction", "e2c", "--coord", "2,3"], "2,1", 0),
        (["--level", "4", "--direction", "c2e", "--coord", "2,1", "--block", "4"], "2,3", 0),
    ],
)
def test_map(capsys, argv, out, code):
    got, stdout, _ = run_cli(capsys, "map", "--fractal", "sierpinski-triangle", *argv)
    assert got == code and stdout.strip() == out


def test_map_errors(capsys):
    assert run_cli(capsys, "map", "--fractal", "koch", "--level", "1", "--direction", "c2e", "--coord", "0,0")[0] == 1
    assert run_cli(capsys, "map", "--fractal", "vicsek", "--level", "1", "--direction", "c2e", "--coord", "0")[0] == 1
    assert run_cli(capsys, "map", "--fractal", "vicsek", "--level", "1", "--direction", "c2e", "--coord", "9,0")[0] == 2


def test_map_custom_spec_file(tmp_path, capsys):
    path = tmp_path / "corners.txt"
    path.write_text("name = corners\nk = 4\ns = 3\noffset 0 0 0\noffset 1 2 0\noffset 2 0 2\noffset 3 2 2\n")
    code, out, _ = run_cli(capsys, "map", "--fractal", str(path), "--level", "1", "--direction", "c2e", "--coord", "0,3")
    assert code == 0 and out.strip() == "2,2"


def test_simulate_zero_steps(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "simulate", "--level", "4", "--steps", "0", "--out-dir", str(tmp_path))
    assert code == 0
    assert sorted(p.name for p in tmp_path.glob("*.sqz")) == ["snapshot_000000.sqz"]
    assert (tmp_path / "trace.csv").read_text().splitlines()[0] == "step,alive,nanos"


def _alive_column(path):
    with open(path) as fh:
        return [row["alive"] for row in csv.DictReader(fh)]


def test_simulate_engines_agree(tmp_path, capsys):
    for engine in ("bb", "lambda", "squeeze"):
        d = tmp_path / engine
        args = ["simulate", "--level", "6", "--engine", engine, "--steps", "20", "--seed", "42",
                "--density", "0.3", "--snapshot-every", "10", "--out-dir", str(d)]
        assert run_cli(capsys, *args)[0] == 0
    ref = _alive_column(tmp_path / "bb" / "trace.csv")
    assert len(ref) == 21
    assert _alive_column(tmp_path / "squeeze" / "trace.csv") == ref
    assert _alive_column(tmp_path / "lambda" / "trace.csv") == ref
    for step in (0, 10, 20):
        name = f"snapshot_{step:06d}.sqz"
        bb = to_expanded(read_snapshot(tmp_path / "bb" / name))
        sq = to_expanded(read_snapshot(tmp_path / "squeeze" / name))
        assert np.array_equal(bb, sq)


def test_simulate_block_and_mma(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "--level", "6", "--block", "4", "--mma", "--steps", "3",
                           "--out-dir", str(tmp_path))
    assert code == 0 and "rho=4" in out
    assert read_snapshot(tmp_path / "snapshot_000003.sqz").rho == 4


def test_simulate_help_documents_default_rules(capsys):
    assert main(["simulate", "--help"]) == 0
    assert "3/23" in capsys.readouterr().out


@pytest.mark.parametrize(
    "extra",
    [["--density", "2"], ["--rules", "q"], ["--block", "3"], ["--engine", "gpu"], ["--snapshot-every", "-1"]],
)
def test_simulate_config_errors(tmp_path, capsys, extra):
    code = main(["simulate", "--level", "4", "--steps", "1", "--out-dir", str(tmp_path), *extra])
    assert code == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_verify(capsys):
    code, out, _ = run_cli(capsys, "verify", "--fractal", "sierpinski-triangle", "--max-level", "8")
    assert code == 0 and out.strip().endswith("PASS")
    assert run_cli(capsys, "verify", "--fractal", "sierpinski-carpet", "--max-level", "3")[0] == 0
    code, _, err = run_cli(capsys, "verify", "--fractal", "sierpinski-carpet", "--max-level", "12")
    assert code == 1 and "oracle supports" in err


def test_bench(tmp_path, capsys):
    path = tmp_path / "b.csv"
    code, _, err = run_cli(capsys, "bench", "--levels", "4..6", "--engines", "bb,squeeze", "--reps", "3",
                           "--steps", "2", "--out", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == BENCH_HEADER
    assert len(rows) == 1 + 6
    assert {(r[1], r[2]) for r in rows[1:]} == {(e, str(l)) for e in ("bb", "squeeze") for l in (4, 5, 6)}
    assert "alive trace stable across reps: True" in err
    assert "squeeze r=6: 729 cells visited per step" in err
    assert "bb r=6: 4096 cells visited per step" in err


def test_mrf_table2(capsys):
    code, out, _ = run_cli(capsys, "mrf", "--levels", "16", "--blocks", "1,2,4,8,16,32", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(stdio.StringIO(out)))
    got = [float(r["mrf"]) for r in rows]
    assert got == pytest.approx([99.8, 74.8, 56.1, 42.1, 31.6, 23.7], abs=0.1)
    assert {int(r["expanded_bytes"]) for r in rows} == {16 * 2**30}


def test_mrf_level_zero_and_text(capsys):
    code, out, _ = run_cli(capsys, "mrf", "--levels", "0", "--format", "csv")
    assert float(list(csv.DictReader(stdio.StringIO(out)))[0]["mrf"]) == 1.0
    code, out, _ = run_cli(capsys, "mrf", "--levels", "20")
    assert code == 0 and "315.3x" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "squeeze", "map", "--fractal", "sierpinski-triangle",
                           "--level", "1", "--direction", "e2c", "--coord", "1,0"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout.strip() == "HOLE"
