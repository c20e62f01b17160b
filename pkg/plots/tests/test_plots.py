import json
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]
PLOTS = ROOT / "plots" / "plots.py"
CONFIG = ROOT / "configs" / "planar.json"


def run_plots(*args):
    return subprocess.run([sys.executable, str(PLOTS), *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """Pipeline outputs, produced only through the public CLI."""
    out = tmp_path_factory.mktemp("artifacts")
    proc = subprocess.run(
        [sys.executable, "-m", "delaymanifolds.cli", "all",
         "--config", str(CONFIG), "--out", str(out), "--quiet"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


def _render_twice(job, inputs, tmp_path):
    outs = []
    for i in (1, 2):
        png = tmp_path / f"{job}_{i}.png"
        proc = run_plots("--job", job, *sum((["--in", str(p)]
                                             for p in inputs), []),
                         "--out", str(png))
        assert proc.returncode == 0, proc.stderr
        outs.append(png.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0][:8] == b"\x89PNG\r\n\x1a\n"
    return outs[0]


def test_all_four_kinds_deterministic(artifacts, tmp_path):
    _render_twice("spectrum", [artifacts / "spectrum.json"], tmp_path)
    _render_twice("manifold_section", [artifacts / "wc.json"], tmp_path)
    _render_twice("defect_time", [artifacts / "simulate.csv"], tmp_path)
    _render_twice("defect_scaling", [artifacts / "report.json"], tmp_path)


def test_section_overlay_two_inputs(artifacts, tmp_path):
    png = tmp_path / "overlay.png"
    proc = run_plots("--job", "manifold_section",
                     "--in", str(artifacts / "wc.json"),
                     "--in", str(artifacts / "wc.json"),
                     "--out", str(png))
    assert proc.returncode == 0, proc.stderr
    assert png.exists()


def test_empty_csv_is_no_data_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,xf_defect\n")
    proc = run_plots("--job", "defect_time", "--in", str(empty),
                     "--out", str(tmp_path / "x.png"))
    assert proc.returncode == 1
    assert "no data" in proc.stderr


def test_schema_mismatch_rejected(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": 2, "eigenvalues": []}))
    proc = run_plots("--job", "spectrum", "--in", str(bad),
                     "--out", str(tmp_path / "x.png"))
    assert proc.returncode == 1
    assert "schema" in proc.stderr


def test_bad_output_extension(tmp_path):
    proc = run_plots("--job", "spectrum", "--in", "nope.json",
                     "--out", str(tmp_path / "x.jpg"))
    assert proc.returncode == 2
