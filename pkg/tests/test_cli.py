import json
from pathlib import Path

import pytest

from delaymanifolds.cli import main
from delaymanifolds.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_config_roundtrip():
    cfg = load_config(str(CONFIGS / "wright.json"))
    assert cfg.model.g == ["-(pi/2)*(x + x**2)"]
    assert cfg.grid.N == 32
    assert cfg.graphs.order == 3


def test_config_rejects_bad_schema():
    with pytest.raises(ConfigError):
        parse_config({"model": {"g": ["-x"], "r": "1", "h": 1.0}})
    with pytest.raises(ConfigError):
        parse_config({"schema": 2, "model": {"g": ["-x"], "r": "1",
                                             "h": 1.0}})


def test_config_rejects_out_of_range():
    base = {"schema": 1, "model": {"g": ["-x"], "r": "1", "h": 1.0}}
    with pytest.raises(ConfigError):
        parse_config({**base, "grid": {"N": 4}})
    with pytest.raises(ConfigError):
        parse_config({**base, "graphs": {"order": 7}})
    with pytest.raises(ConfigError):
        parse_config({**base, "grid": {"M": 16}})


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["spectrum", "--config", str(bad), "--quiet"]) == 2


def test_numerical_failure_exit_code(tmp_path):
    # no center directions -> exit 1 with the module error
    cfg = tmp_path / "decay.json"
    cfg.write_text(json.dumps(
        {"schema": 1, "model": {"g": ["-x"], "r": "1", "h": 1.0},
         "grid": {"N": 16}}))
    assert main(["spectrum", "--config", str(cfg), "--quiet",
                 "--out", str(tmp_path / "o")]) == 1


def test_spectrum_wright(tmp_path):
    out = tmp_path / "out"
    rc = main(["spectrum", "--config", str(CONFIGS / "wright.json"),
               "--out", str(out), "--quiet"])
    assert rc == 0
    data = json.loads((out / "spectrum.json").read_text())
    assert data["dims"] == {"u": 0, "c": 2, "s": 30}
    roots = sorted(data["roots_c"], key=lambda z: z[1])
    import numpy as np
    assert abs(roots[1][0]) < 1e-8
    assert abs(roots[1][1] - np.pi / 2) < 1e-8
    assert (out / "spectrum.csv").exists()


def test_verify_linear_model_passes(tmp_path):
    out = tmp_path / "out"
    rc = main(["verify", "--config", str(CONFIGS / "linear.json"),
               "--out", str(out), "--quiet"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert all(r["pass"] for r in report["reports"])
    # all-zero manifolds
    wcs = json.loads((out / "graphs.json").read_text()) \
        if (out / "graphs.json").exists() else None
    assert wcs is None  # verify alone does not write graphs.json


def test_all_planar_and_determinism(tmp_path):
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    for out in (out1, out2):
        rc = main(["all", "--config", str(CONFIGS / "planar.json"),
                   "--out", str(out), "--quiet"])
        assert rc == 0
    for name in ("spectrum.json", "graphs.json", "wc.json", "report.json",
                 "wc_points.csv", "simulate.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    wc = json.loads((out1 / "wc.json").read_text())
    assert wc["w_c"]["order"] == 4
    # center graph of the planar model is x2 = x1^2: single monomial
    monos = wc["w_c"]["monomials"]
    assert [2] in monos


def test_override_flags(tmp_path):
    out = tmp_path / "out"
    rc = main(["spectrum", "--config", str(CONFIGS / "wright.json"),
               "--out", str(out), "--nodes", "24", "--quiet"])
    assert rc == 0
    data = json.loads((out / "spectrum.json").read_text())
    assert data["dims"]["s"] == 22
