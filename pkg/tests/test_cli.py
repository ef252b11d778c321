import csv
import json

import pytest

from magwkb.cli import config_hash, load_config, main
from magwkb.errors import ConfigError


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def aniso_cfg(tmp_path):
    write(tmp_path / "field.json", {"coeffs": [[0, 0, 1.0], [2, 0, 1.0], [0, 2, 4.0]],
                                    "degree_cap": 14})
    return write(tmp_path / "job.json", {"field": {"file": "field.json"}, "ell": 0, "J_max": 2})


def test_expand_table(aniso_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["expand", "--config", str(aniso_cfg), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    rows = [l.split() for l in text.splitlines() if l.split() and l.split()[0].isdigit()]
    assert [int(r[0]) for r in rows] == [0, 1, 2]
    assert float(rows[0][1]) == pytest.approx(1.0) and float(rows[1][1]) == pytest.approx(4.5)
    assert "x1^2" in text and "validity radius" in text
    doc = json.loads((out / "expansion.json").read_text())
    assert doc["config"]["cap"] == 14  # taken from the field file
    assert doc["expansion"]["mu"][1][0] == pytest.approx(4.5)
    assert len(doc["config_hash"]) == 64 and doc["version"]
    assert (out / "run_info.json").exists()


def test_missing_field_file(tmp_path, capsys):
    cfg = write(tmp_path / "job.json", {"field": {"file": "nope.json"}})
    assert main(["expand", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["expand", "--config", str(tmp_path / "absent.json")]) == 2


def test_cap_floor_reports_minimum(tmp_path, capsys):
    cfg = write(tmp_path / "job.json", {"field": {"coeffs": [[0, 0, 1], [2, 0, 1], [0, 2, 1]]},
                                        "J_max": 3, "ell": 1, "cap": 10})
    assert main(["expand", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "minimum 12" in capsys.readouterr().err


def test_config_validation(tmp_path):
    base = {"field": {"coeffs": [[0, 0, 1], [2, 0, 1], [0, 2, 1]]}}
    for bad in ({"h_sweep": [0.1, 0.2]}, {"J_max": -1}, {"ell": 0.5},
                {"grid": {"L": 1.0, "M": 16}}, {"field": {}}):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path / "c.json", dict(base, **bad)))
    cfg = load_config(write(tmp_path / "c.json", base), {"J_max": 1})
    assert cfg["J_max"] == 1 and cfg["cap"] == 24


def test_config_hash_stable(tmp_path):
    doc = {"field": {"coeffs": [[0, 0, 1], [2, 0, 1], [0, 2, 1]]}, "J_max": 1}
    a = load_config(write(tmp_path / "a.json", doc))
    b = load_config(write(tmp_path / "b.json", dict(reversed(list(doc.items())))))
    assert config_hash(a) == config_hash(b)
    c = load_config(write(tmp_path / "c.json", dict(doc, J_max=2)))
    assert config_hash(c) != config_hash(a)


def test_residual_deterministic(tmp_path):
    cfg = write(tmp_path / "job.json",
                {"field": {"coeffs": [[0, 0, 1], [2, 0, 1], [0, 2, 1]]}, "J_max": 1, "cap": 16})
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["residual", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out)
    for fname in ("residual.json", "residual.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    doc = json.loads((outs[0] / "residual.json").read_text())["residual"]
    assert doc["real"]["slope"] >= 2.8
    assert max(doc["complex"]["relative"]) < 1e-10
    with open(outs[0] / "residual.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["kind", "J", "index", "h", "value", "relative"]
    hv = [r[3] for r in rows[1:] if r[0] == "real"]
    assert hv[0] == "0.10000000000000001"  # 17 significant digits


@pytest.mark.slow
def test_validate_constant_field_is_flagged_degenerate(tmp_path, capsys):
    cfg = write(tmp_path / "job.json", {"field": {"coeffs": [[0, 0, 1.0]]}, "cap": 8,
                                        "J_max": 0, "h_sweep": [0.04, 0.02],
                                        "grid": {"L": 1.0, "M": 64}})
    out = tmp_path / "v"
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
    assert "degenerate" in capsys.readouterr().out
    doc = json.loads((out / "spectral.json").read_text())["spectral"]
    assert doc["degenerate"] is True
    for r in doc["lambda0_over_b0h"]:
        assert r == pytest.approx(1.0, rel=0.02)
    with open(out / "spectral.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["h", "index", "lambda", "lambda_over_h", "fitted_mu1", "overlap"]


def test_cli_overrides(aniso_cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["expand", "--config", str(aniso_cfg), "--out", str(out), "--order", "1",
                 "--ell", "1", "--cap", "12"]) == 0
    doc = json.loads((out / "expansion.json").read_text())
    assert doc["config"]["J_max"] == 1 and doc["config"]["cap"] == 12
    assert doc["expansion"]["mu"][1][0] == pytest.approx(8.5)
    assert main(["expand", "--config", str(aniso_cfg), "--grid", "1.0"]) == 2
