import json
import os

import pytest

from sponge import presets
from sponge.cli import main
from sponge.config import load_spec, save_spec, spec_from_dict, spec_hash, spec_to_dict
from sponge.errors import SchemaError


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _summary(outdir):
    with open(os.path.join(outdir, "summary.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_load_spec_presets():
    spec = load_spec("four-corner")
    assert spec.d == 2 and spec.N == 4
    assert spec.axis_laws[0].marginals[0].kind == "uniform"
    assert spec.axis_laws[0].marginals[0].a == pytest.approx(0.1)
    line = load_spec("example-line")
    assert line.N == 3 and line.d == 1
    assert line.axis_laws[0].marginals[1].value == pytest.approx(1 / 3)
    assert line.axis_laws[0].marginals[2].value == pytest.approx(1 / 4)
    assert line.translations[0] == (1.0,)


def test_load_spec_rejects_unknown():
    with pytest.raises(SchemaError, match="preset"):
        load_spec("no-such-thing")


def test_spec_roundtrip_and_hash(tmp_path):
    for name, builder in presets.PRESETS.items():
        spec = builder()
        path = tmp_path / f"{name}.json"
        save_spec(spec, path)
        loaded = load_spec(str(path))
        assert loaded == spec
        assert spec_hash(loaded) == spec_hash(spec)
        assert spec_from_dict(spec_to_dict(spec)) == spec


def test_singleton_translation_rejected(tmp_path):
    doc = spec_to_dict(presets.four_corner())
    for t in doc["translations"]:
        t[0] = 0.25
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="singleton"):
        load_spec(str(path))


def test_cli_solve_example_line(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["solve", "--preset", "example-line", "--tol", "1e-12",
                 "--out", str(out)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["s_star"] - 1.0) < 1e-8
    summary = _summary(out)
    assert summary["spec_hash"] == spec_hash(presets.example_line())
    assert summary["tool_version"]
    assert (out / "solve.csv").exists()
    assert (out / "pressure.png").exists()


def test_cli_solve_four_corner(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--preset", "four-corner", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["s_star"] - 1.14273) < 5e-4


def test_cli_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_missing_spec_is_schema_error(tmp_path):
    assert main(["solve", "--out", str(tmp_path / "x")]) == 2


def test_cli_env_seed_fallback(tmp_path, monkeypatch, capsys):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    monkeypatch.setenv("SPONGE_SEED", "17")
    main(["sample", "--preset", "example-line", "--points", "50", "--depth", "6",
          "--out", str(out1)])
    monkeypatch.delenv("SPONGE_SEED")
    main(["sample", "--preset", "example-line", "--points", "50", "--depth", "6",
          "--seed", "17", "--out", str(out2)])
    assert _read(out1 / "points.csv") == _read(out2 / "points.csv")
    assert _summary(out1)["seed"] == 17


def test_cli_rerun_byte_identical(tmp_path, capsys):
    args = ["martingale", "--preset", "example-line", "--n", "1", "--depth", "2",
            "--trials", "4000", "--seed", "3"]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2), "--workers", "3"]) == 0
    for name in ("summary.json", "martingale.csv", "martingale.png"):
        assert _read(out1 / name) == _read(out2 / name), name


def test_cli_render_outputs(tmp_path, capsys):
    svg = tmp_path / "fig.svg"
    assert main(["render", "--preset", "four-corner", "--seed", "7",
                 "--levels", "2", "--out", str(svg)]) == 0
    a = _read(svg)
    assert a.startswith(b"<svg")
    svg2 = tmp_path / "fig2.svg"
    main(["render", "--preset", "four-corner", "--seed", "7", "--levels", "2",
          "--out", str(svg2)])
    assert _read(svg2) == a

    ppm = tmp_path / "x.ppm"
    assert main(["render-cloud", "--preset", "four-corner", "--seed", "7",
                 "--points", "2000", "--depth", "10", "--res", "128",
                 "--out", str(ppm)]) == 0
    assert _read(ppm).startswith(b"P6\n128 128\n255\n")


def test_cli_boxcount_and_positivity(tmp_path, capsys):
    out = tmp_path / "bc"
    assert main(["boxcount", "--preset", "example-line", "--points", "20000",
                 "--depth", "12", "--seed", "5", "--out", str(out)]) == 0
    summary = _summary(out)
    assert 0.7 < summary["slope"] < 1.2
    out2 = tmp_path / "pos"
    assert main(["positivity", "--preset", "four-corner", "--points", "20000",
                 "--depth", "12", "--seed", "5", "--out", str(out2)]) == 0
    s2 = _summary(out2)
    assert len(s2["estimates"]) == len(s2["meshes"])
