import json

import pytest

from capbound.cli import build_parser, main


def _run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_capacity(capsys):
    code, doc = _run(capsys, ["capacity", "--h", "1/32", "--gamma", "0.5"])
    assert code == 0 and doc["schema"] == "capbound/1"
    assert 0 < doc["results"]["ratio"] < 1 and doc["results"]["negligible"]


def test_carve_reports_negligible_set(capsys):
    code, doc = _run(capsys, ["carve", "--preset", "ab-pi", "--d", "1", "--center", "0,0", "--gamma", "0.3"])
    assert code == 0 and doc["results"]["feasible"]
    # a whole hole of radius 0.3 does not fit in this budget
    code, doc = _run(capsys, ["carve", "--preset", "ab-pi", "--d", "1", "--center", "1,1", "--gamma", "0.3"])
    assert code == 0 and not doc["results"]["feasible"] and doc["results"]["integral"] == "inf"


def test_gauge_opt(capsys):
    code, doc = _run(capsys, ["gauge-opt", "--preset", "ab-half-pi", "--d", "1", "--center", "1,1",
                              "--budget", "1"])
    assert code == 0 and doc["results"]["optimized"]["kind"] == "optimized"


def test_diameter_writes_table(tmp_path):
    out = tmp_path / "report.json"
    assert main(["diameter", "--preset", "const-4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["results"]["D"] == pytest.approx(0.5)
    assert (tmp_path / "report.csv").read_text().startswith("d,m,threshold")


def test_spectrum_eigvec_dump(tmp_path, capsys):
    ev = tmp_path / "ev.bin"
    code, doc = _run(capsys, ["spectrum", "--preset", "const-4", "--eigvec-out", str(ev)])
    assert code == 0 and doc["results"]["lambda"] == pytest.approx(4.0)
    assert ev.exists() and (tmp_path / "ev.bin.json").exists()


def test_fibered_csv(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["fibered", "--h", "1/16", "--out", str(out)]) == 0
    assert out.read_text().startswith("mu,lambda_mu")
    assert json.loads((tmp_path / "curve.json").read_text())["results"]["lambda"] == pytest.approx(1, rel=0.02)


def test_verify_with_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": "capbound/1", "options": {"presets": "const-1,const-4,free"}}))
    code, doc = _run(capsys, ["verify", "--config", str(cfg)])
    assert code == 0 and doc["passed"]
    assert [r["preset"] for r in doc["results"]["two_sided"]["reports"]] == ["const-1", "const-4", "free"]


def test_bad_schema_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": "capbound/0"}))
    with pytest.raises(SystemExit):
        main(["verify", "--config", str(cfg)])


def test_global_flags_on_every_command():
    p = build_parser()
    for cmd in ("capacity", "gauge-opt", "carve", "diameter", "spectrum", "fibered", "verify"):
        extra = {"gauge-opt": ["--preset", "free", "--d", "1"], "carve": ["--preset", "free", "--d", "1"],
                 "diameter": ["--preset", "free"], "spectrum": ["--preset", "free"]}.get(cmd, [])
        args = p.parse_args([cmd, *extra, "--h", "1/8", "--gamma", "0.3", "--seed", "2", "--jobs", "1"])
        assert args.h == "1/8" and args.gamma == 0.3 and args.seed == 2


def test_deterministic_reports(tmp_path):
    from capbound.harness import strip_volatile

    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        main(["carve", "--preset", "ab-pi", "--d", "1", "--center", "1,1", "--out", str(out)])
        outs.append(strip_volatile(json.loads(out.read_text())))
    assert outs[0] == outs[1]
