"""File formats and the command-line front end."""
import csv
import json

import numpy as np
import pytest

from polling_lab import ParseError
from polling_lab.cli import main, thread_cap
from polling_lab.io import dumps, load_points

from conftest import MODELS


def run(*args):
    return main([str(a) for a in args])


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_dumps_keeps_full_precision():
    x = 0.1 + 0.2
    text = dumps({"x": x, "v": [1, 2.5], "b": True, "n": None})
    assert "0.30000000000000004" in text
    assert json.loads(text) == {"x": x, "v": [1, 2.5], "b": True, "n": None}


def test_load_points_formats(tmp_path):
    p = tmp_path / "pts.json"
    p.write_text(json.dumps({"z": [[0.5, [0.1, 0.2]], ["0.3+0.4j", 1]], "omega": [[1, 2]]}))
    z, omega = load_points(p, 2)
    assert z.shape == (2, 2) and z[0, 1] == 0.1 + 0.2j and z[1, 0] == 0.3 + 0.4j
    assert omega.tolist() == [[1, 2]]


@pytest.mark.parametrize("payload", ['{"z": [[1, 2, 3]]}', '{"z": [["abc", 1]]}', "[1, 2]", "{not json"])
def test_load_points_errors(tmp_path, payload):
    p = tmp_path / "pts.json"
    p.write_text(payload)
    with pytest.raises(ParseError):
        load_points(p, 2)


def test_analyze_mm1_geometric(tmp_path):
    assert run("analyze", MODELS / "mm1.toml", "--out", tmp_path, "--n-max", 20) == 0
    rows = read_csv(tmp_path / "marginals.csv")
    p = np.array([float(r["probability"]) for r in rows])
    assert np.abs(p - 0.5 * 0.5 ** np.arange(21)).max() < 1e-8
    res = json.loads((tmp_path / "results.json").read_text())
    assert res["mean_cycle"] == pytest.approx(2.0)
    assert {r["quantity"] for r in res["records"]} >= {"Q", "W", "Vb", "Vc", "Sb", "Sc", "W_MG1"}


def test_analyze_symmetric_means(tmp_path):
    assert run("analyze", MODELS / "symmetric_exhaustive.toml", "--out", tmp_path) == 0
    rows = [r for r in read_csv(tmp_path / "moments.csv") if r["quantity"] == "mean_queue_length"]
    by = {(r["queue"], r["method"]): float(r["value"]) for r in rows}
    assert by[("0", "contour")] == pytest.approx(by[("1", "contour")], abs=1e-12)
    assert by[("0", "inversion")] == pytest.approx(by[("0", "contour")], abs=1e-4)


def test_analyze_points_at_one(tmp_path):
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps({"z": [[1, 1], [0.5, 0.5]], "omega": [[0, 0], [1, 1]]}))
    assert run("analyze", MODELS / "canonical.toml", "--points", pts, "--out", tmp_path / "o") == 0
    res = json.loads((tmp_path / "o" / "results.json").read_text())
    q1 = [r for r in res["records"] if r["quantity"] == "Q" and r["point"] == [[1, 0], [1, 0]]]
    assert len(q1) == 2 and all(r["value_re"] == 1 and r["value_im"] == 0 for r in q1)
    w0 = [r for r in res["records"] if r["quantity"] == "W" and r["point"] == [[0, 0], [0, 0]]]
    assert w0[0]["value_re"] == 1


def test_analyze_is_byte_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("analyze", MODELS / "canonical.toml", "--out", tmp_path / d) == 0
    for f in ("results.json", "marginals.csv", "moments.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_analyze_rejects_non_branching(tmp_path, capsys):
    assert run("analyze", MODELS / "one_limited.toml", "--out", tmp_path) == 2
    assert "simulate" in capsys.readouterr().err


def test_bad_model_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[[queues]]\nlambda = 0.9\nservice = { family = 'exponential', params = { rate = 1.0 } }\n"
                   "[[switchovers]]\nfamily = 'deterministic'\nparams = { value = 0.0 }\n"
                   "[[queues]]\nlambda = 0.3\nservice = { family = 'exponential', params = { rate = 1.0 } }\n"
                   "[[switchovers]]\nfamily = 'deterministic'\nparams = { value = 0.0 }\n")
    assert run("analyze", bad, "--out", tmp_path) == 2
    assert run("analyze", tmp_path / "nope.toml", "--out", tmp_path) == 2


def test_numeric_failure_exit_code(tmp_path):
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps({"z": [[3.0, 3.0]], "omega": []}))
    with np.errstate(all="ignore"):
        assert run("analyze", MODELS / "canonical.toml", "--points", pts, "--out", tmp_path) == 3


def test_workload_pole_is_resolved(tmp_path):
    model = tmp_path / "m.toml"
    model.write_text((MODELS / "canonical.toml").read_text().replace("0.3", "0.45").replace("0.2", "0.05"))
    w1 = 10.0
    sig = lambda w2: 0.45 * w1 / (1 + w1) + 0.05 * w2 / (1 + w2)
    lo, hi = 0.01, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if sig(mid) > mid else (lo, mid)
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps({"z": [[0.5, 0.5]], "omega": [[w1, lo]]}))
    assert run("analyze", model, "--points", pts, "--out", tmp_path) == 0
    rec = [r for r in json.loads((tmp_path / "results.json").read_text())["records"] if r["quantity"] == "W"]
    assert 0 < rec[0]["value_re"] < 1


def test_simulate_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run("simulate", MODELS / "canonical.toml", "--cycles", 5000, "--seed", 7, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    s = json.loads(a.read_text())
    ts = [p for p in s["probes"] if p["kind"] == "time_stationary"]
    assert len(ts) == 9 and all("stderr" in p for p in ts)


def test_simulate_stderr_shrinks_with_cycles(tmp_path):
    se = []
    for c in (40_000, 80_000):
        out = tmp_path / f"{c}.json"
        assert run("simulate", MODELS / "canonical.toml", "--cycles", c, "--seed", 3, "--batches", 200, "--out", out) == 0
        se.append(np.array([p["stderr"] for p in json.loads(out.read_text())["probes"]]))
    ratio = se[0] / se[1] / np.sqrt(2)
    assert np.all(np.abs(ratio - 1) < 0.2)


def test_simulate_trace(tmp_path):
    tr = tmp_path / "trace.jsonl"
    assert run("simulate", MODELS / "mm1.toml", "--cycles", 2000, "--seed", 1, "--trace", tr,
               "--batches", 10, "--out", tmp_path / "s.json") == 0
    first = json.loads(tr.read_text().splitlines()[0])
    assert first["event"] in ("visit_begin", "arrival")


def test_verify_passes_and_reports(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run("verify", MODELS / "canonical.toml", "--cycles", 40_000, "--seed", 2, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["environment"]["seed"] == 2
    assert all(c["equation"] for c in rep["checks"])
    assert "Eisenberg balance" in capsys.readouterr().out


def test_verify_report_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        run("verify", MODELS / "canonical.toml", "--cycles", 5000, "--seed", 4, "--out", out)
    assert a.read_bytes() == b.read_bytes()


def test_verify_one_limited_skips_analytic_checks(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", MODELS / "one_limited.toml", "--cycles", 40_000, "--seed", 5, "--out", out) == 0
    checks = json.loads(out.read_text())["checks"]
    skipped = [c for c in checks if c["skipped"]]
    assert skipped and all("branching" in c["skipped"] for c in skipped)
    eq10 = [c for c in checks if c["name"].startswith("departure form")]
    assert eq10[0]["passed"]


def test_verify_detects_fault(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", MODELS / "canonical.toml", "--cycles", 0, "--inject-fault", "--out", out) == 4
    checks = {c["name"]: c for c in json.loads(out.read_text())["checks"]}
    assert not checks["Eisenberg balance"]["passed"]


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("POLLING_LAB_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("POLLING_LAB_THREADS", "junk")
    assert thread_cap() >= 1
