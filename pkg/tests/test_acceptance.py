"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the status lines are
printed even when pytest captures output.
"""
import time

import numpy as np
import pytest

from polling_lab import (
    EngineConfig,
    SimConfig,
    StationaryEvaluator,
    TransformEngine,
    marginal_pmf,
    mean_queue_length,
    queue_length_pgf,
    queue_length_pgf_visit_form,
    simulate,
    switch_workload_lst,
    workload_lst,
)
from polling_lab import simulation as sim
from polling_lab.cli import main
from polling_lab.verify import default_omega_probes, default_z_probes, identity_checks

from conftest import MODELS, mm1, one_limited, two_queue

CYCLES = 1_000_000


@pytest.fixture
def report(capsys):
    def emit(criterion, passed, detail):
        with capsys.disabled():
            print(f"\n[acceptance {criterion}] {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return emit


def _probes(model):
    return default_z_probes(model.n_queues), default_omega_probes(model)


@pytest.fixture(scope="module")
def sim_logs():
    logs = {}
    for name, model, seed in (("canonical", two_queue(), 101), ("zero switchover", two_queue(switch=0.0), 102)):
        _, omega = _probes(model)
        start = time.perf_counter()
        logs[name] = (simulate(SimConfig(model, seed, 1000, CYCLES, 50), omega), time.perf_counter() - start)
    return logs


def test_criterion_1_identity_suite(report):
    start = time.perf_counter()
    worst, failed = 0.0, []
    for model in (two_queue(), two_queue(switch=0.0)):
        z, omega = _probes(model)
        assert len(z) == 20
        for c in identity_checks(model, z, omega, tolerance=1e-9):
            worst = max(worst, c.statistic)
            if not c.passed:
                failed.append(c.name)
    elapsed = time.perf_counter() - start
    ok = not failed and elapsed < 10
    report(1, ok, f"max residual {worst:.2e} (< 1e-9), {elapsed:.2f} s (< 10 s), failed={failed}")
    assert ok


def test_criterion_2_mg1_reduction(report):
    ev = StationaryEvaluator.analytic(mm1())
    p = marginal_pmf(ev, 0, 20).probabilities
    geo = 0.5 * 0.5 ** np.arange(21)
    err_p = float(np.abs(p - geo).max())
    # P-K for M/M/1: (1 - rho)(1 + w) / (1 - rho + w) at w = 1
    err_w = abs(complex(workload_lst(ev, [1.0])) - 2 / 3)
    ok = err_p < 1e-8 and err_w < 1e-9
    report(2, ok, f"pmf error {err_p:.2e} (< 1e-8), W(1) error {err_w:.2e} (< 1e-9)")
    assert ok


def test_criterion_3_simulation_cross_validation(report, sim_logs):
    worst, bad, runtime = 0.0, [], 0.0
    for name, (log, secs) in sim_logs.items():
        runtime += secs
        model = log.model
        z, omega = _probes(model)
        engine = TransformEngine(model)
        ev = StationaryEvaluator(model, engine)
        b = engine.bundle(z)
        scores = {}
        for kind, attr in (("visit_begin", "vb"), ("visit_complete", "vc"), ("service_complete", "sc")):
            for i in range(model.n_queues):
                scores[f"{attr}{i + 1}"] = sim.empirical_pgf(log, kind, i, z).zscore(getattr(b, attr)[:, i])
        scores["Q"] = sim.empirical_time_stationary(log, z).zscore(queue_length_pgf(ev, z))
        scores["W"] = sim.empirical_time_stationary(log, omega, workload=True).zscore(workload_lst(ev, omega))
        for key, zs in scores.items():
            worst = max(worst, float(np.max(zs)))
            if np.max(zs) >= 3:
                bad.append(f"{name}:{key}")
    ok = not bad and runtime < 300
    report(3, ok, f"max |z| {worst:.2f} (< 3) at 1e6 cycles, simulation {runtime:.0f} s (< 300 s), failed={bad}")
    assert ok


def test_criterion_4_discipline_independence(report):
    model = one_limited()
    log = simulate(SimConfig(model, 103, 1000, CYCLES, 50))
    z = np.concatenate([default_z_probes(2), np.repeat(np.linspace(0.1, 0.9, 9)[:, None], 2, axis=1)])
    lam = model.arrival_rates
    w = lam * (1 - z)
    sc = [sim.empirical_pgf(log, "service_complete", i, z) for i in range(2)]
    departure_form = sum(sc[i] * (w[:, i] / w.sum(axis=1)) for i in range(2))
    zs = (departure_form - sim.empirical_time_stationary(log, z)).zscore(0.0)
    ok = bool(np.max(zs) < 3)
    report(4, ok, f"max |z| {np.max(zs):.2f} (< 3) over {len(z)} probes, 1-limited")
    assert ok


def test_criterion_5_zero_switchover_convention(report, sim_logs):
    log, _ = sim_logs["zero switchover"]
    model = log.model
    origin = np.zeros(2)
    vb0 = sim.empirical_pgf(log, "visit_begin", 0, origin)
    vcn0 = sim.empirical_pgf(log, "visit_complete", 1, origin)
    z_half = float((vb0 - vcn0 * 0.5).zscore(0.0))
    ec = sim.empirical_mean_cycle(log)
    z_ec = float((ec - vb0 / (model.total_rate * (1 - model.rho))).zscore(0.0))
    ok = z_half < 3 and z_ec < 3
    report(5, ok, f"|z| vb1(0) vs vcN(0)/2 = {z_half:.2f}, |z| E C vs vb1(0)/(lambda(1-rho)) = {z_ec:.2f} (< 3)")
    assert ok


def _outputs(model, config):
    z, omega = _probes(model)
    engine = TransformEngine(model, config)
    ev = StationaryEvaluator(model, engine)
    b = engine.bundle(z)
    out = [b.vb, b.vc, b.sb, b.sc, queue_length_pgf(ev, z), queue_length_pgf_visit_form(ev, z),
           workload_lst(ev, omega), np.array([engine.mean_cycle])]
    if not model.zero_switchover:
        out.append(switch_workload_lst(ev, omega[:10, 0]))
    for i in range(model.n_queues):
        out.append(marginal_pmf(ev, i, 100).probabilities)
        out.append(np.array([mean_queue_length(ev, i)]))
    return out


def test_criterion_6_numerical_robustness(report):
    change, gap = 0.0, 0.0
    for model in (two_queue(), two_queue(switch=0.0)):
        base = _outputs(model, EngineConfig())
        fine = _outputs(model, EngineConfig().refined())
        change = max(change, max(float(np.abs(a - b).max()) for a, b in zip(base, fine)))
        ev = StationaryEvaluator.analytic(model)
        for i in range(model.n_queues):
            gap = max(gap, abs(marginal_pmf(ev, i, 400).mean() - mean_queue_length(ev, i)))
    ok = change < 1e-9 and gap < 1e-4
    report(6, ok, f"refinement change {change:.2e} (< 1e-9), contour mean vs inversion mean {gap:.2e} (< 1e-4)")
    assert ok


def test_criterion_7_fault_detection(report, tmp_path, capsys):
    model_file = MODELS / "canonical.toml"
    clean = main(["verify", str(model_file), "--cycles", "0"])
    out = tmp_path / "r.json"
    code = main(["verify", str(model_file), "--cycles", "0", "--inject-fault", "--out", str(out)])
    import json

    checks = {c["name"]: c["passed"] for c in json.loads(out.read_text())["checks"]}
    capsys.readouterr()
    ok = clean == 0 and code == 4 and checks["Eisenberg balance"] is False
    report(7, ok, f"clean exit {clean}, tampered exit {code} (expect 4), Eisenberg check passed={checks['Eisenberg balance']}")
    assert ok
