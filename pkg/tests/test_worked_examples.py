"""Small worked examples with hand-computable answers."""
import math

import numpy as np
import pytest

from polling_lab import (
    Deterministic,
    Erlang,
    Exponential,
    SimConfig,
    StabilityError,
    StationaryEvaluator,
    TransformEngine,
    build_model,
    busy_period_lst,
    marginal_pmf,
    mean_cycle,
    mg1_workload_lst,
    queue_length_pgf,
    sigma,
    simulate,
)
from polling_lab import simulation as sim
from polling_lab.transforms import branching_map

from conftest import det, exp, mm1, two_queue

ERL = {"family": "erlang", "params": {"shape": 2, "rate": 4.0}}


def test_loads():
    assert mm1().rho == 0.5
    with pytest.raises(StabilityError):
        two_queue(rates=(0.6, 0.6))
    m = build_model({"queues": [{"lambda": 0.25, "service": ERL}] * 2, "switchovers": [det(0.1), det(0.2)]})
    assert m.rho == pytest.approx(0.25)
    assert m.total_switchover == pytest.approx(0.3)


def test_lst_values():
    assert complex(Exponential(1.0).lst(1.0)) == 0.5
    assert complex(Deterministic(2.0).lst(1.0)) == pytest.approx(math.exp(-2))
    assert complex(Erlang(2, 4.0).lst(4.0)) == pytest.approx(0.25)


def test_mean_cycle_values():
    m = build_model({"queues": [{"lambda": 0.5, "service": exp(1.0)}], "switchovers": [det(2.0)]})
    assert mean_cycle(m) == pytest.approx(4.0)
    z = build_model({"queues": [{"lambda": 1.0, "service": exp(2.0)}], "switchovers": [det(0.0)]})
    assert mean_cycle(z, 0.25) == pytest.approx(0.5)
    light = build_model({"queues": [{"lambda": 1e-6, "service": exp(1.0)}], "switchovers": [det(1.0)]})
    assert mean_cycle(light) == pytest.approx(1.0, rel=1e-5)


def test_sigma_values():
    m = build_model({"queues": [{"lambda": 1.0, "service": exp(4.0)}, {"lambda": 2.0, "service": exp(8.0)}],
                     "switchovers": [det(0.1), det(0.1)]})
    assert sigma(m, [0.5, 0.5]) == 1.5
    assert sigma(m, [1.0, 1.0]) == 0
    one = build_model({"queues": [{"lambda": 1.0, "service": exp(2.0)}], "switchovers": [det(0.1)]})
    assert sigma(one, [0.0]) == 1


def test_busy_period_values():
    assert busy_period_lst(0.5, Exponential(1.0), 0.0) == pytest.approx(1.0, abs=1e-14)
    # brute-force fixed point with a fixed iteration count
    theta = 0.0
    for _ in range(100_000):
        theta = math.exp(-(0.5 + 0.5 * (1 - theta)))
    assert busy_period_lst(0.5, Deterministic(1.0), 0.5).real == pytest.approx(theta, abs=1e-14)


def test_branching_map_values():
    m = build_model({
        "queues": [{"lambda": 1.0, "discipline": "gated", "service": exp(2.0)},
                   {"lambda": 1.0, "discipline": "exhaustive", "service": exp(4.0)}],
        "switchovers": [det(0.1), det(0.1)],
    })
    assert np.allclose(branching_map(m, 0, np.array([0.5, 1.0])), [0.8, 1.0], atol=1e-15)
    assert np.allclose(branching_map(m, 0, np.ones(2)), 1.0)
    assert np.allclose(branching_map(m, 1, np.ones(2)), 1.0, atol=1e-14)


def test_mm1_departure_pgf_at_half():
    # P-K with exponential service reduces to (1 - rho)/(1 - rho z): 2/3 at z = 1/2
    b = TransformEngine(mm1()).bundle(np.array([0.5]))
    assert complex(b.sc[0]) == pytest.approx(2 / 3, abs=1e-12)


def test_mg1_service_start_law():
    # embedded chain: a departure leaving n >= 1 starts the next service with n
    # present; one leaving the queue empty starts it with exactly one
    m = build_model({
        "queues": [{"lambda": 0.6, "discipline": "exhaustive", "service": ERL}],
        "switchovers": [det(0.0)],
    })
    z = np.array([0.2, -0.6, 0.4 + 0.5j, 0.95])
    x = 0.6 * (1 - z)
    bz = m.services[0].lst(x)
    pk = (1 - m.rho) * (1 - z) * bz / (bz - z)
    p0 = 1 - m.rho
    b = TransformEngine(m).bundle(z[:, None])
    assert np.abs(b.sc[:, 0] - pk).max() < 1e-12
    assert np.abs(b.sb[:, 0] - (pk - p0 + p0 * z)).max() < 1e-12


def test_marginal_point_equals_departure_pgf():
    m = two_queue()
    ev = StationaryEvaluator.analytic(m)
    for i in range(2):
        pts = np.ones((3, 2), dtype=complex)
        pts[:, i] = [0.3, -0.5, 0.2 + 0.7j]
        assert np.abs(queue_length_pgf(ev, pts) - TransformEngine(m).bundle(pts).sc[:, i]).max() < 1e-12


def test_zero_switchover_term_is_one_minus_rho():
    m = two_queue(switch=0.0, disciplines=("exhaustive", "exhaustive"))
    e = TransformEngine(m)
    z = np.array([[0.3, 0.6], [0.2 + 0.5j, -0.4]])
    b = e.bundle(z)
    term = (b.vc[:, -1] - b.vb[:, 0]) / (sigma(m, z) * e.mean_cycle)
    assert np.allclose(term, 1 - m.rho, atol=1e-13)


def test_mg1_workload_mean():
    m = two_queue()
    h = 1e-5
    slope = ((mg1_workload_lst(m, 2 * h) - mg1_workload_lst(m, h)) / h).real
    mean = (m.arrival_rates * m.service_second_moments).sum() / (2 * (1 - m.rho))
    assert -slope == pytest.approx(mean, rel=1e-4)


def test_pmf_mass_and_empty_probability():
    m = two_queue()
    ev = StationaryEvaluator.analytic(m)
    for i in range(2):
        pmf = marginal_pmf(ev, i, 60)
        assert pmf.mass <= 1 + 1e-6
        pt = np.ones(2)
        pt[i] = 0.0
        assert pmf.probabilities[0] == pytest.approx(queue_length_pgf(ev, pt).real, abs=1e-12)


@pytest.fixture(scope="module")
def exhaustive_pair_log():
    m = two_queue(disciplines=("exhaustive", "exhaustive"))
    return simulate(SimConfig(m, 31, 500, 80_000, 40))


def test_exhaustive_pair_visit_pgfs_at_point(exhaustive_pair_log):
    z = np.array([0.6, 0.7])
    b = TransformEngine(exhaustive_pair_log.model).bundle(z)
    for i in range(2):
        assert sim.empirical_pgf(exhaustive_pair_log, "visit_begin", i, z).zscore(b.vb[i]) < 3
        assert sim.empirical_pgf(exhaustive_pair_log, "visit_complete", i, z).zscore(b.vc[i]) < 3


def test_exhaustive_queue_is_empty_at_visit_completion(exhaustive_pair_log):
    a = sim.empirical_pgf(exhaustive_pair_log, "visit_complete", 0, [0.1, 0.7])
    b = sim.empirical_pgf(exhaustive_pair_log, "visit_complete", 0, [0.9, 0.7])
    assert a.value == b.value


def test_canonical_time_average_at_point():
    log = simulate(SimConfig(two_queue(), 32, 500, 80_000, 40))
    z = np.array([0.6, 0.7])
    ev = StationaryEvaluator.analytic(log.model)
    assert sim.empirical_time_stationary(log, z).zscore(queue_length_pgf(ev, z)) < 3
    one = sim.empirical_time_stationary(log, np.ones(2))
    assert one.value == 1 and one.stderr == 0
    # served per visit against lambda_i times measured time per cycle
    ratio = 1 / sim.empirical_gamma(log)
    per_cycle = log.measured_time / log.measured_cycles
    assert np.allclose(ratio.value.real, log.model.arrival_rates * per_cycle, rtol=0.02)


def test_mm1_simulated_laws():
    log = simulate(SimConfig(mm1(), 33, 500, 80_000, 40), [[1.0]])
    assert sim.empirical_time_stationary(log, [0.5]).zscore(2 / 3) < 3
    assert sim.empirical_time_stationary(log, [[1.0]], workload=True).zscore(np.array([2 / 3])).max() < 3


def test_nearly_empty_system():
    m = two_queue(rates=(1e-4, 1e-4))
    log = simulate(SimConfig(m, 34, 100, 20_000, 20), [[1.0, 1.0]])
    z = np.array([0.3, 0.3])
    for kind in ("visit_begin", "visit_complete"):
        assert sim.empirical_pgf(log, kind, 0, z).value == pytest.approx(1.0, abs=1e-2)
    assert sim.empirical_time_stationary(log, [[1.0, 1.0]], workload=True).value[0] == pytest.approx(1.0, abs=1e-2)
