"""Verification suite: transform identities and simulation cross-checks.

Identity checks compare analytic quantities with each other and pass when
the largest residual is below the tolerance. Oracle checks compare an
analytic value (or an exact relation) with simulation estimates and pass
when every ``|estimate - reference| / stderr`` is below 3.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import simulation as sim
from .model import PollingModel, model_to_dict
from .stationary import (
    StationaryEvaluator,
    mg1_workload_lst,
    queue_length_pgf,
    queue_length_pgf_visit_form,
    switch_workload_lst,
    workload_lst,
)
from .transforms import EngineConfig, PgfBundle, TransformEngine, sigma

PROBE_SEED = 0x9011  # "POLL"
Z_THRESHOLD = 3.0
IDENTITY_TOL = 1e-9


@dataclass
class Check:
    name: str
    equation: str
    kind: str  # "identity" or "oracle"
    points: int
    statistic: float  # max residual (identity) or max |z-score| (oracle)
    tolerance: float
    passed: bool
    skipped: str | None = None


@dataclass
class VerificationReport:
    model: dict
    checks: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.skipped is None)

    def failed(self) -> list:
        return [c for c in self.checks if c.skipped is None and not c.passed]

    def to_dict(self) -> dict:
        # runtime stays out so that reports are byte-reproducible
        return {
            "schema": "polling-lab/verification-report",
            "version": 1,
            "model": self.model,
            "environment": self.environment,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def table(self) -> str:
        lines = [f"{'check':<48} {'relation':<38} {'kind':<8} {'pts':>4} {'stat':>10} {'tol':>8}  result"]
        for c in self.checks:
            if c.skipped is not None:
                lines.append(f"{c.name:<48} {c.equation:<38} {c.kind:<8} {'-':>4} {'-':>10} {'-':>8}  SKIP ({c.skipped})")
                continue
            res = "PASS" if c.passed else "FAIL"
            lines.append(
                f"{c.name:<48} {c.equation:<38} {c.kind:<8} {c.points:>4} "
                f"{c.statistic:>10.3g} {c.tolerance:>8.2g}  {res}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}  ({self.runtime:.1f} s)")
        return "\n".join(lines)


def default_z_probes(n: int, count: int = 20, seed: int = PROBE_SEED) -> np.ndarray:
    """Pseudo-random complex points with every ``|z_i| <= 0.95``."""
    rng = np.random.default_rng(seed)
    r = 0.95 * np.sqrt(rng.random((count, n)))
    phi = 2 * np.pi * rng.random((count, n))
    return r * np.exp(1j * phi)


def default_omega_probes(model: PollingModel, count: int = 10, seed: int = PROBE_SEED) -> np.ndarray:
    """Workload-LST arguments: ``count`` diagonal points with omega in [0.1, 5]
    plus perturbed copies that stay clear of the removable point ``sigma(B(omega)) = omega_i``."""
    n = model.n_queues
    grid = np.linspace(0.1, 5.0, count)
    diag = np.repeat(grid[:, None], n, axis=1)
    if n == 1:
        return diag.astype(complex)
    rng = np.random.default_rng(seed + 1)
    mixed = grid[:, None] * (0.75 + 0.5 * rng.random((count, n)))
    # sigma(B(omega)) <= sum_j rho_j omega_j, so this keeps every gap positive
    keep = (mixed * model.loads).sum(axis=1) < 0.95 * mixed.min(axis=1)
    return np.concatenate([diag, mixed[keep]]).astype(complex)


def _diag(points: np.ndarray) -> np.ndarray:
    return np.repeat(points[:, :1], points.shape[1], axis=1)


def _identity(name, eq, residual, tol) -> Check:
    stat = float(np.max(np.abs(residual))) if np.size(residual) else 0.0
    ok = bool(np.isfinite(stat) and stat < tol)
    return Check(name, eq, "identity", int(np.shape(residual)[0]) if np.ndim(residual) else 1, stat, tol, ok)


def _oracle(name, eq, zscores) -> Check:
    z = np.atleast_1d(np.asarray(zscores, dtype=float))
    stat = float(np.max(z)) if z.size else 0.0
    return Check(name, eq, "oracle", int(z.size), stat, Z_THRESHOLD, bool(stat < Z_THRESHOLD))


def _skip(name, eq, kind, reason) -> Check:
    return Check(name, eq, kind, 0, float("nan"), float("nan"), False, reason)


class _Tampered:
    """Source wrapper adding a constant to the visit-completion PGF of the first queue."""

    def __init__(self, engine: TransformEngine, delta: float):
        self.engine = engine
        self.model = engine.model
        self.mean_cycle = engine.mean_cycle
        self.vb1_at_zero = engine.vb1_at_zero
        self.delta = delta

    def bundle(self, z) -> PgfBundle:
        b = self.engine.bundle(z)
        vc = b.vc.copy()
        vc[..., 0] += self.delta
        return PgfBundle(b.point, b.vb, vc, b.sb, b.sc, b.gamma, b.mean_cycle)


def identity_checks(
    model: PollingModel,
    z: np.ndarray,
    omega: np.ndarray,
    tolerance: float = IDENTITY_TOL,
    config: EngineConfig | None = None,
    fault: float = 0.0,
) -> list:
    """Analytic-versus-analytic checks for a branching-type model."""
    engine = TransformEngine(model, config)
    source = _Tampered(engine, fault) if fault else engine
    ev = StationaryEvaluator(model, source)
    n = model.n_queues
    lam = model.arrival_rates
    b = source.bundle(z)
    sig = sigma(model, z)
    bsig = model.service_lst(np.repeat(sig[:, None], n, axis=1))
    g = b.gamma
    checks = [
        _identity("Eisenberg balance", "g(Vb + Sc) = Sb + g Vc", g * b.vb + b.sc - b.sb - g * b.vc, tolerance),
        _identity("balance, difference form", "g(Vb - Vc) = Sb - Sc", g * (b.vb - b.vc) - (b.sb - b.sc), tolerance),
        _identity("service completion from service beginning", "z Sc = Sb B(sigma)", b.sc * z - b.sb * bsig, tolerance),
        _identity(
            "service beginning from visit PGFs", "Sb (z - B(sigma)) = g z (Vb - Vc)",
            b.sb * (z - bsig) - g * z * (b.vb - b.vc), tolerance,
        ),
    ]
    nxt = np.roll(b.vb, -1, axis=1)
    if not model.zero_switchover:
        stil = np.stack([d.lst(sig) for d in model.switchovers], axis=1)
        checks.append(_identity("switchover chaining", "Vb_{i+1} = Vc_i S_i(sigma)", nxt - b.vc * stil, tolerance))
    else:
        vb0 = engine.vb1_at_zero
        if n > 1:
            checks.append(_identity("zero-switchover chaining", "Vb_{i+1} = Vc_i", nxt[:, :-1] - b.vc[:, :-1], tolerance))
        checks.append(
            _identity(
                "empty-system chaining at the first queue", "Vb_1 = Vc_N - Vb_1(0) sigma / lambda",
                b.vb[:, 0] - b.vc[:, -1] + vb0 / model.total_rate * sig, tolerance,
            )
        )
        origin = source.bundle(np.zeros(n))
        checks.append(
            _identity("first visit at an empty system", "Vb_1(0) = Vc_N(0) / 2", np.atleast_1d(origin.vb[0] - origin.vc[-1] / 2), tolerance)
        )
        checks.append(
            _identity(
                "visit rate to an empty system", "E C = Vb_1(0) / (lambda (1 - rho))",
                np.atleast_1d(vb0 / engine.mean_cycle - model.total_rate * (1 - model.rho)), tolerance,
            )
        )
    q10 = queue_length_pgf(ev, z)
    q9 = queue_length_pgf_visit_form(ev, z)
    checks.append(_identity("visit form equals completion form", "Q(visit form) = Q(departure form)", q9 - q10, tolerance))
    zt = _diag(z)
    bt = source.bundle(zt)
    checks.append(
        _identity(
            "total queue length via departures", "Q(z..z) = sum lambda_i Sc_i / lambda",
            queue_length_pgf(ev, zt) - (lam * bt.sc).sum(axis=1) / lam.sum(), tolerance,
        )
    )
    om_t = omega[np.all(omega == omega[:, :1], axis=1)][:, 0]
    w_t = workload_lst(ev, np.repeat(om_t[:, None], n, axis=1))
    mg1 = mg1_workload_lst(model, om_t)
    if not model.zero_switchover:
        sw = switch_workload_lst(ev, om_t)
        checks.append(_identity("workload decomposition", "W = W_MG1 W_switch", w_t - mg1 * sw, tolerance))
        checks.append(_identity("switchover workload LST", "W_switch = sum (Vc - Vb) / (s sigma)", sw - w_t / mg1, tolerance))
    else:
        checks.append(_identity("workload equals M/G/1 workload", "W = W_MG1 W_switch", w_t - mg1, tolerance))
    w_all = workload_lst(ev, omega)
    values = np.concatenate([b.vb.ravel(), b.vc.ravel(), b.sb.ravel(), b.sc.ravel(), q10, w_all])
    checks.append(
        Check("PGF/LST modulus <= 1", "|Q|, |W|, |V|, |S| <= 1", "identity", values.size,
              float(max(np.abs(values).max() - 1.0, 0.0)), tolerance,
              bool(np.abs(values).max() <= 1.0 + tolerance))
    )
    return checks


def simulation_checks(model: PollingModel, log, z: np.ndarray, omega: np.ndarray) -> list:
    """Simulation estimates against analytic values and exact relations."""
    n = model.n_queues
    lam = model.arrival_rates
    checks = []
    if model.is_branching:
        engine = TransformEngine(model)
        ev = StationaryEvaluator(model, engine)
        b = engine.bundle(z)
        for kind, attr, eq in (
            ("visit_begin", "vb", "Vb via branching maps"),
            ("visit_complete", "vc", "Vc via branching maps"),
            ("service_begin", "sb", "Sb (z - B(sigma)) = g z (Vb - Vc)"),
            ("service_complete", "sc", "z Sc = Sb B(sigma)"),
        ):
            zs = [sim.empirical_pgf(log, kind, i, z).zscore(getattr(b, attr)[:, i]) for i in range(n)]
            checks.append(_oracle(f"{attr} analytic vs simulated", eq, np.concatenate(zs)))
        checks.append(
            _oracle(
                "queue-length PGF vs time average", "Q = sum lambda_i (1 - z_i) Sc_i / sigma",
                sim.empirical_time_stationary(log, z).zscore(queue_length_pgf(ev, z)),
            )
        )
        checks.append(
            _oracle(
                "workload LST vs time average", "W = Vb, Vc at B(omega)",
                sim.empirical_time_stationary(log, omega, workload=True).zscore(workload_lst(ev, omega)),
            )
        )
        diag = omega[np.all(omega == omega[:, :1], axis=1)]
        if not model.zero_switchover:
            checks.append(
                _oracle(
                    "switchover workload LST vs simulation", "W_switch = sum (Vc - Vb) / (s sigma)",
                    sim.empirical_switch_workload(log, diag).zscore(switch_workload_lst(ev, diag[:, 0])),
                )
            )
        checks.append(
            _oracle("mean cycle length", "E C = Vb_1(0) / (lambda (1 - rho))", sim.empirical_mean_cycle(log).zscore(engine.mean_cycle))
        )
    else:
        for name, eq in (
            ("vb/vc/sb/sc analytic vs simulated", "analytic visit PGFs"),
            ("queue-length PGF vs time average", "Q = sum lambda_i (1 - z_i) Sc_i / sigma"),
            ("workload LST vs time average", "W = Vb, Vc at B(omega)"),
        ):
            checks.append(_skip(name, eq, "oracle", "no analytic visit PGFs for non-branching disciplines"))

    # discipline-free checks
    sc = [sim.empirical_pgf(log, "service_complete", i, z) for i in range(n)]
    w = lam * (1.0 - z)
    q10 = sum((sc[i] * (w[:, i] / w.sum(axis=1)) for i in range(n)))
    direct = sim.empirical_time_stationary(log, z)
    checks.append(_oracle("departure form with simulated Sc vs time average", "Q = sum lambda_i (1 - z_i) Sc_i / sigma", (q10 - direct).zscore(0.0)))

    ec = sim.empirical_mean_cycle(log)
    inv_gamma = 1.0 / sim.empirical_gamma(log)
    zs = [(inv_gamma[i] - ec * lam[i]).zscore(0.0) for i in range(n)]
    checks.append(_oracle("served per visit = lambda_i E C", "1/gamma_i = lambda_i E C", np.array(zs)))

    checks.append(_oracle("busy fraction = rho_i", "rho_i = lambda_i b_i", sim.busy_fraction(log).zscore(model.loads)))

    xs = np.linspace(0.1, 0.9, 9)
    zs = []
    for i in range(n):
        pts = np.ones((xs.size, n), dtype=complex)
        pts[:, i] = xs
        diff = sim.empirical_pgf(log, "arrival", i, pts) - sim.empirical_time_stationary(log, pts)
        zs.append(diff.zscore(0.0))
    checks.append(_oracle("arrivals see time averages", "arrival PGF = time PGF", np.concatenate(zs)))

    counts = {k: log.counts(k) for k in sim.EPOCH_KINDS}
    resid = np.concatenate([
        counts["visit_begin"] - counts["visit_complete"],
        counts["service_begin"] - counts["service_complete"],
    ]).astype(float)
    checks.append(_identity("epoch accounting", "visits and services close", resid, 0.5))

    if model.zero_switchover:
        origin = np.zeros((1, n))
        vb0 = sim.empirical_pgf(log, "visit_begin", 0, origin)
        vcn0 = sim.empirical_pgf(log, "visit_complete", n - 1, origin)
        checks.append(_oracle("first visit at an empty system (simulated)", "Vb_1(0) = Vc_N(0) / 2", (vb0 - vcn0 * 0.5).zscore(0.0)))
        c = model.total_rate * (1 - model.rho)
        checks.append(_oracle("mean cycle from empty-system visits (simulated)", "E C = Vb_1(0) / (lambda (1 - rho))", (ec - vb0 / c).zscore(0.0)))
    return checks


def run_verification(
    model: PollingModel,
    cycles: int = 1_000_000,
    seed: int = 1,
    tolerance: float = IDENTITY_TOL,
    fault: float = 0.0,
    warmup: int = 1000,
    batches: int = 50,
    replications: int = 1,
    workers: int = 1,
    z: np.ndarray | None = None,
    omega: np.ndarray | None = None,
) -> VerificationReport:
    start = time.perf_counter()
    n = model.n_queues
    z = default_z_probes(n) if z is None else z
    omega = default_omega_probes(model) if omega is None else omega
    report = VerificationReport(model_to_dict(model))
    cfg = EngineConfig()
    report.environment = {
        "seed": seed,
        "cycles": cycles,
        "warmup_cycles": warmup,
        "batches": batches,
        "replications": replications,
        "probe_seed": PROBE_SEED,
        "sigma_tol": cfg.sigma_tol,
        "fixed_point_tol": cfg.fixed_point_tol,
        "max_cycles": cfg.max_cycles,
        "identity_tolerance": tolerance,
        "fault_injection": fault,
    }
    if model.is_branching:
        report.checks.extend(identity_checks(model, z, omega, tolerance, cfg, fault))
    else:
        report.checks.append(
            _skip("transform identities", "analytic visit PGFs", "identity",
                  "needs analytic visit PGFs (branching disciplines only)")
        )
    if cycles > 0:
        sc = sim.SimConfig(model, seed, warmup, cycles, batches)
        log = sim.simulate_replications(sc, replications, omega, workers)
        report.checks.extend(simulation_checks(model, log, z, omega))
    report.runtime = time.perf_counter() - start
    return report
