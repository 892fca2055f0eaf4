"""Discrete-event simulation of a cyclic polling system.

The simulator is an independent oracle for the transform formulas: it knows
nothing about generating functions. It logs the joint queue-length vector at
every visit beginning/completion, service beginning/completion and arrival
epoch, the exact time spent in each joint queue-length state, and exact
integrals of ``exp(-<omega, V(t)>)`` along the piecewise-linear workload
path ``V``.

Queue lengths include the customer in service. With all switchover times
zero the server follows the parking convention: when it finds the system
empty at a visit beginning to the first queue it passes every queue once
(zero-length visits, all logged) and parks in front of the first queue until
the next arrival.

Estimates come with batch-means standard errors. Batches are contiguous
blocks of cycles, a cycle running from one visit beginning at the first
queue to the next.
"""
from __future__ import annotations

import json
import warnings
from collections import defaultdict, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InsufficientSamples, ParamError, UnknownProbe
from .model import Exponential, PollingModel, model_to_dict
from .transforms import PgfBundle, as_points

__all__ = [
    "EPOCH_KINDS",
    "SimConfig",
    "EpochSamples",
    "EpochLog",
    "BatchEstimate",
    "simulate",
    "simulate_replications",
    "merge_logs",
    "empirical_pgf",
    "empirical_time_stationary",
    "empirical_switch_workload",
    "empirical_mean_cycle",
    "empirical_gamma",
    "busy_fraction",
    "EmpiricalSource",
]

EPOCH_KINDS = ("visit_begin", "visit_complete", "service_begin", "service_complete", "arrival")
_VB, _VC, _SB, _SC, _ARR = range(5)

BLOCK = 4096
MAX_QUEUE = 10**8
SCHEMA_VERSION = 1

# substream purposes
_ARRIVALS, _SERVICES, _SWITCHOVERS = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    model: PollingModel
    seed: int
    warmup_cycles: int = 1000
    measured_cycles: int = 100_000
    n_batches: int = 50

    def __post_init__(self):
        if self.measured_cycles < self.n_batches:
            raise ParamError("measured_cycles must be at least n_batches")
        if self.n_batches < 2:
            raise ParamError("need at least two batches for standard errors")
        if self.warmup_cycles < 0:
            raise ParamError("warmup_cycles must be >= 0")


@dataclass
class EpochSamples:
    """Compressed samples: distinct ``(batch, state)`` rows with multiplicities."""

    states: np.ndarray  # (K, N) int
    batch: np.ndarray  # (K,) int
    weight: np.ndarray  # (K,) counts, or time for the occupancy record

    @property
    def total(self) -> float:
        return float(self.weight.sum())


@dataclass
class EpochLog:
    model: PollingModel
    seed: int
    warmup_cycles: int
    n_batches: int
    epochs: dict  # kind -> list of EpochSamples, one per queue
    occupancy: EpochSamples
    batch_cycles: np.ndarray  # (B,)
    batch_time: np.ndarray  # (B,)
    batch_switch_time: np.ndarray  # (B,)
    batch_busy: np.ndarray  # (B, N)
    omega_probes: np.ndarray  # (P, N)
    batch_workload: np.ndarray  # (B, P) integral of exp(-<omega, V>) dt
    batch_switch_workload: np.ndarray  # (B, P) same, switchover periods only
    max_queue_length: np.ndarray = field(default=None)

    @property
    def measured_cycles(self) -> int:
        return int(self.batch_cycles.sum())

    @property
    def measured_time(self) -> float:
        return float(self.batch_time.sum())

    def counts(self, kind: str) -> np.ndarray:
        return np.array([s.weight.sum() for s in self.epochs[kind]], dtype=np.int64)

    def to_summary(self, z_probes=None) -> dict:
        """Versioned JSON-ready summary with estimates and standard errors."""
        n = self.model.n_queues
        out = {
            "schema": "polling-lab/epoch-log",
            "version": SCHEMA_VERSION,
            "model": model_to_dict(self.model),
            "seed": self.seed,
            "warmup_cycles": self.warmup_cycles,
            "measured_cycles": self.measured_cycles,
            "n_batches": self.n_batches,
            "measured_time": self.measured_time,
            "counts": {k: self.counts(k).tolist() for k in EPOCH_KINDS},
        }
        ec = empirical_mean_cycle(self)
        out["mean_cycle"] = {"estimate": ec.value.real, "stderr": ec.stderr}
        g = empirical_gamma(self)
        out["served_per_visit"] = [
            {"queue": i, "estimate": (1 / g[i]).value.real, "stderr": (1 / g[i]).stderr}
            for i in range(n)
        ]
        bf = busy_fraction(self)
        out["busy_fraction"] = [
            {"queue": i, "estimate": bf[i].value.real, "stderr": bf[i].stderr} for i in range(n)
        ]
        probes = []
        if z_probes is not None:
            zp, _ = as_points(z_probes, n)
            est = empirical_time_stationary(self, zp)
            for k, z in enumerate(zp):
                probes.append(_probe_record("time_stationary", None, z, est[k]))
            for kind in EPOCH_KINDS[:4]:
                for i in range(n):
                    est = empirical_pgf(self, kind, i, zp)
                    for k, z in enumerate(zp):
                        probes.append(_probe_record(kind, i, z, est[k]))
        if len(self.omega_probes):
            est = empirical_time_stationary(self, self.omega_probes, workload=True)
            for k, w in enumerate(self.omega_probes):
                probes.append(_probe_record("workload", None, w, est[k]))
            if self.batch_switch_time.sum() > 0:
                est = empirical_switch_workload(self, self.omega_probes)
                for k, w in enumerate(self.omega_probes):
                    probes.append(_probe_record("switch_workload", None, w, est[k]))
        out["probes"] = probes
        return out


def _probe_record(kind, queue, point, est):
    rec = {"kind": kind}
    if queue is not None:
        rec["queue"] = queue
    rec["point"] = [[complex(c).real, complex(c).imag] for c in point]
    rec["estimate_re"] = float(est.value.real)
    rec["estimate_im"] = float(est.value.imag)
    rec["stderr"] = float(est.stderr)
    return rec


class _Variates:
    """Block-buffered inversion sampling from one Philox substream."""

    def __init__(self, dist, seed: int, purpose: int, queue: int):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(purpose, queue))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._dist = dist
        self._width = dist.n_uniforms

    def __iter__(self):
        while True:
            u = self._gen.random((BLOCK, self._width))
            yield from self._dist.from_uniforms(u).tolist()


def _batch_edges(warmup: int, measured: int, n_batches: int) -> list[int]:
    """Cycle indices at which batches start; the last entry ends the run."""
    return [warmup + (measured * b) // n_batches for b in range(n_batches + 1)]


def simulate(cfg: SimConfig, omega_probes=(), trace=None) -> EpochLog:
    """Run one simulation and return its `EpochLog`.

    ``omega_probes`` are the workload-LST arguments to integrate (an
    ``(P, N)`` array); queue-length PGFs need no registration because the
    full joint occupancy record is kept. ``trace``, if given, is a text
    stream receiving one JSON line per event.
    """
    model = cfg.model
    n = model.n_queues
    lam = model.arrival_rates
    omega = np.zeros((0, n), dtype=complex) if len(omega_probes) == 0 else as_points(omega_probes, n)[0]
    if np.any(omega.real < 0):
        raise ParamError("workload probes need Re omega >= 0")
    for i, q in enumerate(model.queues):
        if q.discipline.kind == "k-limited":
            s = model.total_switchover
            if model.rho + lam[i] * s / q.discipline.k >= 1:
                warnings.warn(
                    f"queue {i} is {q.discipline} with rho + lambda_i s / k >= 1; "
                    "the simulation may be unstable",
                    RuntimeWarning,
                    stacklevel=2,
                )

    seed = int(cfg.seed)
    inter = [iter(_Variates(_exp_of(lam[j]), seed, _ARRIVALS, j)).__next__ for j in range(n)]
    svc = [iter(_Variates(q.service, seed, _SERVICES, j)).__next__ for j, q in enumerate(model.queues)]
    swo = [iter(_Variates(d, seed, _SWITCHOVERS, j)).__next__ for j, d in enumerate(model.switchovers)]
    sw_zero = [d.mean() == 0.0 and d.family == "deterministic" for d in model.switchovers]
    parking = model.zero_switchover

    kinds = [q.discipline.kind for q in model.queues]
    limits = [q.discipline.k for q in model.queues]

    edges = _batch_edges(cfg.warmup_cycles, cfg.measured_cycles, cfg.n_batches)
    n_batches = cfg.n_batches

    # mutable simulation state
    L = [0] * n
    V = [0.0] * n
    work = [deque() for _ in range(n)]
    na = [inter[j]() for j in range(n)]
    t = 0.0
    max_len = [0] * n

    epochs = defaultdict(int)  # (kind * n + queue, batch, state) -> count
    occ = defaultdict(float)  # (batch, state) -> time
    segs = []  # (dur, served, switching, V...)
    batch_time = np.zeros(n_batches)
    batch_switch = np.zeros(n_batches)
    batch_busy = np.zeros((n_batches, n))
    batch_cycles = np.zeros(n_batches, dtype=np.int64)
    batch_w = np.zeros((n_batches, len(omega)), dtype=complex)
    batch_ws = np.zeros((n_batches, len(omega)), dtype=complex)

    measuring = False
    batch = -1
    cycle = -1
    next_edge_idx = 0

    def flush_segments():
        if not segs or batch < 0:
            segs.clear()
            return
        arr = np.array(segs)
        segs.clear()
        dur = arr[:, 0]
        served = arr[:, 1].astype(np.int64)
        switching = arr[:, 2] > 0
        vv = arr[:, 3:]
        batch_time[batch] += dur.sum()
        batch_switch[batch] += dur[switching].sum()
        for i in range(n):
            batch_busy[batch, i] += dur[served == i].sum()
        if len(omega):
            batch_w[batch] += _workload_integrals(vv, dur, served, omega).sum(axis=0)
            if np.any(switching):
                batch_ws[batch] += _workload_integrals(
                    vv[switching], dur[switching], served[switching], omega
                ).sum(axis=0)

    def emit(kind, i):
        if measuring:
            epochs[(kind * n + i, batch, tuple(L))] += 1
        if trace is not None:
            trace.write(json.dumps({"t": t, "event": EPOCH_KINDS[kind], "queue": i, "L": L}) + "\n")

    def advance(d, served, switching):
        """Let time run for ``d`` with the server in the given mode."""
        nonlocal t
        t_end = t + d
        while True:
            j = 0
            ta = na[0]
            for k in range(1, n):
                if na[k] < ta:
                    ta = na[k]
                    j = k
            if ta >= t_end:
                break
            dur = ta - t
            if dur > 0.0:
                if measuring:
                    occ[(batch, tuple(L))] += dur
                    segs.append((dur, served, switching, *V))
                if served >= 0:
                    V[served] -= dur
            t = ta
            arrive(j)
        dur = t_end - t
        if dur > 0.0:
            if measuring:
                occ[(batch, tuple(L))] += dur
                segs.append((dur, served, switching, *V))
            if served >= 0:
                V[served] -= dur
        t = t_end

    def arrive(j):
        if measuring:
            epochs[(_ARR * n + j, batch, tuple(L))] += 1
        b = svc[j]()
        L[j] += 1
        work[j].append(b)
        V[j] += b
        if L[j] > max_len[j]:
            max_len[j] = L[j]
            if L[j] > MAX_QUEUE:
                raise DivergenceError(f"queue {j} exceeded {MAX_QUEUE} customers")
        na[j] = t + inter[j]()
        if trace is not None:
            trace.write(json.dumps({"t": t, "event": "arrival", "queue": j, "L": L}) + "\n")

    def wait_for_arrival():
        """Parked server: idle until the next arrival and take it."""
        nonlocal t
        ta = min(na)
        advance(ta - t, -1, 0)
        t = ta
        arrive(na.index(ta))

    def serve_one(i):
        emit(_SB, i)
        b = work[i].popleft()
        advance(b, i, 0)
        L[i] -= 1
        if L[i] == 0:
            V[i] = 0.0
        emit(_SC, i)

    pos = 0
    while True:
        if pos == 0:
            cycle += 1
            if cycle == edges[next_edge_idx]:
                flush_segments()
                if next_edge_idx == n_batches:
                    break
                measuring = True
                batch = next_edge_idx
                next_edge_idx += 1
            if measuring:
                batch_cycles[batch] += 1
        emit(_VB, pos)
        if parking and pos == 0 and not any(L):
            emit(_VC, 0)
            for j in range(1, n):
                emit(_VB, j)
                emit(_VC, j)
            wait_for_arrival()
            continue
        kind = kinds[pos]
        if kind == "exhaustive":
            while L[pos] > 0:
                serve_one(pos)
        elif kind == "gated":
            for _ in range(L[pos]):
                serve_one(pos)
        else:
            k = limits[pos]
            served = 0
            while L[pos] > 0 and served < k:
                serve_one(pos)
                served += 1
        emit(_VC, pos)
        if not sw_zero[pos]:
            advance(swo[pos](), -1, 1)
        pos = (pos + 1) % n

    return _build_log(cfg, omega, epochs, occ, batch_cycles, batch_time, batch_switch,
                      batch_busy, batch_w, batch_ws, np.array(max_len))


def _exp_of(rate):
    return Exponential(rate)


def _workload_integrals(vv, dur, served, omega):
    """Exact integrals of exp(-<omega, V(t)>) over segments; returns (K, P)."""
    base = np.exp(-(vv @ omega.T))  # (K, P)
    idx = np.clip(served, 0, None)
    om = omega[:, idx].T  # (K, P): omega of the served queue
    d = dur[:, None]
    x = om * d
    nz = om != 0
    growth = np.where(nz, np.expm1(x) / np.where(nz, om, 1.0), d)
    factor = np.where((served >= 0)[:, None], growth, d)
    return base * factor


def _build_log(cfg, omega, epochs, occ, batch_cycles, batch_time, batch_switch,
               batch_busy, batch_w, batch_ws, max_len):
    n = cfg.model.n_queues
    grouped = defaultdict(list)
    for (code, b, state), c in epochs.items():
        grouped[code].append((b, state, c))
    per_kind = {}
    for kind_idx, kind in enumerate(EPOCH_KINDS):
        per_kind[kind] = [_samples(grouped.get(kind_idx * n + i, []), n) for i in range(n)]
    occupancy = _samples([(b, s, w) for (b, s), w in occ.items()], n, weight_dtype=float)
    return EpochLog(
        model=cfg.model,
        seed=cfg.seed,
        warmup_cycles=cfg.warmup_cycles,
        n_batches=cfg.n_batches,
        epochs=per_kind,
        occupancy=occupancy,
        batch_cycles=batch_cycles,
        batch_time=batch_time,
        batch_switch_time=batch_switch,
        batch_busy=batch_busy,
        omega_probes=omega,
        batch_workload=batch_w,
        batch_switch_workload=batch_ws,
        max_queue_length=max_len,
    )


def _samples(rows, n, weight_dtype=np.int64) -> EpochSamples:
    rows = sorted(rows)
    if not rows:
        return EpochSamples(np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=np.int64),
                            np.zeros(0, dtype=weight_dtype))
    batch = np.array([r[0] for r in rows], dtype=np.int64)
    states = np.array([r[1] for r in rows], dtype=np.int64).reshape(len(rows), n)
    weight = np.array([r[2] for r in rows], dtype=weight_dtype)
    return EpochSamples(states, batch, weight)


def merge_logs(logs) -> EpochLog:
    """Concatenate the batches of independent replications of the same model."""
    logs = list(logs)
    first = logs[0]
    for lg in logs[1:]:
        if lg.model != first.model or not np.array_equal(lg.omega_probes, first.omega_probes):
            raise ValueError("can only merge logs of the same model and probes")
    offsets = np.cumsum([0] + [lg.n_batches for lg in logs])

    def cat(get):
        parts = [get(lg) for lg in logs]
        return EpochSamples(
            np.concatenate([p.states for p in parts]),
            np.concatenate([p.batch + off for p, off in zip(parts, offsets)]),
            np.concatenate([p.weight for p in parts]),
        )

    n = first.model.n_queues
    epochs = {k: [cat(lambda lg, k=k, i=i: lg.epochs[k][i]) for i in range(n)] for k in EPOCH_KINDS}
    return EpochLog(
        model=first.model,
        seed=first.seed,
        warmup_cycles=first.warmup_cycles,
        n_batches=int(offsets[-1]),
        epochs=epochs,
        occupancy=cat(lambda lg: lg.occupancy),
        batch_cycles=np.concatenate([lg.batch_cycles for lg in logs]),
        batch_time=np.concatenate([lg.batch_time for lg in logs]),
        batch_switch_time=np.concatenate([lg.batch_switch_time for lg in logs]),
        batch_busy=np.concatenate([lg.batch_busy for lg in logs]),
        omega_probes=first.omega_probes,
        batch_workload=np.concatenate([lg.batch_workload for lg in logs]),
        batch_switch_workload=np.concatenate([lg.batch_switch_workload for lg in logs]),
        max_queue_length=np.max([lg.max_queue_length for lg in logs], axis=0),
    )


def _run_replication(args):
    cfg, omega = args
    return simulate(cfg, omega)


def simulate_replications(cfg: SimConfig, replications: int, omega_probes=(), workers: int = 1) -> EpochLog:
    """Split ``cfg.measured_cycles`` over independent replications and merge them.

    Replication ``r`` uses seed ``cfg.seed + r``; each has its own warmup and
    ``cfg.n_batches // replications`` batches, so the merged log does not
    depend on ``workers``.
    """
    if replications == 1:
        return simulate(cfg, omega_probes)
    per = cfg.measured_cycles // replications
    nb = max(2, cfg.n_batches // replications)
    cfgs = [
        SimConfig(cfg.model, cfg.seed + r, cfg.warmup_cycles, per, nb) for r in range(replications)
    ]
    jobs = [(c, omega_probes) for c in cfgs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, replications)) as pool:
            logs = list(pool.map(_run_replication, jobs))
    else:
        logs = [_run_replication(j) for j in jobs]
    return merge_logs(logs)


# --- estimators --------------------------------------------------------------


@dataclass(frozen=True)
class BatchEstimate:
    """A point estimate with per-batch linearised residuals.

    The standard error is ``sqrt(sum |r_b|^2 / (B (B - 1)))``. Linear
    combinations of estimates from the same run combine their residuals, so
    differences of correlated estimators get honest standard errors. For
    complex values the standard error is the root of the summed real and
    imaginary variances.
    """

    value: np.ndarray
    residuals: np.ndarray  # (..., B)

    @property
    def stderr(self):
        b = self.residuals.shape[-1]
        var = (np.abs(self.residuals) ** 2).sum(axis=-1) / (b * (b - 1))
        return np.sqrt(var)

    def zscore(self, reference):
        diff = np.abs(self.value - reference)
        se = self.stderr
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
        return z

    def __getitem__(self, k):
        return BatchEstimate(self.value[k], self.residuals[k])

    def __len__(self):
        return len(self.value)

    def __add__(self, other):
        if isinstance(other, BatchEstimate):
            return BatchEstimate(self.value + other.value, self.residuals + other.residuals)
        return BatchEstimate(self.value + other, self.residuals)

    __radd__ = __add__

    def __neg__(self):
        return BatchEstimate(-self.value, -self.residuals)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = np.asarray(c)
        return BatchEstimate(self.value * c, self.residuals * c[..., None])

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / np.asarray(c))

    def __rtruediv__(self, c):
        # delta method for c / X
        v = self.value
        return BatchEstimate(c / v, -self.residuals * (c / v**2)[..., None])


def _ratio(num: np.ndarray, den: np.ndarray) -> BatchEstimate:
    """Ratio-of-sums estimator from per-batch numerators ``(..., B)`` and denominators ``(B,)``."""
    total = den.sum()
    if total <= 0:
        raise InsufficientSamples("no samples in the measured batches")
    value = num.sum(axis=-1) / total
    resid = (num - value[..., None] * den) / den.mean()
    return BatchEstimate(value, resid)


def _pin(est: BatchEstimate, exact: np.ndarray) -> BatchEstimate:
    """Set the estimate to exactly 1 with zero error where the transform is 1 by definition."""
    if not np.any(exact):
        return est
    value, resid = est.value.copy(), est.residuals.copy()
    value[exact] = 1.0
    resid[exact] = 0.0
    return BatchEstimate(value, resid)


def _monomials(states: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``prod_j z_j ** L_j`` for every state row and every point: (P, K)."""
    out = np.ones((z.shape[0], states.shape[0]), dtype=complex)
    for j in range(states.shape[1]):
        out *= z[:, j : j + 1] ** states[None, :, j]
    return out


def _per_batch(samples: EpochSamples, z: np.ndarray, n_batches: int):
    vals = _monomials(samples.states, z) * samples.weight[None, :]
    num = np.zeros((z.shape[0], n_batches), dtype=complex)
    for p in range(z.shape[0]):
        num[p] = np.bincount(samples.batch, vals[p].real, n_batches) + 1j * np.bincount(
            samples.batch, vals[p].imag, n_batches
        )
    den = np.bincount(samples.batch, samples.weight.astype(float), n_batches)
    return num, den


MIN_SAMPLES = 1000


def empirical_pgf(log: EpochLog, kind: str, queue: int, z) -> BatchEstimate:
    """Sample mean of ``prod_j z_j ** L_j`` over the logged epochs of one class."""
    if kind not in EPOCH_KINDS:
        raise ValueError(f"unknown epoch class {kind!r}")
    samples = log.epochs[kind][queue]
    if samples.total < MIN_SAMPLES:
        raise InsufficientSamples(f"{kind} at queue {queue}: {samples.total:.0f} samples < {MIN_SAMPLES}")
    zp, single = as_points(z, log.model.n_queues)
    num, den = _per_batch(samples, zp, log.n_batches)
    est = _pin(_ratio(num, den), np.all(zp == 1.0, axis=1))
    return est[0] if single else est


def empirical_time_stationary(log: EpochLog, probe, workload: bool = False) -> BatchEstimate:
    """Time average of ``prod z_j ** L_j(t)``, or of ``exp(-<omega, V(t)>)`` with ``workload=True``.

    Workload probes must have been passed to `simulate`.
    """
    n = log.model.n_queues
    pts, single = as_points(probe, n)
    if workload:
        num = _lookup_workload(log, pts, log.batch_workload)
        est = _pin(_ratio(num, log.batch_time), np.all(pts == 0.0, axis=1))
    else:
        num, _ = _per_batch(log.occupancy, pts, log.n_batches)
        est = _pin(_ratio(num, log.batch_time), np.all(pts == 1.0, axis=1))
    return est[0] if single else est


def empirical_switch_workload(log: EpochLog, probe) -> BatchEstimate:
    """Time average of ``exp(-<omega, V(t)>)`` over switchover periods only."""
    if log.batch_switch_time.sum() <= 0:
        raise InsufficientSamples("no switchover time was logged")
    n = log.model.n_queues
    arr = np.asarray(probe, dtype=complex)
    if arr.ndim == 0 or (arr.ndim == 1 and n != 1 and arr.shape[0] != n):
        arr = np.repeat(np.atleast_1d(arr)[:, None], n, axis=1)
    pts, single = as_points(arr, n)
    num = _lookup_workload(log, pts, log.batch_switch_workload)
    est = _ratio(num, log.batch_switch_time)
    return est[0] if single and np.ndim(probe) != 0 else (est[0] if np.ndim(probe) == 0 else est)


def _lookup_workload(log, pts, table):
    cols = []
    for w in pts:
        hit = np.nonzero(np.all(np.isclose(log.omega_probes, w, rtol=0, atol=1e-15), axis=1))[0]
        if len(hit) == 0:
            raise UnknownProbe(f"workload probe {w} was not registered before the simulation")
        cols.append(hit[0])
    return table[:, cols].T


def empirical_mean_cycle(log: EpochLog) -> BatchEstimate:
    return _ratio(log.batch_time[None, :], log.batch_cycles.astype(float))[0]


def empirical_gamma(log: EpochLog) -> BatchEstimate:
    """Visit beginnings per service beginning at every queue."""
    n, b = log.model.n_queues, log.n_batches
    visits = np.stack([np.bincount(s.batch, s.weight.astype(float), b) for s in log.epochs["visit_begin"]])
    services = np.stack([np.bincount(s.batch, s.weight.astype(float), b) for s in log.epochs["service_begin"]])
    out = []
    for i in range(n):
        out.append(_ratio(visits[i][None, :], services[i])[0])
    return BatchEstimate(np.array([e.value for e in out]), np.stack([e.residuals for e in out]))


def busy_fraction(log: EpochLog) -> BatchEstimate:
    """Fraction of time the server spends serving each queue."""
    return _ratio(log.batch_busy.T, log.batch_time)


class EmpiricalSource:
    """Simulation estimates standing in for the analytic PGF engine.

    Provides the visit and service PGFs, the mean cycle and the ratios
    ``gamma_i`` measured in one run. Works for every discipline.
    """

    def __init__(self, log: EpochLog):
        self.log = log
        self.model = log.model
        self.mean_cycle = float(empirical_mean_cycle(log).value.real)
        self.gamma = empirical_gamma(log).value.real

    def estimates(self, z) -> dict:
        n = self.model.n_queues
        zp, _ = as_points(z, n)
        return {
            kind: [empirical_pgf(self.log, kind, i, zp) for i in range(n)]
            for kind in EPOCH_KINDS[:4]
        }

    def bundle(self, z) -> PgfBundle:
        n = self.model.n_queues
        zp, single = as_points(z, n)
        est = self.estimates(zp)
        arrs = [np.stack([e.value for e in est[k]], axis=1) for k in EPOCH_KINDS[:4]]
        b = PgfBundle(zp, *arrs, self.gamma.copy(), self.mean_cycle)
        return b.at(0) if single else b
