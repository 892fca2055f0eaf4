"""Time-stationary queue-length PGF and workload LST of a polling system.

Both laws are assembled from the embedded-epoch PGFs supplied by a *source*:
the analytic `TransformEngine` for branching disciplines, or simulation
estimates (`polling_lab.simulation.EmpiricalSource`) for any discipline.
A source exposes ``bundle(z) -> PgfBundle`` and ``mean_cycle``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InversionError, SingularityError
from .model import PollingModel
from .transforms import TransformEngine, as_points

__all__ = [
    "StationaryEvaluator",
    "MarginalPmf",
    "queue_length_pgf",
    "queue_length_pgf_visit_form",
    "workload_lst",
    "mg1_workload_lst",
    "switch_workload_lst",
    "marginal_pmf",
    "mean_queue_length",
]

NEAR_ONE = 1e-8
POLE_TOL = 1e-10
SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class StationaryEvaluator:
    model: PollingModel
    pgf_source: object

    def __post_init__(self):
        src_model = getattr(self.pgf_source, "model", None)
        if src_model is not None and (
            src_model.n_queues != self.model.n_queues
            or not np.allclose(src_model.arrival_rates, self.model.arrival_rates)
        ):
            raise ValueError("pgf_source and model disagree on the number of queues or rates")

    @classmethod
    def analytic(cls, model: PollingModel, config=None) -> "StationaryEvaluator":
        return cls(model, TransformEngine(model, config))

    @property
    def mean_cycle(self) -> float:
        return self.pgf_source.mean_cycle

    def bundle(self, z):
        return self.pgf_source.bundle(z)


def _lam(ev):
    return ev.model.arrival_rates


def queue_length_pgf(ev: StationaryEvaluator, z):
    """Joint queue-length PGF at an arbitrary time.

    Convex combination of the service-completion PGFs with weights
    ``lambda_i (1 - z_i) / sum_j lambda_j (1 - z_j)``; exactly 1 at z = 1.
    """
    z, single = as_points(z, ev.model.n_queues)
    ones = np.all(z == 1.0, axis=1)
    w = _lam(ev) * (1.0 - z)
    den = w.sum(axis=1)
    b = ev.bundle(z)
    out = (w * b.sc).sum(axis=1) / np.where(ones, 1.0, den)
    out[ones] = 1.0
    return out[0] if single else out


def queue_length_pgf_visit_form(ev: StationaryEvaluator, z):
    """Joint queue-length PGF assembled from visit-beginning and visit-completion PGFs.

    Falls back to the service-completion form where ``sum_j lambda_j(1-z_j)``
    is below 1e-8 in modulus, since both forms are 0/0 there.
    """
    model = ev.model
    z, single = as_points(z, model.n_queues)
    lam = _lam(ev)
    sig = (lam * (1.0 - z)).sum(axis=1)
    near = np.abs(sig) < NEAR_ONE
    b = ev.bundle(z)
    bsig = model.service_lst(np.repeat(sig[:, None], model.n_queues, axis=1))
    denom = z - bsig
    safe_sig = np.where(near, 1.0, sig)[:, None]
    singular = np.abs(denom) < 1e-8
    service_part = np.where(
        singular,
        # z_i (vb_i - vc_i) / (z_i - B_i) is the regularised sb_i / gamma_i
        b.sb * (1.0 - bsig) / b.gamma,
        (b.vb - b.vc) * z * (1.0 - bsig) / np.where(singular, 1.0, denom),
    )
    switch_part = b.vc - np.roll(b.vb, -1, axis=1)
    out = (service_part + switch_part).sum(axis=1) / safe_sig[:, 0] / ev.mean_cycle
    if np.any(near):
        out[near] = queue_length_pgf(ev, z[near])
    return out[0] if single else out


def workload_lst(ev: StationaryEvaluator, omega):
    """Joint workload LST at an arbitrary time.

    Evaluates the visit PGFs at ``(B_1(omega_1), ..., B_N(omega_N))``. Where
    ``sigma(B(omega)) = omega_i`` the i-th term is 0/0; the LST is analytic
    there, so the value is Richardson-extrapolated from symmetric
    perturbations of ``omega_i``. `SingularityError` is raised only if that
    fallback also lands on the singular set.
    """
    model = ev.model
    omega, single = as_points(omega, model.n_queues)
    if np.any(omega.real < 0):
        raise DomainError("workload LST needs Re omega >= 0")
    out, bad = _workload_raw(ev, omega)
    for p in np.nonzero(bad.any(axis=1))[0]:
        i = int(np.nonzero(bad[p])[0][0])
        out[p] = _workload_removable(ev, omega[p], i)
    return out[0] if single else out


def _workload_raw(ev, omega):
    model = ev.model
    zero = np.all(omega == 0, axis=1)
    zpt = model.service_lst(omega)
    zpt[zero] = 1.0
    sig = (_lam(ev) * (1.0 - zpt)).sum(axis=1)
    gap = sig[:, None] - omega
    active = omega != 0
    bad = active & (np.abs(gap) < POLE_TOL * np.maximum(1.0, np.abs(omega))) & ~zero[:, None]
    b = ev.bundle(zpt)
    safe_sig = np.where(zero, 1.0, sig)[:, None]
    ok = active & ~bad
    terms = np.where(ok, (b.vb - b.vc) / safe_sig * omega / np.where(ok, gap, 1.0), 0.0)
    out = terms.sum(axis=1) / ev.mean_cycle
    out[zero] = 1.0
    return out, bad


def _workload_removable(ev, point, i):
    h = 1e-5 * max(1.0, abs(point[i]))
    steps = np.array([h, -h, 2 * h, -2 * h])
    if point[i].real < 2 * h:
        # one-sided near the imaginary axis: shift along +Re only
        steps = np.array([h, 2 * h, 3 * h, 4 * h])
    pts = np.repeat(point[None, :], 4, axis=0)
    pts[:, i] += steps
    vals, bad = _workload_raw(ev, pts)
    if bad.any():
        raise SingularityError(f"cannot resolve sigma(B(omega)) = omega_{i} at {point}")
    if steps[1] < 0:
        a1, a2 = 0.5 * (vals[0] + vals[1]), 0.5 * (vals[2] + vals[3])
        return (4.0 * a1 - a2) / 3.0
    # cubic extrapolation back to the step 0
    return 4 * vals[0] - 6 * vals[1] + 4 * vals[2] - vals[3]


def mg1_workload_lst(model: PollingModel, omega):
    """Pollaczek-Khinchine workload LST of the M/G/1 queue fed by all queues.

    Below ``|omega| = 1e-6`` the second-order expansion of ``1 - B_j(omega)``
    replaces the 0/0 quotient.
    """
    w = np.asarray(omega, dtype=complex)
    if np.any(w.real < 0):
        raise DomainError("workload LST needs Re omega >= 0")
    lam = model.arrival_rates
    rho = model.rho
    small = np.abs(w) < SERIES_CUTOFF
    safe = np.where(small, 1.0, w)
    drift = sum(l * (1.0 - q.service.lst(safe)) for l, q in zip(lam, model.queues))
    exact = (1.0 - rho) * safe / (safe - drift)
    m2 = float((lam * model.service_second_moments).sum())
    series = (1.0 - rho) / (1.0 - rho + 0.5 * m2 * w)
    out = np.where(small, series, exact)
    return complex(out) if out.ndim == 0 else out


def switch_workload_lst(ev: StationaryEvaluator, omega):
    """LST of the total workload at an arbitrary epoch of a switchover period."""
    model = ev.model
    s = model.total_switchover
    if s == 0:
        raise DomainError("no switchover periods exist when all switchover times are zero")
    w = np.atleast_1d(np.asarray(omega, dtype=complex))
    scalar = np.ndim(omega) == 0
    if np.any(w.real < 0):
        raise DomainError("workload LST needs Re omega >= 0")
    diag = np.repeat(w[:, None], model.n_queues, axis=1)
    zpt = model.service_lst(diag)
    zero = w == 0
    zpt[zero] = 1.0
    b = ev.bundle(zpt)
    den = (_lam(ev) * (1.0 - zpt)).sum(axis=1)
    out = (b.vc - b.vb).sum(axis=1) / np.where(zero, 1.0, den) / s
    out[zero] = 1.0
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class MarginalPmf:
    queue: int
    probabilities: np.ndarray

    def mean(self) -> float:
        p = self.probabilities
        return float((np.arange(p.size) * p).sum())

    @property
    def mass(self) -> float:
        return float(self.probabilities.sum())


def _marginal_points(n: int, i: int, values) -> np.ndarray:
    pts = np.ones((len(values), n), dtype=complex)
    pts[:, i] = values
    return pts


def marginal_pmf(ev: StationaryEvaluator, i: int, n_max: int) -> MarginalPmf:
    """Distribution of the number of customers in queue ``i``, ``P(L_i = n)`` for ``n <= n_max``.

    Discrete Fourier inversion of the marginal PGF on the unit circle with
    ``M = max(4096, 8 n_max)`` nodes.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    m = max(2**12, 8 * n_max)
    nodes = np.exp(2j * np.pi * np.arange(m) / m)
    # Q(conj z) = conj Q(z): evaluate the upper half circle only
    half = m // 2 + 1
    vals_half = queue_length_pgf(ev, _marginal_points(ev.model.n_queues, i, nodes[:half]))
    vals = np.empty(m, dtype=complex)
    vals[:half] = vals_half
    vals[half:] = np.conj(vals_half[1 : m - half + 1][::-1])
    coeffs = np.fft.fft(vals)[: n_max + 1] / m
    if np.any(np.abs(coeffs.imag) > 1e-8):
        raise InversionError(f"imaginary residue {np.abs(coeffs.imag).max():.3g} exceeds 1e-8")
    p = coeffs.real
    if np.any(p < -1e-10):
        raise InversionError(f"negative probability {p.min():.3g} from inversion")
    return MarginalPmf(i, np.clip(p, 0.0, None))


def mean_queue_length(ev: StationaryEvaluator, i: int, radius: float | None = None, nodes: int = 64) -> float:
    """Mean number of customers in queue ``i``.

    Derivative of the marginal PGF at 1 by the Cauchy integral over the
    circle ``|z - 1| = radius`` (trapezoidal rule, ``nodes`` points). A
    finite circle avoids the cancellation that a small difference step
    suffers near ``z = 1``. The default radius ``min(0.2, (1 - rho) / 4)``
    keeps the circle well inside the disk where the PGF is analytic.
    """
    n = ev.model.n_queues
    r = min(0.2, 0.25 * (1.0 - ev.model.rho)) if radius is None else radius
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    v = queue_length_pgf(ev, _marginal_points(n, i, 1.0 + r * np.exp(1j * theta)))
    return float((v * np.exp(-1j * theta)).mean().real / r)
