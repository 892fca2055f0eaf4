"""Embedded-epoch generating functions for branching-type polling systems.

For a point ``z`` (an N-vector, or a stack of them along the leading axis)
the engine returns the joint queue-length PGFs at visit beginnings (``vb``),
visit completions (``vc``), service beginnings (``sb``) and service
completions (``sc``) of every queue.

Visit-completion laws follow from visit-beginning laws by one substitution
per queue (the branching map). Chaining these maps backwards around the
cycle, together with the switchover factors, expresses ``vb`` as an
absolutely convergent product (switchovers present) or series (all
switchovers zero, server parks in front of the first queue when the system
is empty).

All evaluation is vectorised over points; nothing here checks that points
lie in the unit polydisk, so callers may step slightly outside it (the
laws used here are analytic in a neighbourhood of the closed polydisk).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DomainError, SingularityError, UnsupportedDiscipline
from .model import ParametricDistribution, PollingModel, mean_cycle

__all__ = [
    "EngineConfig",
    "PgfBundle",
    "TransformEngine",
    "as_points",
    "sigma",
    "busy_period_lst",
    "branching_map",
    "visit_pgfs",
    "service_begin_pgf",
    "service_complete_pgf",
]


@dataclass(frozen=True)
class EngineConfig:
    sigma_tol: float = 1e-14
    fixed_point_tol: float = 1e-14
    max_cycles: int = 100_000
    max_iterations: int = 100_000
    # run the cycle series this many times longer than the stopping rule asks
    depth_multiplier: int = 1
    singular_tol: float = 1e-8
    richardson_steps: tuple = (1e-5, 2e-5)

    def refined(self) -> "EngineConfig":
        """Halved tolerances and doubled truncation depth."""
        return replace(
            self,
            sigma_tol=self.sigma_tol / 2,
            fixed_point_tol=self.fixed_point_tol / 2,
            depth_multiplier=2 * self.depth_multiplier,
        )


_ROUNDING = 4 * np.finfo(float).eps
STALL_LEVEL = 1e-12


def _settled(size, prev, tol):
    """True once every ``|sigma|`` is below ``tol`` or has stalled at rounding level.

    Near ``(1, ..., 1)`` the cycle map contracts, so ``|sigma|`` keeps
    shrinking until rounding in the fixed points sets a floor. A term below
    ``STALL_LEVEL`` that no longer shrinks has reached that floor.
    """
    done = size < tol
    if prev is not None:
        done |= (size < STALL_LEVEL) & (size >= prev)
    return bool(np.all(done))


def as_points(z, n: int) -> tuple[np.ndarray, bool]:
    """Return ``(points, single)`` with ``points`` of shape ``(P, n)`` complex."""
    arr = np.asarray(z, dtype=complex)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError(f"expected points with {n} coordinates, got shape {np.shape(z)}")
    return arr, single


def sigma(model: PollingModel, z) -> np.ndarray | complex:
    """``sum_j lambda_j (1 - z_j)`` along the last axis."""
    z = np.asarray(z, dtype=complex)
    out = (model.arrival_rates * (1.0 - z)).sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def busy_period_lst(
    rate: float,
    service: ParametricDistribution,
    omega,
    tol: float = 1e-14,
    max_iter: int = 100_000,
):
    """LST of an M/G/1 busy period with arrival ``rate`` and the given service law.

    Solves ``theta = B(omega + rate * (1 - theta))`` by fixed-point iteration
    from ``theta = 0``. The map is a contraction with modulus at most the
    load ``rate * E[B]`` on the region of interest. The step is measured
    against ``1 - theta`` so that ``rate * (1 - theta)`` stays accurate
    near ``omega = 0``, where callers feed it back into further maps.
    """
    omega = np.asarray(omega, dtype=complex)
    theta = np.zeros_like(omega)
    for _ in range(max_iter):
        new = service.lst(omega + rate * (1.0 - theta))
        step = np.abs(new - theta)
        if np.all((step < tol * np.abs(1.0 - new)) | (step <= _ROUNDING)):
            return complex(new) if new.ndim == 0 else new
        theta = new
    raise ConvergenceError(f"busy-period iteration did not reach tol={tol} in {max_iter} steps")


def _branching_map(model, i, z, cfg):
    q = model.queues[i]
    out = z.copy()
    if q.discipline.kind == "gated":
        out[..., i] = q.service.lst(sigma(model, z))
    elif q.discipline.kind == "exhaustive":
        lam = model.arrival_rates
        others = (lam * (1.0 - z)).sum(axis=-1) - lam[i] * (1.0 - z[..., i])
        out[..., i] = busy_period_lst(
            lam[i], q.service, others, cfg.fixed_point_tol, cfg.max_iterations
        )
    else:
        raise UnsupportedDiscipline(f"queue {i} is {q.discipline}; no branching map")
    return out


def branching_map(model: PollingModel, i: int, z, config: EngineConfig | None = None):
    """Substitution turning the visit-beginning PGF of queue ``i`` into its visit-completion PGF.

    ``vc_i(z) = vb_i(branching_map(model, i, z))``. Gated replaces ``z_i`` by
    ``B_i(sigma(z))``; exhaustive replaces it by the busy-period LST at the
    arrival intensity of the other queues.
    """
    cfg = config or EngineConfig()
    arr = np.asarray(z, dtype=complex)
    return _branching_map(model, i, arr, cfg)


@dataclass(frozen=True)
class PgfBundle:
    """PGF values at one or more points.

    Arrays ``vb``, ``vc``, ``sb``, ``sc`` have the shape of ``point``:
    entry ``[..., i]`` belongs to queue ``i``.
    """

    point: np.ndarray
    vb: np.ndarray
    vc: np.ndarray
    sb: np.ndarray
    sc: np.ndarray
    gamma: np.ndarray
    mean_cycle: float

    def eisenberg_residual(self) -> np.ndarray:
        return self.gamma * (self.vb - self.vc) - (self.sb - self.sc)

    def at(self, k: int) -> "PgfBundle":
        """The bundle of the ``k``-th point of a stacked evaluation."""
        return PgfBundle(
            self.point[k], self.vb[k], self.vc[k], self.sb[k], self.sc[k],
            self.gamma, self.mean_cycle,
        )


class TransformEngine:
    """Analytic source of `PgfBundle` values for a branching-type model."""

    def __init__(self, model: PollingModel, config: EngineConfig | None = None):
        for i, q in enumerate(model.queues):
            if not q.discipline.is_branching:
                raise UnsupportedDiscipline(
                    f"queue {i} uses {q.discipline}; analytic PGFs need exhaustive or gated"
                )
        self.model = model
        self.config = config or EngineConfig()
        self.n = model.n_queues
        self._lam = model.arrival_rates
        self.vb1_at_zero = None
        if model.zero_switchover:
            origin = np.zeros((1, self.n), dtype=complex)
            tail = self._cycle_series(origin)[0].real
            self.vb1_at_zero = 1.0 / (1.0 + tail / model.total_rate)
        self.mean_cycle = mean_cycle(model, self.vb1_at_zero)
        self.gamma = 1.0 / (self._lam * self.mean_cycle)

    def h(self, i: int, z: np.ndarray) -> np.ndarray:
        return _branching_map(self.model, i, z, self.config)

    def _sigma(self, z):
        return (self._lam * (1.0 - z)).sum(axis=-1)

    def _cycle_series(self, z: np.ndarray) -> np.ndarray:
        """``sum_k sigma(g^k(z))`` where ``g`` is the full-cycle branching composition."""
        cfg = self.config
        u = z.copy()
        total = np.zeros(z.shape[0], dtype=complex)
        k, stop_at, prev = 0, None, None
        while True:
            s = self._sigma(u)
            total += s
            size = np.abs(s)
            if stop_at is None and _settled(size, prev, cfg.sigma_tol):
                stop_at = max(k, 1) * cfg.depth_multiplier
            prev = size
            if stop_at is not None and k >= stop_at:
                return total
            k += 1
            if k > cfg.max_cycles:
                raise ConvergenceError(f"cycle series did not converge in {cfg.max_cycles} cycles")
            for j in reversed(range(self.n)):
                u = self.h(j, u)

    def _vb_switching(self, i: int, z: np.ndarray) -> np.ndarray:
        """Product form of vb_i when switchover times are present."""
        cfg, n = self.config, self.n
        sw = self.model.switchovers
        u = z.copy()
        factor = np.ones(z.shape[0], dtype=complex)
        k, stop_at, prev = 0, None, None
        while True:
            size = np.abs(self._sigma(u))
            if stop_at is None and _settled(size, prev, cfg.sigma_tol):
                stop_at = max(k, 1) * cfg.depth_multiplier
            prev = size
            if stop_at is not None and k >= stop_at:
                return factor
            k += 1
            if k > cfg.max_cycles:
                raise ConvergenceError(f"vb product did not converge in {cfg.max_cycles} cycles")
            for step in range(1, n + 1):
                j = (i - step) % n
                factor = factor * sw[j].lst(self._sigma(u))
                u = self.h(j, u)

    def vb(self, i: int, z) -> np.ndarray:
        z, single = as_points(z, self.n)
        if self.model.zero_switchover:
            u = z
            for j in reversed(range(i)):
                u = self.h(j, u)
            c = self.vb1_at_zero / self.model.total_rate
            out = 1.0 - c * self._cycle_series(u)
        else:
            out = self._vb_switching(i, z)
        return out[0] if single else out

    def vc(self, i: int, z) -> np.ndarray:
        z, single = as_points(z, self.n)
        out = self.vb(i, self.h(i, z))
        return out[0] if single else out

    def _visit(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vb = np.empty_like(z)
        vc = np.empty_like(z)
        for i in range(self.n):
            vb[:, i] = self.vb(i, z)
            vc[:, i] = self.vb(i, self.h(i, z))
        return vb, vc

    def _sb_raw(self, z, vb, vc):
        bsig = self.model.service_lst(np.repeat(self._sigma(z)[:, None], self.n, axis=1))
        denom = z - bsig
        return self.gamma * z * (vb - vc) / np.where(denom == 0, 1.0, denom), denom, bsig

    def bundle(self, z) -> PgfBundle:
        z, single = as_points(z, self.n)
        ones = np.all(z == 1.0, axis=1)
        vb, vc = self._visit(z)
        vb[ones] = 1.0
        vc[ones] = 1.0
        sb, denom, bsig = self._sb_raw(z, vb, vc)
        singular = (np.abs(denom) < self.config.singular_tol) & ~ones[:, None]
        for p, i in zip(*np.nonzero(singular)):
            sb[p, i] = self._richardson_sb(z[p], i)
        sb[ones] = 1.0
        safe = np.abs(z) > 1e-12
        sc = np.where(
            safe,
            sb * bsig / np.where(safe, z, 1.0),
            sb + self.gamma * (vc - vb),
        )
        sc[ones] = 1.0
        b = PgfBundle(z, vb, vc, sb, sc, self.gamma.copy(), self.mean_cycle)
        return b.at(0) if single else b

    def _richardson_sb(self, z: np.ndarray, i: int) -> complex:
        """Resolve the removable singularity of the service-beginning PGF at ``z_i = B_i(sigma(z))``."""
        h1, h2 = self.config.richardson_steps
        pts = np.repeat(z[None, :], 4, axis=0)
        pts[:, i] += np.array([h1, -h1, h2, -h2])
        vb = np.stack([self.vb(j, pts) for j in range(self.n)], axis=1)
        vc = np.stack([self.vb(j, self.h(j, pts)) for j in range(self.n)], axis=1)
        sb, denom, _ = self._sb_raw(pts, vb, vc)
        if np.any(np.abs(denom[:, i]) < self.config.singular_tol * 1e-2):
            raise SingularityError(f"cannot resolve removable singularity of sb_{i} at {z}")
        vals = sb[:, i]
        a1 = 0.5 * (vals[0] + vals[1])
        a2 = 0.5 * (vals[2] + vals[3])
        # symmetric averages carry even powers of h only; h2 = 2 h1
        return (4.0 * a1 - a2) / 3.0


def visit_pgfs(model: PollingModel, z, tol: float = 1e-14) -> PgfBundle:
    """All embedded-epoch PGFs of a branching-type model at ``z``."""
    cfg = EngineConfig(sigma_tol=tol, fixed_point_tol=tol)
    return TransformEngine(model, cfg).bundle(z)


def service_begin_pgf(model: PollingModel, z, vb, vc, gamma) -> complex:
    """Service-beginning PGF of every queue from the visit PGFs at ``z``.

    Vectorised over queues only; no singularity handling (use
    `TransformEngine.bundle` near ``z_i = B_i(sigma(z))``).
    """
    z = np.asarray(z, dtype=complex)
    if np.all(z == 1.0):
        return np.ones_like(z)
    bsig = model.service_lst(np.full_like(z, sigma(model, z)))
    denom = z - bsig
    if np.any(denom == 0):
        raise SingularityError("z_i equals B_i(sigma(z)); use TransformEngine.bundle")
    return gamma * z * (np.asarray(vb) - np.asarray(vc)) / denom


def service_complete_pgf(model: PollingModel, z, sb, vb=None, vc=None, gamma=None):
    """Service-completion PGF of every queue from the service-beginning PGF.

    Coordinates with ``z_i = 0`` use the rearranged balance relation, which
    needs ``vb``, ``vc`` and ``gamma``.
    """
    z = np.asarray(z, dtype=complex)
    sb = np.asarray(sb, dtype=complex)
    if np.all(z == 1.0):
        return np.ones_like(z)
    bsig = model.service_lst(np.full_like(z, sigma(model, z)))
    zero = z == 0
    if np.any(zero) and (vb is None or vc is None or gamma is None):
        raise DomainError("z_i = 0 needs vb, vc and gamma for the limit form")
    out = sb * bsig / np.where(zero, 1.0, z)
    if np.any(zero):
        alt = sb + np.asarray(gamma) * (np.asarray(vc) - np.asarray(vb))
        out = np.where(zero, alt, out)
    return out
