"""Polling model description: service/switchover laws, disciplines, validation.

Model files are TOML (or JSON with the same structure)::

    [[queues]]
    lambda = 0.3
    discipline = "exhaustive"            # "gated", "exhaustive", "k-limited"
    service = { family = "exponential", params = { rate = 1.0 } }

    [[queues]]
    lambda = 0.2
    discipline = { kind = "k-limited", k = 2 }
    service = { family = "erlang", params = { shape = 2, rate = 4.0 } }

    [[switchovers]]                      # S_i, from queue i to queue i+1
    family = "deterministic"
    params = { value = 0.5 }

Supported families and their parameters:

=================  =============================================
exponential        ``rate``
deterministic      ``value`` (zero allowed for switchovers only)
erlang             ``shape`` (integer >= 1), ``rate``
hyperexponential   ``weights`` (sum to one), ``rates``
=================  =============================================

Disciplines may also be written as ``"1-limited"``, ``"2-limited"``, ...
"""
from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError, MissingInputError, ParamError, ParseError, StabilityError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ParametricDistribution",
    "Exponential",
    "Deterministic",
    "Erlang",
    "Hyperexponential",
    "Discipline",
    "Queue",
    "PollingModel",
    "build_model",
    "load_model",
    "model_to_dict",
    "lst_eval",
    "mean_cycle",
    "distribution_from_dict",
]


class ParametricDistribution:
    """A nonnegative law with a closed-form Laplace-Stieltjes transform.

    Subclasses implement ``lst`` (vectorised, no domain check), the first two
    moments, and inversion sampling from uniforms.
    """

    family: str = ""
    n_uniforms: int = 1

    def lst(self, omega):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map an ``(n, n_uniforms)`` array of U[0,1) draws to ``n`` variates."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params()}


def _positive(name: str, value: Any) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name} must be a number, got {value!r}") from exc
    if not math.isfinite(x) or x <= 0:
        raise ParamError(f"{name} must be a positive finite number, got {value!r}")
    return x


@dataclass(frozen=True)
class Exponential(ParametricDistribution):
    rate: float
    family = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def lst(self, omega):
        return self.rate / (self.rate + np.asarray(omega))

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate**2

    def from_uniforms(self, u):
        return -np.log1p(-u[:, 0]) / self.rate

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Deterministic(ParametricDistribution):
    value: float
    family = "deterministic"

    def __post_init__(self):
        try:
            v = float(self.value)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"value must be a number, got {self.value!r}") from exc
        if not math.isfinite(v) or v < 0:
            raise ParamError(f"deterministic value must be >= 0, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def lst(self, omega):
        return np.exp(-self.value * np.asarray(omega))

    def mean(self):
        return self.value

    def second_moment(self):
        return self.value**2

    def from_uniforms(self, u):
        return np.full(u.shape[0], self.value)

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True)
class Erlang(ParametricDistribution):
    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        k = self.shape
        if isinstance(k, float) and k.is_integer():
            k = int(k)
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
            raise ParamError(f"Erlang shape must be an integer >= 1, got {self.shape!r}")
        object.__setattr__(self, "shape", int(k))
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    @property
    def n_uniforms(self):
        return self.shape

    def lst(self, omega):
        return (self.rate / (self.rate + np.asarray(omega))) ** self.shape

    def mean(self):
        return self.shape / self.rate

    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate**2

    def from_uniforms(self, u):
        return -np.log1p(-u).sum(axis=1) / self.rate

    def params(self):
        return {"shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class Hyperexponential(ParametricDistribution):
    weights: tuple
    rates: tuple
    family = "hyperexponential"
    n_uniforms = 2

    def __post_init__(self):
        try:
            w = tuple(float(x) for x in self.weights)
            r = tuple(_positive("rate", x) for x in self.rates)
        except TypeError as exc:
            raise ParseError("weights and rates must be lists of numbers") from exc
        if len(w) == 0 or len(w) != len(r):
            raise ParamError("weights and rates must be non-empty and of equal length")
        if any(not math.isfinite(x) or x <= 0 for x in w):
            raise ParamError(f"weights must be positive, got {w}")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ParamError(f"weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    def lst(self, omega):
        omega = np.asarray(omega)
        out = sum(p * (r / (r + omega)) for p, r in zip(self.weights, self.rates))
        # weights need not sum to exactly 1.0 in binary
        return np.where(omega == 0, 1.0, out)

    def mean(self):
        return sum(p / r for p, r in zip(self.weights, self.rates))

    def second_moment(self):
        return sum(2 * p / r**2 for p, r in zip(self.weights, self.rates))

    def from_uniforms(self, u):
        cum = np.cumsum(self.weights)
        phase = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), len(cum) - 1)
        return -np.log1p(-u[:, 1]) / np.asarray(self.rates)[phase]

    def params(self):
        return {"weights": list(self.weights), "rates": list(self.rates)}


_FAMILIES = {
    "exponential": (Exponential, ("rate",)),
    "deterministic": (Deterministic, ("value",)),
    "erlang": (Erlang, ("shape", "rate")),
    "hyperexponential": (Hyperexponential, ("weights", "rates")),
}


def distribution_from_dict(spec: Mapping) -> ParametricDistribution:
    """Build a distribution from ``{"family": ..., "params": {...}}``."""
    if not isinstance(spec, Mapping) or "family" not in spec:
        raise ParseError(f"distribution needs a 'family' key, got {spec!r}")
    family = str(spec["family"]).lower()
    if family not in _FAMILIES:
        raise ParseError(f"unknown distribution family {spec['family']!r}")
    cls, names = _FAMILIES[family]
    params = spec.get("params", {k: v for k, v in spec.items() if k != "family"})
    if not isinstance(params, Mapping):
        raise ParseError(f"params of {family} must be a table")
    unknown = set(params) - set(names)
    missing = set(names) - set(params)
    if unknown or missing:
        raise ParseError(f"{family} takes parameters {names}, got {sorted(params)}")
    return cls(*(params[k] for k in names))


@dataclass(frozen=True)
class Discipline:
    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in ("exhaustive", "gated", "k-limited"):
            raise ParseError(f"unknown discipline {self.kind!r}")
        if self.kind == "k-limited":
            k = self.k
            if isinstance(k, float) and k.is_integer():
                k = int(k)
            if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
                raise ParamError(f"k-limited requires an integer k >= 1, got {self.k!r}")
            object.__setattr__(self, "k", int(k))
        elif self.k is not None:
            raise ParseError(f"{self.kind} takes no k")

    @classmethod
    def exhaustive(cls):
        return cls("exhaustive")

    @classmethod
    def gated(cls):
        return cls("gated")

    @classmethod
    def limited(cls, k: int):
        return cls("k-limited", k)

    @classmethod
    def parse(cls, spec) -> "Discipline":
        if isinstance(spec, Discipline):
            return spec
        if isinstance(spec, str):
            s = spec.strip().lower()
            m = re.fullmatch(r"(\d+)-limited", s)
            if m:
                return cls("k-limited", int(m.group(1)))
            return cls(s)
        if isinstance(spec, Mapping) and "kind" in spec:
            return cls(str(spec["kind"]).lower(), spec.get("k"))
        raise ParseError(f"cannot parse discipline {spec!r}")

    @property
    def is_branching(self) -> bool:
        return self.kind in ("exhaustive", "gated")

    def to_spec(self):
        return self.kind if self.k is None else {"kind": self.kind, "k": self.k}

    def __str__(self):
        return f"{self.k}-limited" if self.kind == "k-limited" else self.kind


@dataclass(frozen=True)
class Queue:
    arrival_rate: float
    service: ParametricDistribution
    discipline: Discipline = field(default_factory=Discipline.exhaustive)


@dataclass(frozen=True)
class PollingModel:
    """N queues visited cyclically by one server.

    ``switchovers[i]`` is the switchover time from queue ``i`` to queue
    ``i + 1`` (cyclically). Queues are 0-based here; the first queue is the
    reference queue at which cycles start.
    """

    queues: tuple
    switchovers: tuple

    def __post_init__(self):
        queues = tuple(self.queues)
        switchovers = tuple(self.switchovers)
        object.__setattr__(self, "queues", queues)
        object.__setattr__(self, "switchovers", switchovers)
        if len(queues) < 1:
            raise ParamError("a polling model needs at least one queue")
        if len(switchovers) != len(queues):
            raise ParamError(
                f"need one switchover per queue: {len(queues)} queues, "
                f"{len(switchovers)} switchovers"
            )
        for i, q in enumerate(queues):
            if not isinstance(q.service, ParametricDistribution):
                raise ParamError(f"queue {i}: service must be a ParametricDistribution")
            if not (math.isfinite(q.arrival_rate) and q.arrival_rate > 0):
                raise ParamError(f"queue {i}: arrival rate must be positive, got {q.arrival_rate}")
            if not q.service.mean() > 0:
                raise ParamError(f"queue {i}: service time must have positive mean")
        if self.rho >= 1:
            raise StabilityError(f"total load rho = {self.rho:.6g} >= 1")

    @property
    def n_queues(self) -> int:
        return len(self.queues)

    @property
    def arrival_rates(self) -> np.ndarray:
        return np.array([q.arrival_rate for q in self.queues])

    @property
    def total_rate(self) -> float:
        return float(sum(q.arrival_rate for q in self.queues))

    @property
    def services(self) -> tuple:
        return tuple(q.service for q in self.queues)

    @property
    def disciplines(self) -> tuple:
        return tuple(q.discipline for q in self.queues)

    @property
    def service_means(self) -> np.ndarray:
        return np.array([q.service.mean() for q in self.queues])

    @property
    def service_second_moments(self) -> np.ndarray:
        return np.array([q.service.second_moment() for q in self.queues])

    @property
    def loads(self) -> np.ndarray:
        return self.arrival_rates * self.service_means

    @property
    def rho(self) -> float:
        return float(sum(q.arrival_rate * q.service.mean() for q in self.queues))

    @property
    def switchover_means(self) -> np.ndarray:
        return np.array([d.mean() for d in self.switchovers])

    @property
    def total_switchover(self) -> float:
        return float(sum(d.mean() for d in self.switchovers))

    @property
    def zero_switchover(self) -> bool:
        return self.total_switchover == 0.0

    @property
    def is_branching(self) -> bool:
        return all(q.discipline.is_branching for q in self.queues)

    def service_lst(self, omega: np.ndarray) -> np.ndarray:
        """Componentwise ``(B_1(omega_1), ..., B_N(omega_N))`` along the last axis."""
        omega = np.asarray(omega, dtype=complex)
        out = np.empty_like(omega)
        for i, q in enumerate(self.queues):
            out[..., i] = q.service.lst(omega[..., i])
        return out


def _queue_from_dict(i: int, spec: Mapping) -> Queue:
    if not isinstance(spec, Mapping):
        raise ParseError(f"queues[{i}] must be a table")
    for key in ("lambda", "service"):
        if key not in spec:
            raise ParseError(f"queues[{i}] is missing '{key}'")
    lam = spec["lambda"]
    if isinstance(lam, bool) or not isinstance(lam, (int, float)):
        raise ParseError(f"queues[{i}].lambda must be a number, got {lam!r}")
    if not (math.isfinite(lam) and lam > 0):
        raise ParamError(f"queues[{i}].lambda must be positive, got {lam!r}")
    return Queue(
        float(lam),
        distribution_from_dict(spec["service"]),
        Discipline.parse(spec.get("discipline", "exhaustive")),
    )


def build_model(spec: Mapping) -> PollingModel:
    """Validate a structured model description and return a `PollingModel`.

    Raises `ParseError` for malformed input, `ParamError` for out-of-range
    parameters and `StabilityError` when the total load is at least one.
    """
    if not isinstance(spec, Mapping):
        raise ParseError("model description must be a table")
    queues = spec.get("queues")
    switchovers = spec.get("switchovers")
    if not isinstance(queues, Sequence) or isinstance(queues, str) or not queues:
        raise ParseError("model needs a non-empty 'queues' list")
    if not isinstance(switchovers, Sequence) or isinstance(switchovers, str):
        raise ParseError("model needs a 'switchovers' list")
    qs = tuple(_queue_from_dict(i, q) for i, q in enumerate(queues))
    sws = tuple(distribution_from_dict(s) for s in switchovers)
    for i, q in enumerate(qs):
        if q.service.mean() <= 0:
            raise ParamError(f"queues[{i}]: service time must have positive mean")
    return PollingModel(qs, sws)


def load_model(path) -> PollingModel:
    """Read a TOML (or ``.json``) model file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            spec = json.loads(raw.decode("utf-8"))
        else:
            spec = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return build_model(spec)


def model_to_dict(model: PollingModel) -> dict:
    return {
        "queues": [
            {
                "lambda": q.arrival_rate,
                "service": q.service.to_dict(),
                "discipline": q.discipline.to_spec(),
            }
            for q in model.queues
        ],
        "switchovers": [d.to_dict() for d in model.switchovers],
    }


def lst_eval(dist: ParametricDistribution, omega):
    """Closed-form LST of ``dist`` at ``omega`` (scalar or array), ``Re omega >= 0``."""
    arr = np.asarray(omega, dtype=complex)
    if np.any(arr.real < 0):
        raise DomainError("LST argument must have nonnegative real part")
    out = dist.lst(arr)
    return complex(out) if np.ndim(out) == 0 else out


def mean_cycle(model: PollingModel, vb1_at_zero: float | None = None) -> float:
    """Mean cycle length.

    With switchovers this is ``s / (1 - rho)``. Without them the cycle length
    depends on the empty-system convention and is obtained from the
    probability that the server finds the system empty at a visit beginning
    to the first queue: ``vb1_at_zero / (lambda * (1 - rho))``.
    """
    if not model.zero_switchover:
        return model.total_switchover / (1.0 - model.rho)
    if vb1_at_zero is None:
        raise MissingInputError("zero-switchover model: vb1_at_zero is required")
    if not 0 < vb1_at_zero <= 1:
        raise ParamError(f"vb1_at_zero must lie in (0, 1], got {vb1_at_zero!r}")
    return vb1_at_zero / (model.total_rate * (1.0 - model.rho))
