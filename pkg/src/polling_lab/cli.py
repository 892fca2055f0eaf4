"""Command-line front end: ``polling-lab analyze | simulate | verify``.

Exit codes: 0 success, 2 bad model or arguments, 3 numerical failure
(no convergence, singularity, inversion or sampling trouble), 4 failed
verification.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import simulation as sim
from .errors import (
    ConvergenceError,
    DivergenceError,
    InsufficientSamples,
    InversionError,
    ParamError,
    PollingError,
    SingularityError,
    UnsupportedDiscipline,
)
from .io import load_points, point_record, write_csv, write_json
from .model import load_model, model_to_dict
from .stationary import (
    StationaryEvaluator,
    marginal_pmf,
    mean_queue_length,
    mg1_workload_lst,
    queue_length_pgf,
    queue_length_pgf_visit_form,
    switch_workload_lst,
    workload_lst,
)
from .transforms import TransformEngine
from .verify import IDENTITY_TOL, default_omega_probes, default_z_probes, run_verification

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
_NUMERIC = (ConvergenceError, SingularityError, InversionError, InsufficientSamples, DivergenceError)


def thread_cap() -> int:
    """Worker limit from ``POLLING_LAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("POLLING_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _points(args, model):
    n = model.n_queues
    z = omega = None
    path = getattr(args, "points", None) or getattr(args, "probes", None)
    if path:
        z, omega = load_points(path, n)
    return z, omega


def _records(quantity, queue, pts, values, method):
    return [
        {
            "quantity": quantity,
            "queue": queue,
            "point": point_record(p),
            "value_re": float(np.real(v)),
            "value_im": float(np.imag(v)),
            "method": method,
        }
        for p, v in zip(pts, np.atleast_1d(values))
    ]


def cmd_analyze(args) -> int:
    model = load_model(args.model)
    if not model.is_branching:
        raise UnsupportedDiscipline(
            "analytic PGFs need exhaustive or gated queues; "
            "use `polling-lab simulate` to estimate them for this model"
        )
    n = model.n_queues
    z, omega = _points(args, model)
    if z is None:
        z = default_z_probes(n)
    if omega is None:
        omega = default_omega_probes(model)
    engine = TransformEngine(model)
    ev = StationaryEvaluator(model, engine)

    records = []
    if len(z):
        b = engine.bundle(z)
        for name, arr in (("Vb", b.vb), ("Vc", b.vc), ("Sb", b.sb), ("Sc", b.sc)):
            for i in range(n):
                records += _records(name, i, z, arr[:, i], "branching")
        records += _records("Q", None, z, queue_length_pgf(ev, z), "departure-form")
        records += _records("Q", None, z, queue_length_pgf_visit_form(ev, z), "visit-form")
    if len(omega):
        records += _records("W", None, omega, workload_lst(ev, omega), "visit-pgfs")
        diag = np.all(omega == omega[:, :1], axis=1)
        if np.any(diag):
            w = omega[diag]
            records += _records("W_MG1", None, w, mg1_workload_lst(model, w[:, 0]), "pollaczek-khinchine")
            if not model.zero_switchover:
                records += _records("W_switch", None, w, switch_workload_lst(ev, w[:, 0]), "visit-pgfs")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "results.json", {
        "schema": "polling-lab/analysis",
        "version": 1,
        "model": model_to_dict(model),
        "mean_cycle": engine.mean_cycle,
        "records": records,
    })
    pmf_rows, moment_rows = [], [("mean_cycle", "", engine.mean_cycle, "closed-form")]
    for i in range(n):
        pmf = marginal_pmf(ev, i, args.n_max)
        pmf_rows += [(i, k, float(p)) for k, p in enumerate(pmf.probabilities)]
        moment_rows += [
            ("mean_queue_length", i, mean_queue_length(ev, i), "contour"),
            ("mean_queue_length", i, pmf.mean(), "inversion"),
            ("pmf_mass", i, pmf.mass, "inversion"),
        ]
    write_csv(out / "marginals.csv", ("queue", "n", "probability"), pmf_rows)
    write_csv(out / "moments.csv", ("quantity", "queue", "value", "method"), moment_rows)
    print(f"wrote {out / 'results.json'}, {out / 'marginals.csv'}, {out / 'moments.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    n = model.n_queues
    z, omega = _points(args, model)
    if z is None:
        z = np.repeat(np.linspace(0.1, 0.9, 9)[:, None], n, axis=1)
    if omega is None:
        omega = np.repeat(np.linspace(0.1, 5.0, 10)[:, None], n, axis=1)
    cfg = sim.SimConfig(model, args.seed, args.warmup, args.cycles, args.batches)
    if args.trace:
        if args.replications != 1:
            raise ParamError("--trace needs --replications 1")
        with open(args.trace, "w", encoding="utf-8") as fh:
            log = sim.simulate(cfg, omega, trace=fh)
    else:
        log = sim.simulate_replications(cfg, args.replications, omega, min(thread_cap(), args.replications))
    summary = log.to_summary(z)
    summary["replications"] = args.replications
    write_json(args.out, summary)
    print(f"wrote {args.out} ({log.measured_cycles} cycles)")
    return EXIT_OK


def cmd_verify(args) -> int:
    model = load_model(args.model)
    z, omega = _points(args, model)
    report = run_verification(
        model,
        cycles=args.cycles,
        seed=args.seed,
        tolerance=args.tolerance,
        fault=args.inject_fault,
        warmup=args.warmup,
        batches=args.batches,
        replications=args.replications,
        workers=min(thread_cap(), args.replications),
        z=z,
        omega=omega,
    )
    if args.out:
        write_json(args.out, report.to_dict())
    print(report.table())
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polling-lab", description="Cyclic polling systems: transforms, simulation, verification.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analytic PGFs, LSTs, marginals and moments")
    a.add_argument("model", help="model file (TOML or JSON)")
    a.add_argument("--points", help='JSON file {"z": [...], "omega": [...]}')
    a.add_argument("--out", default="analysis", help="output directory (default: analysis)")
    a.add_argument("--n-max", type=int, default=50, help="largest queue length in marginals.csv")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="simulate and write an epoch-log summary")
    s.add_argument("model")
    s.add_argument("--cycles", type=int, required=True, help="measured cycles")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--probes", help='JSON file {"z": [...], "omega": [...]}')
    s.add_argument("--out", default="simulation.json")
    s.add_argument("--warmup", type=int, default=1000, help="discarded cycles")
    s.add_argument("--batches", type=int, default=50)
    s.add_argument("--replications", type=int, default=1)
    s.add_argument("--trace", help="write one JSON line per event to this file")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="identity suite and simulation cross-checks")
    v.add_argument("model")
    v.add_argument("--cycles", type=int, default=1_000_000, help="measured cycles; 0 skips simulation")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--tolerance", type=float, default=IDENTITY_TOL, help="identity residual bound")
    v.add_argument("--probes", help='JSON file {"z": [...], "omega": [...]}')
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("--warmup", type=int, default=1000)
    v.add_argument("--batches", type=int, default=50)
    v.add_argument("--replications", type=int, default=1)
    v.add_argument(
        "--inject-fault", type=float, nargs="?", const=1e-3, default=0.0,
        help="add this constant (default 1e-3) to the first visit-completion PGF",
    )
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PollingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
