# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
#       format_version: '1.5'
#       jupytext_version: 1.16.1
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# # Cross-checking the transforms by simulation
#
# The simulator knows nothing about generating functions. It records the
# joint queue lengths at every epoch and the time spent in each state, and
# batch means over blocks of cycles give standard errors. Agreement within
# three standard errors at many points is strong evidence that both sides
# are right.

from pathlib import Path

import numpy as np

import polling_lab as pl
from polling_lab import simulation as sim

MODELS = Path("../models") if Path("../models").is_dir() else Path("models")

model = pl.load_model(MODELS / "canonical.toml")
omega = np.repeat(np.linspace(0.5, 4.0, 4)[:, None], 2, axis=1)
log = pl.simulate(pl.SimConfig(model, seed=2024, warmup_cycles=1000, measured_cycles=100_000), omega)
print(log.measured_cycles, "cycles,", round(log.measured_time), "time units")

engine = pl.TransformEngine(model)
ev = pl.StationaryEvaluator(model, engine)
z = np.array([[0.5, 0.5], [0.2 + 0.3j, 0.8], [0.9, -0.4j]])
b = engine.bundle(z)

for kind, attr in (("visit_begin", "vb"), ("visit_complete", "vc"), ("service_complete", "sc")):
    for i in range(2):
        est = sim.empirical_pgf(log, kind, i, z)
        print(f"{attr}_{i}: max |z-score| = {est.zscore(getattr(b, attr)[:, i]).max():.2f}")

q = sim.empirical_time_stationary(log, z)
print("time-stationary PGF:", np.round(q.value, 4), "+-", np.round(q.stderr, 4))
print("analytic:           ", np.round(pl.queue_length_pgf(ev, z), 4))

w = sim.empirical_time_stationary(log, omega, workload=True)
print("workload z-scores:", np.round(w.zscore(pl.workload_lst(ev, omega)), 2))

# Simple relations need no transforms at all: the server is busy with
# queue i a fraction rho_i of the time, and a visit serves lambda_i E C
# customers on average.

print("busy fractions:", sim.busy_fraction(log).value.real, "expected", model.loads)
ec = sim.empirical_mean_cycle(log)
print("mean cycle:", ec.value.real, "+-", ec.stderr, "expected", engine.mean_cycle)

# The same comparison, with a report, is what `polling-lab verify` runs.

report = pl.run_verification(model, cycles=50_000, seed=7)
print(report.table())
