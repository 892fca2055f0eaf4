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

# # Queue lengths at an arbitrary time for any discipline
#
# The stationary queue-length PGF is a weighted mix of the PGFs at service
# completions, and the argument behind it never uses the discipline. For
# k-limited service there are no closed-form visit PGFs, but the service
# completion PGFs can be estimated by simulation and plugged in. The result
# must match the directly measured time average.

from pathlib import Path

import numpy as np

import polling_lab as pl
from polling_lab import simulation as sim

MODELS = Path("../models") if Path("../models").is_dir() else Path("models")

model = pl.load_model(MODELS / "one_limited.toml")
print([str(q.discipline) for q in model.queues], "rho =", model.rho)

log = pl.simulate(pl.SimConfig(model, seed=11, measured_cycles=100_000))
z = np.repeat(np.linspace(0.1, 0.9, 5)[:, None], 2, axis=1)
z[:, 1] = 0.6

# `EmpiricalSource` hands the estimated PGFs to the same stationary-law
# code that the analytic engine feeds.

ev = pl.StationaryEvaluator(model, pl.EmpiricalSource(log))
via_departures = pl.queue_length_pgf(ev, z)
direct = sim.empirical_time_stationary(log, z)
for zi, a, d, se in zip(z, via_departures.real, direct.value.real, direct.stderr):
    print(f"z={zi.real}  from departures {a:.5f}  time average {d:.5f} +- {se:.5f}")

# With standard errors that account for the correlation between the two
# estimates:

lam = model.arrival_rates
w = lam * (1 - z)
sc = [sim.empirical_pgf(log, "service_complete", i, z) for i in range(2)]
diff = sum(sc[i] * (w[:, i] / w.sum(axis=1)) for i in range(2)) - direct
print("z-scores:", np.round(diff.zscore(0.0), 2))

# The analytic engine refuses this model and says why.

try:
    pl.TransformEngine(model)
except pl.UnsupportedDiscipline as exc:
    print("engine:", exc)
