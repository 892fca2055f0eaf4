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

# # Workload decomposition
#
# The total workload in a polling system splits into two independent parts:
# the workload of the M/G/1 queue fed by all arrivals, and the workload at
# an arbitrary epoch of a switchover period. In transform terms the workload
# LST at (omega, ..., omega) is the product of the two LSTs.

from pathlib import Path

import numpy as np

import polling_lab as pl

MODELS = Path("../models") if Path("../models").is_dir() else Path("models")

model = pl.load_model(MODELS / "canonical.toml")
ev = pl.StationaryEvaluator.analytic(model)

omega = np.linspace(0.1, 5.0, 8)
w = pl.workload_lst(ev, np.repeat(omega[:, None], 2, axis=1))
mg1 = pl.mg1_workload_lst(model, omega)
sw = pl.switch_workload_lst(ev, omega)
print(f"{'omega':>6} {'W':>14} {'W_MG1 * W_sw':>14}")
for o, a, c in zip(omega, w.real, (mg1 * sw).real):
    print(f"{o:6.2f} {a:14.10f} {c:14.10f}")

# Without switchover times the second factor disappears: the system is then
# work conserving and its workload is exactly the M/G/1 workload.

zero = pl.load_model(MODELS / "canonical_zero_switchover.toml")
ev0 = pl.StationaryEvaluator.analytic(zero)
diff = pl.workload_lst(ev0, np.repeat(omega[:, None], 2, axis=1)) - pl.mg1_workload_lst(zero, omega)
print("zero switchover, |W - W_MG1| <=", np.abs(diff).max())

# The joint LST also accepts different arguments per queue, which weights
# the queues' workloads separately.

print(pl.workload_lst(ev, [[0.5, 2.0], [2.0, 0.5]]))

# The mean extra workload caused by switchovers follows from the small-omega
# slope of the switchover factor.

h = 1e-4
slope = (pl.switch_workload_lst(ev, h) - pl.switch_workload_lst(ev, 2 * h)).real / h
print("mean workload at a switchover epoch ~", slope)
