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

# # Two queues: the embedded PGFs and the identities tying them together
#
# The canonical example has an exhaustive and a gated queue, exponential
# services and half a time unit of switchover after each visit. The engine
# returns the queue-length PGFs at visit beginnings and completions and at
# service beginnings and completions. These satisfy a handful of exact
# relations, which we check at random complex points.

from pathlib import Path

import numpy as np

import polling_lab as pl
from polling_lab.verify import default_omega_probes, default_z_probes, identity_checks

MODELS = Path("../models") if Path("../models").is_dir() else Path("models")

model = pl.load_model(MODELS / "canonical.toml")
engine = pl.TransformEngine(model)
print("rho =", model.rho, " E C =", engine.mean_cycle, " 1/gamma =", 1 / engine.gamma)

z = default_z_probes(model.n_queues)
b = engine.bundle(z)
print("first probe:", z[0])
for name in ("vb", "vc", "sb", "sc"):
    print(f"  {name} =", getattr(b, name)[0])

# The balance between visits and services: gamma (vb - vc) = sb - sc.

print("balance residual:", np.abs(b.gamma * (b.vb - b.vc) - (b.sb - b.sc)).max())

# The stationary queue-length PGF has two expressions, one through service
# completions and one through visit epochs.

ev = pl.StationaryEvaluator(model, engine)
q1 = pl.queue_length_pgf(ev, z)
q2 = pl.queue_length_pgf_visit_form(ev, z)
print("two forms differ by", np.abs(q1 - q2).max())

# The verification module bundles all of these checks.

for c in identity_checks(model, z, default_omega_probes(model)):
    print(f"{c.name:<45} {c.statistic:9.2e}  {'ok' if c.passed else 'FAIL'}")

# ## Marginal distributions
#
# Fourier inversion on the unit circle gives the marginal laws. The
# derivative at 1 and the inverted probabilities give the same mean.

for i in range(2):
    pmf = pl.marginal_pmf(ev, i, 200)
    print(f"queue {i}: P(0..4) = {np.round(pmf.probabilities[:5], 5)}  "
          f"mean = {pl.mean_queue_length(ev, i):.8f}  sum n p_n = {pmf.mean():.8f}")
