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

# # A single queue is an M/G/1 queue
#
# With one exhaustive queue and no switchover time the server never leaves,
# so the polling machinery has to collapse to the classical M/G/1 results.
# We check this for M/M/1 first, where everything is geometric, and then
# for Erlang service against the Pollaczek-Khinchine formula.

import numpy as np

import polling_lab as pl

# An M/M/1 queue with load one half.

mm1 = pl.build_model({
    "queues": [{"lambda": 0.5, "discipline": "exhaustive",
                "service": {"family": "exponential", "params": {"rate": 1.0}}}],
    "switchovers": [{"family": "deterministic", "params": {"value": 0.0}}],
})
ev = pl.StationaryEvaluator.analytic(mm1)

pmf = pl.marginal_pmf(ev, 0, 20)
geometric = 0.5 * 0.5 ** np.arange(21)
print("largest |p_n - 0.5^(n+1)|:", np.abs(pmf.probabilities - geometric).max())
print("mean queue length:", pl.mean_queue_length(ev, 0), "(exact 1)")

# The workload LST at omega = 1 is 2/3.

print("W(1) =", complex(pl.workload_lst(ev, [1.0])))

# ## Erlang service
#
# The Pollaczek-Khinchine queue-length PGF is
# (1 - rho)(1 - z) B(lambda(1 - z)) / (B(lambda(1 - z)) - z).

erl = {"family": "erlang", "params": {"shape": 3, "rate": 4.0}}
mg1 = pl.build_model({
    "queues": [{"lambda": 0.9, "discipline": "exhaustive", "service": erl}],
    "switchovers": [{"family": "deterministic", "params": {"value": 0.0}}],
})
ev = pl.StationaryEvaluator.analytic(mg1)
z = np.array([0.2, -0.5, 0.3 + 0.6j, 0.9])
x = 0.9 * (1 - z)
b = mg1.services[0].lst(x)
pk = (1 - mg1.rho) * (1 - z) * b / (b - z)
for zi, q, ref in zip(z, pl.queue_length_pgf(ev, z[:, None]), pk):
    print(f"z={zi!s:>12}  Q={q:.12f}  P-K={ref:.12f}")

# The mean matches lambda b + lambda^2 E[B^2] / (2 (1 - rho)).

lam, b1, b2, rho = 0.9, mg1.service_means[0], mg1.service_second_moments[0], mg1.rho
print(pl.mean_queue_length(ev, 0), lam * b1 + lam**2 * b2 / (2 * (1 - rho)))
