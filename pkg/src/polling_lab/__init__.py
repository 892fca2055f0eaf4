"""Transform-level analysis and simulation of cyclic polling systems."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (
    Deterministic,
    Discipline,
    Erlang,
    Exponential,
    Hyperexponential,
    ParametricDistribution,
    PollingModel,
    Queue,
    build_model,
    load_model,
    lst_eval,
    mean_cycle,
)
from .transforms import EngineConfig, PgfBundle, TransformEngine, busy_period_lst, sigma, visit_pgfs

from .stationary import (
    MarginalPmf,
    StationaryEvaluator,
    marginal_pmf,
    mean_queue_length,
    mg1_workload_lst,
    queue_length_pgf,
    queue_length_pgf_visit_form,
    switch_workload_lst,
    workload_lst,
)
from .simulation import EmpiricalSource, EpochLog, SimConfig, simulate, simulate_replications
from .verify import VerificationReport, run_verification
