"""Misinformation and version age in timely gossip networks.

Exact stationary quantities come from :mod:`misgossip.solver`; the event
simulator in :mod:`misgossip.sim` estimates the same quantities by Monte
Carlo so the two can be checked against each other.
"""

from .core import (
    NetworkParams,
    NetworkState,
    NodeState,
    apply_gossip,
    apply_source_delivery,
    apply_source_update,
    measure_T_AB,
    truth_fraction,
)
from .experiments import SweepRow, SweepSpec, Tolerance, compare, run_sweep
from .sim import EstimateReport, Event, Probe, SimConfig, default_probes, run
from .solver import AnalyticalSolution, solve_all, solve_c, solve_t, solve_v

__all__ = [
    "AnalyticalSolution",
    "EstimateReport",
    "Event",
    "NetworkParams",
    "NetworkState",
    "NodeState",
    "Probe",
    "SimConfig",
    "SweepRow",
    "SweepSpec",
    "Tolerance",
    "apply_gossip",
    "apply_source_delivery",
    "apply_source_update",
    "compare",
    "default_probes",
    "measure_T_AB",
    "run",
    "run_sweep",
    "solve_all",
    "solve_c",
    "solve_t",
    "solve_v",
    "truth_fraction",
]
