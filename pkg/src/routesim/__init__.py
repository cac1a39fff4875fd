"""routesim: deterministic DES of hybrid BGP / SDN-cluster inter-domain routing."""

from .simcore import RngStreams, ScheduleError, SimTime, Simulator, to_seconds, usec
from .topology import (CLIENT, CLUSTER, COLLECTOR, LEGACY, ConfigError,
                       FailoverScenario, GraphParams, Topology, assign_cluster,
                       build_failover_scenario, generate)
from .bgp import ANNOUNCE, WITHDRAW, BgpSpeaker
from .controller import AsGraph, ClusterController, shortest_expansions
from .network import Network, RunParams
from .metrics import RunRecord, forwarding_snapshot, measure_churn, measure_convergence
from .experiment import (Cell, CellSummary, InvariantViolation, SweepConfig,
                         build_cell_scenario, run_cell_once, run_failover,
                         run_sweep, summarize)

__version__ = "0.1.0"
