"""Mean-field control barrier safety filters for swarms.

The swarm is an empirical probability measure; one kernel-discrepancy barrier
yields a single half-space constraint on all per-agent controls, solved
exactly per step. A pairwise-CBF baseline with n(n-1)/2 rows is included for
correctness reference and scaling comparison.
"""

from .barriers import (
    BarrierSpec,
    ClassKSpec,
    ConstraintRow,
    adversary_term,
    assemble_constraint,
    barrier_value,
    class_k,
    dh_ds_analytic,
)
from .baseline import IndividualBarrier, PairwiseSpec, pairwise_constraints, solve_pairwise_cbf
from .bench import BenchRow, run_benchmark, write_benchmark_csv
from .config import ScenarioConfig, ScenarioError, load_scenario, parse_scenario
from .dynamics import DynamicsSpec, control_matrix, drift, step, vector_field
from .kernels import KernelSpec, evaluate, grad_x, gram
from .logio import read_barrier_csv, read_trajectory_csv, write_log
from .measures import EmpiricalMeasure, mmd_grad_particles, mmd_sq_half
from .qp import ControlBox, QpNonConvergence, QpReport, project_halfspace_box, solve_dense_qp
from .sim import (
    AdversaryField,
    SimulationError,
    SwarmState,
    TrajectoryLog,
    adversary_velocity,
    run_scenario,
    transport_adversary,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryField",
    "BarrierSpec",
    "BenchRow",
    "ClassKSpec",
    "ConstraintRow",
    "ControlBox",
    "DynamicsSpec",
    "EmpiricalMeasure",
    "IndividualBarrier",
    "KernelSpec",
    "PairwiseSpec",
    "QpNonConvergence",
    "QpReport",
    "ScenarioConfig",
    "ScenarioError",
    "SimulationError",
    "SwarmState",
    "TrajectoryLog",
    "adversary_term",
    "adversary_velocity",
    "assemble_constraint",
    "barrier_value",
    "class_k",
    "control_matrix",
    "dh_ds_analytic",
    "drift",
    "evaluate",
    "grad_x",
    "gram",
    "load_scenario",
    "mmd_grad_particles",
    "mmd_sq_half",
    "pairwise_constraints",
    "parse_scenario",
    "project_halfspace_box",
    "read_barrier_csv",
    "read_trajectory_csv",
    "run_benchmark",
    "run_scenario",
    "solve_dense_qp",
    "solve_pairwise_cbf",
    "step",
    "transport_adversary",
    "vector_field",
    "write_benchmark_csv",
    "write_log",
]
