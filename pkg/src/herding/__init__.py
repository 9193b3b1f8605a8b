"""Safety-constrained multi-robot herding: dynamics, barriers, controllers.

A small numpy library simulating dog robots that keep a goal-seeking
flock of sheep out of protected zones. Dog velocities are synthesized
from control-barrier-function constraints, solved either jointly, per
allocated dog, or by a distributed dual-subgradient iteration, with a
closed-form feasibility bound chain and a deterministic episode engine
on top.
"""

from .bounds import (
    DistanceBounds,
    FeasibilityReport,
    b_lower_bound,
    f_max_bound,
    feasibility_report,
    lambda_d,
    lambda_m,
    lambda_s,
    monitor_assumptions,
)
from .cbf import (
    CbfGains,
    LinearConstraint,
    allocated_constraint,
    barrier_h,
    barrier_h_ddot,
    barrier_h_dot,
    centralized_constraint,
    select_gains,
    select_gains_table,
    stacked_centralized,
)
from .controllers import (
    ControlOutput,
    DualConfig,
    DualState,
    allocate,
    allocated_step,
    centralized_step,
    dual_subgradient_step,
)
from .errors import (
    AllocationError,
    DegenerateGeometryError,
    HerdingError,
    InfeasibleConstraintError,
    InitialBreachError,
    ScenarioFormatError,
)
from .qp import QpProblem, QpSolution, solve_min_norm
from .sim import EpisodeLog, Scenario, estimate_dog_velocities, run, step
from .world import (
    SheepParams,
    WorldState,
    Zone,
    jac_sheep_self,
    jac_sheep_wrt_dog,
    jac_sheep_wrt_sheep,
    sheep_velocities,
    sheep_velocity,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationError",
    "CbfGains",
    "ControlOutput",
    "DegenerateGeometryError",
    "DistanceBounds",
    "DualConfig",
    "DualState",
    "EpisodeLog",
    "FeasibilityReport",
    "HerdingError",
    "InfeasibleConstraintError",
    "InitialBreachError",
    "LinearConstraint",
    "QpProblem",
    "QpSolution",
    "Scenario",
    "ScenarioFormatError",
    "SheepParams",
    "WorldState",
    "Zone",
    "allocate",
    "allocated_constraint",
    "allocated_step",
    "b_lower_bound",
    "barrier_h",
    "barrier_h_ddot",
    "barrier_h_dot",
    "centralized_constraint",
    "centralized_step",
    "dual_subgradient_step",
    "estimate_dog_velocities",
    "f_max_bound",
    "feasibility_report",
    "jac_sheep_self",
    "jac_sheep_wrt_dog",
    "jac_sheep_wrt_sheep",
    "lambda_d",
    "lambda_m",
    "lambda_s",
    "monitor_assumptions",
    "run",
    "select_gains",
    "select_gains_table",
    "sheep_velocities",
    "sheep_velocity",
    "solve_min_norm",
    "stacked_centralized",
    "step",
]
