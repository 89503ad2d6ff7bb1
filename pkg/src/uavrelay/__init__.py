"""Joint 3-D placement and power allocation for a UAV decode-and-forward
relay serving ground users among buildings.

Shadow volumes cast by buildings are modeled as halfspace-intersection
polyhedra; the placement problem prices the associated indicator-variable
relaxation into the objective and alternates closed-form power allocation
with trust-region convex positioning steps, driven by an outer multiplier
loop.  Exhaustive-search and heuristic baselines, a seeded Manhattan-style
scenario generator, and a CSV experiment runner round out the package.
"""

from .baselines import BaselineResult, center, es2d, es3d, free
from .channel import (ChannelParams, PowerParams, link_capacity,
                      min_capacity_actual, min_capacity_los)
from .geometry import (AreaBounds, BlockedRegion, Building, Halfspace,
                       big_m_constant, blocked_region, build_regions,
                       is_blocked, prune_redundant, segment_blocked,
                       visible_faces)
from .lagrangian import (IterationTrace, Solution, SolverConfig,
                         evaluate_q_l, solve, update_multipliers)
from .power import PowerAllocation, allocate
from .scenario import (GeneratorConfig, Scenario, desk_config, generate, load,
                       save)
from .sca import ConvexSolution, SubproblemLinearization, linearize, solve_subproblem

__version__ = "0.1.0"

__all__ = [
    "AreaBounds", "BaselineResult", "BlockedRegion", "Building",
    "ChannelParams", "ConvexSolution", "GeneratorConfig", "Halfspace",
    "IterationTrace", "PowerAllocation", "PowerParams", "Scenario",
    "Solution", "SolverConfig", "SubproblemLinearization", "allocate",
    "big_m_constant", "blocked_region", "build_regions", "center",
    "desk_config", "es2d", "es3d", "evaluate_q_l", "free", "generate",
    "is_blocked", "link_capacity", "linearize", "load", "min_capacity_actual",
    "min_capacity_los", "prune_redundant", "save", "segment_blocked",
    "solve", "solve_subproblem", "visible_faces",
]
