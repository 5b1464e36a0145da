"""Opinion dynamics with increasing self-confidence."""

from confidyn.kernels import BACKEND
from confidyn.graphs import (
    ExplicitSequence,
    FixedSequence,
    GraphSnapshot,
    PeriodicSequence,
    RandomModel,
    RandomSequence,
    build_circulant,
    build_periodic_tight,
    out_degrees,
    period_degrees,
    sample_random_snapshot,
    snapshot_at,
    truth_reachability,
)
from confidyn.dynamics import (
    SystemState,
    Trajectory,
    fixed_closed_form,
    run,
    step_agentwise,
    step_matrix,
    update_matrix,
)

__version__ = "0.1.0"
