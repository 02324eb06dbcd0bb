"""Monte Carlo link-crossing experiments: reflecting random walks,
Buffon's needle and Buffon's noodle on a parallel-line lattice."""

__version__ = "0.1.0"

from .errors import ConfigError, InvalidInputError, OutOfRegimeError
from .geometry import (
    FoldedPath,
    Link,
    Point,
    Room,
    count_link_crossings,
    fold_coordinate,
    fold_step,
    unfold_crossings,
)
from .stats import (
    EstimateRecord,
    Histogram,
    Tally,
    mean_interval,
    tv_distance_to_uniform,
    wilson_interval,
)
from .walker import (
    WalkConfig,
    WalkerState,
    WalkSummary,
    merge_walk_summaries,
    next_angle,
    run_walk,
    run_walk_replicas,
    step,
)
from .buffon import (
    DropConfig,
    NeedleDrop,
    NoodleShape,
    analytic_crossing_p,
    drop_noodle,
    estimate_expected_crossings,
    estimate_needle_p,
    make_shape,
    needle_crosses,
    sample_drop,
)
