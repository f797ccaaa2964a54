"""Pre- and post-selected spin ensembles: ABL probabilities, no-signaling
classes, super-quantum CHSH values and entanglement swapping."""

from .abl import (
    ApplyUnitary,
    DegeneratePostSelection,
    EventSequence,
    Measure,
    OutcomeDistribution,
    PrePostEnsemble,
    ZeroBranch,
    abl_distribution,
    condition_on_outcome,
    joint_local_abl,
    sequential_abl,
)
from .qstate import MeasurementDirection, PureState, StateError

__version__ = "0.1.0"

__all__ = [
    "ApplyUnitary",
    "DegeneratePostSelection",
    "EventSequence",
    "Measure",
    "MeasurementDirection",
    "OutcomeDistribution",
    "PrePostEnsemble",
    "PureState",
    "StateError",
    "ZeroBranch",
    "abl_distribution",
    "condition_on_outcome",
    "joint_local_abl",
    "sequential_abl",
    "__version__",
]
