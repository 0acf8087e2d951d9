"""Multi-Davydov D2 variational dynamics of a driven Rabi dimer coupled to a phonon mode."""
__version__ = "0.1.0"

from .params import DriveParams, ModelParams
from .ansatz import MultiD2State, initialize
from .integrator import PropagationAbort, PropagationConfig, propagate, rk4_step
from .observables import TrajectoryRecord, snapshot

__all__ = [
    "DriveParams", "ModelParams", "MultiD2State", "initialize", "PropagationAbort",
    "PropagationConfig", "propagate", "rk4_step", "TrajectoryRecord", "snapshot",
]
