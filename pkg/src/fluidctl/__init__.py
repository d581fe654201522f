"""Fluid value function approximation for delay-aware power control.

Modules: ``special_math`` (E1 and root finding), ``fluid_value`` (per-pair
closed-form value functions), ``network_model`` (the interference network),
``controllers`` (distributed water-filling and baselines), ``sim_engine``
(epoch/slot simulation), ``mdp_oracle`` (exact small-instance value
iteration) and ``cli`` (the ``fluidctl`` command).
"""

import warnings

# numba falls back to its OpenMP/workqueue layer when the system TBB is too old;
# the fallback is fine and the notice is noise on every parallel run
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .controllers import Controller, ControllerKind, GameConfig, solve_game, waterfill_decoupled
from .errors import (
    ConfigError,
    DomainError,
    FluidError,
    InfeasibleLoad,
    NoConvergence,
    NoSignChange,
    NonMonotoneBranch,
    OutOfRange,
    Overdraft,
    StateExplosion,
)
from .fluid_value import PairParams, build_fluid_table, eval_J, eval_J_prime, solve_steady_state
from .network_model import REFERENCE_RATE_SCALE, NetworkConfig, symmetric_config
from .sim_engine import SimSpec, run_simulation

__version__ = "0.1.0"
