"""Energy-flow-assisted amplify-and-forward relaying with wireless power transfer.

Optimizers for the power-splitting ratio of a single-antenna relay and the
relay processing matrix of a multiple-antenna relay, the MRC/MRT and genie
baselines, brute-force verifiers, and a Monte Carlo sweep harness.
"""

from .errors import (
    ConfigError,
    ConstraintViolated,
    DegenerateChannel,
    DomainError,
    NoConvergence,
    NotPositiveDefinite,
    ParseError,
    ValidationError,
)
from .channel import (
    ChannelRealization,
    ChannelStreams,
    Geometry,
    NoiseModel,
    PowerBudget,
)
from .siso import SisoChannel, SisoSolution, optimize_no_ef, optimize_ps_closed_form, optimize_ps_fractional
from .mimo import MimoProblem, MimoSolution, Variant, grid_search_ps, optimize_mrcmrt, optimize_relay_matrix

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization",
    "ChannelStreams",
    "ConfigError",
    "ConstraintViolated",
    "DegenerateChannel",
    "DomainError",
    "Geometry",
    "MimoProblem",
    "MimoSolution",
    "NoConvergence",
    "NoiseModel",
    "NotPositiveDefinite",
    "ParseError",
    "PowerBudget",
    "SisoChannel",
    "SisoSolution",
    "ValidationError",
    "Variant",
    "grid_search_ps",
    "optimize_mrcmrt",
    "optimize_no_ef",
    "optimize_ps_closed_form",
    "optimize_ps_fractional",
    "optimize_relay_matrix",
]
