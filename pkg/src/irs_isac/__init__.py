"""Joint active-IRS / DFBS precoder design for integrated sensing and communication.

Phases of the IRS are restricted to an M-level alphabet and handled with a
relaxed projection (MaRLI); every subproblem is solved by power iteration on
a diagonally loaded bi-quadratic form.
"""

from ._validation import ConfigError, DimensionError, NumericalError
from .metrics import SnrBreakdown, snr_total
from .orchestrator import (
    IrsIsacDesigner,
    IterationRecord,
    RunResult,
    evaluate_only,
    run,
    sweep_quantization,
)
from .scene import CONTINUOUS, ChannelSet, PhaseSet, ScenarioConfig, build_scenario

__version__ = "0.1.0"

__all__ = [
    "CONTINUOUS",
    "ChannelSet",
    "ConfigError",
    "DimensionError",
    "IrsIsacDesigner",
    "IterationRecord",
    "NumericalError",
    "PhaseSet",
    "RunResult",
    "ScenarioConfig",
    "SnrBreakdown",
    "build_scenario",
    "evaluate_only",
    "run",
    "snr_total",
    "sweep_quantization",
]
