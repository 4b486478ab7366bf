"""Simulator for a driven, interacting N-spin Rosen-Zener quantum battery.

Exact propagation on the (N+1)-dimensional Dicke space, a closed-form
gauge-transformation solution, battery figures of merit, a static spectrum
module and deterministic sweep drivers behind the ``rzbattery`` CLI.
"""

__version__ = "0.1.0"

from .model import ModelParams  # noqa: E402
from .propagator import EvolutionConfig, NumericalError, Trajectory, evolve  # noqa: E402
from .spin import SpinSpace  # noqa: E402

__all__ = ["ModelParams", "EvolutionConfig", "NumericalError", "Trajectory", "evolve", "SpinSpace",
           "__version__"]
