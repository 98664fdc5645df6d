"""Simulation, inference, and evaluation toolkit for human-robot bandit teams.

A human learner suggests arms, a robot intercepts and executes them while
observing only the suggestions, and the toolkit measures regret, infers
reward parameters from actions alone, and estimates the information the
human's actions carry about the best arm.
"""

from .core import (
    BanditInstance,
    BetaPrior,
    RegretLedger,
    SeedTree,
    StepRecord,
    Trajectory,
    empirical_frequencies,
    pull,
    regret_of,
    sample_instance,
)
from .specs import BatchConfig, BatchResult, HumanSpec, RobotSpec

__version__ = "0.1.0"


def backend_name() -> str:
    """Engine lane in use: "compiled" when the extension is built, else "pure"."""
    from . import engine

    return engine.backend_name()
