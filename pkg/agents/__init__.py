# This file makes the 'agents' directory a Python package.
from .manipulator_agent import ManipulatorAgent
from .orchestrator import DisturbanceSource, NetworkOrchestrator

__all__ = [
    "ManipulatorAgent",
    "DisturbanceSource",
    "NetworkOrchestrator",
]
