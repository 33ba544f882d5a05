"""Discrete-event simulation of fog robotics versus cloud robotics request handling."""

from .engine import ServerLoadModel, Simulation, simulate
from .protocol import Architecture, Tier
from .scenarios import Scenario, arch_a, arch_b, arch_c

__all__ = [
    "Architecture", "Scenario", "ServerLoadModel", "Simulation", "Tier",
    "arch_a", "arch_b", "arch_c", "simulate",
]
