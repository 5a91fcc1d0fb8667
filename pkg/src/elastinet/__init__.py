"""Elastic (Willmore-type) flow of planar triple-junction networks.

Submodules: geometry (curves, curvature), velocity (flow velocities and the
first variation), network (junction conditions, admissibility,
reparametrization), linear (implicit-step systems and the well-posedness
verifier), flow (time integration), scenarios (built-in initial data),
snapshots (file I/O), cli (command line).
"""

from .geometry import CurveSample, EnergyParams, elastic_energy
from .network import NetworkState

__all__ = ["CurveSample", "EnergyParams", "elastic_energy", "NetworkState"]
__version__ = "0.1.0"
