"""Hierarchical heavy hitters over IPv4 prefix lattices.

The randomized sketch (:class:`RhhhSketch`) updates at most one Space Saving
table per packet; :class:`FullUpdateSketch` is the update-everything
baseline; :mod:`rhhh.oracle` computes exact answers for validation.
"""

__version__ = "0.1.0"

from .hierarchy import HierarchySpec, PacketKey, Prefix, PrefixPattern
from .sketch import FullUpdateSketch, HhhCandidate, RhhhSketch
from .spacesaving import SpaceSavingTable
from .stats import ConfidenceParams, epsilon_s_of_n, normal_quantile, psi

__all__ = [
    "ConfidenceParams",
    "FullUpdateSketch",
    "HhhCandidate",
    "HierarchySpec",
    "PacketKey",
    "Prefix",
    "PrefixPattern",
    "RhhhSketch",
    "SpaceSavingTable",
    "epsilon_s_of_n",
    "normal_quantile",
    "psi",
]
