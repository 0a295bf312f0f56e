"""Randomized gradient tracking over undirected networks.

The package simulates a family of decentralized gradient tracking methods in
which nodes either run several synchronous neighbor-averaging rounds per
iteration (with probability ``p``) or update from purely local information,
and it evaluates the matching convergence-rate matrices, step-size bounds,
and computation/communication complexity trade-offs analytically.
"""

from rgta.topology import (
    CommunicationSet,
    MixingMatrix,
    Topology,
    beta_of,
    build_topology,
    communication_set,
    consensus_apply,
    mixing_matrix,
)

__all__ = [
    "CommunicationSet",
    "MixingMatrix",
    "Topology",
    "beta_of",
    "build_topology",
    "communication_set",
    "consensus_apply",
    "mixing_matrix",
]

__version__ = "0.1.0"
