"""Hierarchical matrix completion over GF(q) with graph side information.

Generates synthetic instances (MDS-coded rating matrices, hierarchical
stochastic block model similarity graphs, noisy partial observations),
estimates the ground truth by exact and staged maximum-likelihood procedures,
computes the closed-form sample-complexity threshold, and runs reproducible
Monte-Carlo sweeps.
"""

__version__ = "0.1.0"
