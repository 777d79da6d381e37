"""Additively homomorphic secure aggregation for cross-silo federated learning.

Thin Python surface over the C++ core; see the package README for the
parameter profiles and the CLI.
"""

from esafl._esafl import *  # noqa: F401,F403
