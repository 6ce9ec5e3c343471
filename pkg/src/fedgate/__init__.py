"""Federated learning simulations with client-conditioned gated units.

Subpackages cover dense linear algebra kernels (``linalg``), the classifier
and its manual backpropagation (``nn``), the FedAvg orchestrator (``fed``),
embedding-cluster client simulation (``simclients``), Gaussian Fréchet
heterogeneity metrics (``hetero``), dataset formats and generators
(``data``), and the experiment CLI (``cli``/``experiment``).
"""

from . import data, errors, fed, hetero, linalg, nn, simclients  # noqa: F401

__version__ = "0.1.0"
