"""Bench for quantum-repeater fidelity, resources and congestion.

Submodules:

* :mod:`qrepbench.analytic` - closed-form recursions, bounds and resource counts
* :mod:`qrepbench.statevec` - small state-vector simulator used as an oracle
* :mod:`qrepbench.network` - repeater graphs, routing and capacity
* :mod:`qrepbench.gridsim` - grid congestion Monte Carlo
* :mod:`qrepbench.cli` - ``qrepbench`` command line
"""

from .analytic import (
    ECC_REPETITION,
    PURIFICATION,
    Scheme,
    ecc_bell_fidelity,
    fidelity_trajectory,
    iterations_to_target,
    memory_required,
    operations_required,
    purify_step,
    resource_profile,
)
from .errors import QRepBenchError

__version__ = "0.1.0"

__all__ = [
    "ECC_REPETITION",
    "PURIFICATION",
    "Scheme",
    "QRepBenchError",
    "ecc_bell_fidelity",
    "fidelity_trajectory",
    "iterations_to_target",
    "memory_required",
    "operations_required",
    "purify_step",
    "resource_profile",
]
