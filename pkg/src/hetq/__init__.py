"""hetq: performance toolkit for a two-class eager/tolerant queue.

Closed-form and recursive analytics for processor-sharing (PS) and
capacity-division (CD) admission policies, the pseudo-conservation law and
its achievable region, a dynamic-admission variant, a deterministic
discrete-event simulator, and an exact truncated-CTMC oracle.
"""

from .core import (
    DerivedLoads,
    MomentPair,
    PerfPoint,
    PolicyKind,
    PolicySpec,
    SystemParams,
    derived_loads,
    power_sum,
    stability_ps,
    validate_params,
)
from . import cd, conservation, ctmc, dynamic, errors, ps, sim

__version__ = "0.1.0"

__all__ = [
    "DerivedLoads",
    "MomentPair",
    "PerfPoint",
    "PolicyKind",
    "PolicySpec",
    "SystemParams",
    "derived_loads",
    "power_sum",
    "stability_ps",
    "validate_params",
    "cd",
    "conservation",
    "ctmc",
    "dynamic",
    "errors",
    "ps",
    "sim",
    "__version__",
]
