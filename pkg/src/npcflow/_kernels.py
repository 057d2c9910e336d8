"""Kernel backend selection.

The compiled Cython extension is preferred; the pure NumPy module is used
when the extension is missing or ``NPCFLOW_PURE_PYTHON`` is set to a truthy
value.  ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels

_FORCE_PURE = os.environ.get("NPCFLOW_PURE_PYTHON", "").lower() in ("1", "true", "yes")

try:
    if _FORCE_PURE:
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

KERNEL_NAMES = (
    "minkowski_dot", "hyperbolic_distance", "hyperbolic_lift", "hyperbolic_geodesic",
    "hyperbolic_distances", "euclidean_distances", "pairwise_euclidean",
    "pairwise_hyperbolic", "affine_chain", "hyperbolic_anchor_chain",
    "busemann_gap", "busemann_step", "hyperbolic_busemann_chain", "npc_gaps_euclidean",
    "npc_gaps_hyperbolic", "dykstra_halfspaces",
)

minkowski_dot = _impl.minkowski_dot
hyperbolic_distance = _impl.hyperbolic_distance
hyperbolic_lift = _impl.hyperbolic_lift
hyperbolic_geodesic = _impl.hyperbolic_geodesic
hyperbolic_distances = _impl.hyperbolic_distances
euclidean_distances = _impl.euclidean_distances
pairwise_euclidean = _impl.pairwise_euclidean
pairwise_hyperbolic = _impl.pairwise_hyperbolic
affine_chain = _impl.affine_chain
hyperbolic_anchor_chain = _impl.hyperbolic_anchor_chain
busemann_gap = _impl.busemann_gap
busemann_step = _impl.busemann_step
hyperbolic_busemann_chain = _impl.hyperbolic_busemann_chain
npc_gaps_euclidean = _impl.npc_gaps_euclidean
npc_gaps_hyperbolic = _impl.npc_gaps_hyperbolic
dykstra_halfspaces = _impl.dykstra_halfspaces


def backend_module(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
