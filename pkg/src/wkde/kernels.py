"""Compactly supported probability kernels on the cube [-1/2, 1/2]^d.

Only a closed whitelist of families is offered.  Each is an indicator or a
polynomial times an indicator, so the VC-type entropy requirement on the
kernel class holds by construction.  The familiar [-1, 1] parameterizations
are rescaled to the half-width 1/2 support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "kernel",
    "kernel_eval",
    "kernel_norms",
]

FAMILIES = ("boxcar", "triangular", "epanechnikov")

# (l1, l2, sup) of the one-dimensional profiles on [-1/2, 1/2]
_NORMS_1D = {
    "boxcar": (1.0, 1.0, 1.0),
    "triangular": (1.0, 2.0 / math.sqrt(3.0), 2.0),
    "epanechnikov": (1.0, math.sqrt(6.0 / 5.0), 1.5),
}


def _profile(family: str, u: np.ndarray) -> np.ndarray:
    a = np.abs(u)
    inside = a <= 0.5
    if family == "boxcar":
        out = inside.astype(float)
    elif family == "triangular":
        out = np.where(inside, 2.0 * (1.0 - 2.0 * a), 0.0)
    elif family == "epanechnikov":
        out = np.where(inside, 1.5 * (1.0 - 4.0 * a * a), 0.0)
    else:
        raise ValueError(f"unknown kernel family {family!r}")
    return out


@dataclass(frozen=True)
class KernelSpec:
    """A product kernel K(u) = prod_j k(u_j) built from a 1-d profile k.

    For ``dimension == 1`` this is just the profile itself.  The stored
    norms are closed forms and factor across coordinates.
    """

    family: str
    dimension: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; choose from {FAMILIES}"
            )
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def support_halfwidth(self) -> float:
        return 0.5

    @property
    def l1_norm(self) -> float:
        return _NORMS_1D[self.family][0] ** self.dimension

    @property
    def l2_norm(self) -> float:
        return _NORMS_1D[self.family][1] ** self.dimension

    @property
    def sup_norm(self) -> float:
        return _NORMS_1D[self.family][2] ** self.dimension

    @property
    def is_indicator(self) -> bool:
        return self.family == "boxcar"

    def __call__(self, u):
        return kernel_eval(self, u)


def kernel(name: str, dimension: int = 1) -> KernelSpec:
    """Build a kernel by name; ``product-<family>`` is accepted for d > 1."""
    if name.startswith("product-"):
        name = name[len("product-"):]
    return KernelSpec(name, dimension)


def kernel_eval(k: KernelSpec, u) -> np.ndarray | float:
    """Evaluate K at one point or an array of points.

    In one dimension ``u`` may be a scalar or any array of scalars.  For
    ``d > 1`` the last axis of ``u`` must have length ``d``.
    """
    arr = np.asarray(u, dtype=float)
    if k.dimension == 1:
        if arr.ndim >= 1 and arr.shape[-1:] == (1,) and arr.ndim > 1:
            arr = arr[..., 0]
        out = _profile(k.family, arr)
    else:
        if arr.ndim == 0 or arr.shape[-1] != k.dimension:
            raise ValueError(
                f"point has dimension {arr.shape[-1] if arr.ndim else 1}, "
                f"kernel has dimension {k.dimension}"
            )
        out = np.prod(_profile(k.family, arr), axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def kernel_norms(k: KernelSpec) -> tuple[float, float, float]:
    """Return ``(l1, l2, sup)`` of the kernel."""
    return k.l1_norm, k.l2_norm, k.sup_norm
