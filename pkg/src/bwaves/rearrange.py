"""Discrete symmetric-decreasing (Schwarz) rearrangement on periodic grids.

The rearrangement keeps the multiset of absolute sample values and re-places
it so values decrease with distance from the center index n/2.  Ranked values
(descending, ties broken by original index) go to the slots

    center, center-1, center+1, center-2, center+2, ...

On an even grid the left side holds one extra slot, so the smallest value
lands on the far-left sample.  Because every sample carries the same
quadrature weight, all lp norms are preserved exactly and the discrete
Hardy-Littlewood inequality holds exactly; only the gradient terms pick up a
discretization error, which is why the minimizer guards rearrangement steps
with a monotone-energy acceptance test.
"""
from __future__ import annotations

import numpy as np

from .grid import Field, FieldPair


def placement_order(n: int) -> np.ndarray:
    """Slot indices in fill order: center first, then alternating out-left/out-right."""
    center = n // 2
    order = np.empty(n, dtype=np.intp)
    order[0] = center
    paired = np.arange(1, center)  # both center-d and center+d exist for d < center
    order[1 : 2 * len(paired) + 1 : 2] = center - paired
    order[2 : 2 * len(paired) + 2 : 2] = center + paired
    order[-1] = 0
    return order


def symmetric_decreasing(u: Field) -> Field:
    """Rearrange |u| into the symmetric-decreasing profile about the center."""
    vals = np.abs(u.samples)
    ranked = vals[np.argsort(-vals, kind="stable")]
    out = np.empty(u.grid.n)
    out[placement_order(u.grid.n)] = ranked
    return Field(u.grid, out)


def project_pair(p: FieldPair) -> FieldPair:
    """Signed rearrangement (f*, -g*) used as the minimizer's shape projection."""
    return FieldPair(symmetric_decreasing(p.f), Field(p.grid, -symmetric_decreasing(p.g).samples))


def is_symmetric_decreasing(u: Field, rtol: float = 1e-10) -> bool:
    """True when u already equals its own rearrangement within rtol of the peak."""
    peak = float(np.max(np.abs(u.samples)))
    gap = float(np.max(np.abs(u.samples - symmetric_decreasing(u).samples)))
    return gap <= rtol * max(peak, 1e-300)
