"""
Nodal quadrature rules on uniform grids.

All histories arrive as samples on the nodes of a uniform grid, so every
integral in the package is a weighted sum over nodes. Segment rules integrate
over an arbitrary run of L intervals and are used by the history operators,
whose integration ranges start or stop at every node.
"""
from functools import lru_cache

import numpy as np

from hereditary.errors import DimensionError

RULES = ("trapezoid", "simpson")


def nodal_weights(n: int, h: float, rule: str = "simpson") -> np.ndarray:
    """
    Quadrature weights for n uniform intervals of width h.

    Args:
        n: Number of intervals (n + 1 nodes)
        h: Interval width
        rule: "trapezoid" or "simpson" (composite, n even)

    Returns:
        Array of n + 1 positive weights summing to n * h
    """
    if rule not in RULES:
        raise DimensionError(f"Unknown quadrature rule '{rule}', expected one of {RULES}")
    if n < 1:
        raise DimensionError("Quadrature needs at least one interval")
    if rule == "trapezoid":
        w = np.full(n + 1, h)
        w[0] = w[-1] = 0.5 * h
        return w
    if n % 2:
        raise DimensionError(f"Composite Simpson needs an even interval count, got n={n}")
    w = np.empty(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@lru_cache(maxsize=8192)
def _segment_weights_cached(length: int, h: float, rule: str) -> np.ndarray:
    w = np.zeros(length + 1)
    if length == 0:
        return w
    if rule == "trapezoid" or length == 1:
        return nodal_weights(length, h, "trapezoid")
    if length % 2 == 0:
        return nodal_weights(length, h, "simpson")
    # odd run: Simpson on the leading even part, 3/8 rule on the last three intervals
    head = length - 3
    if head > 0:
        w[: head + 1] += nodal_weights(head, h, "simpson")
    w[head:] += (3.0 * h / 8.0) * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def segment_weights(length: int, h: float, rule: str = "simpson") -> np.ndarray:
    """Weights integrating over a run of `length` intervals (any parity)."""
    if rule not in RULES:
        raise DimensionError(f"Unknown quadrature rule '{rule}', expected one of {RULES}")
    w = _segment_weights_cached(int(length), float(h), rule)
    return w.copy()
