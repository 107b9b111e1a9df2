"""Flow-tunnel geometry and the fuzzy rules that map per-second evidence to a state.

The experience space has three axes: challenge (x), skill (y), and motivation
(z).  Good experience lives in a cylindrical tunnel around the diagonal
x = y = z; the experience value falls off as a Gaussian of the distance to
that diagonal.  On top of the geometry, a small fuzzy rule set turns the
per-second flow flag, the motivation balance delta, and the session-level
positive-affect correlation into one of three states (0 = average,
1 = good, 2 = best).
"""

import math
from dataclasses import dataclass

import numpy as np

GUT_STATES = (0, 1, 2)

# Correlation threshold below which positive affect and flow are treated as
# weakly correlated; the best state requires at least this.
X1_THRESHOLD = 0.6

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_3 = math.sqrt(3.0)


@dataclass
class GutParams:
    """Game-specific constants for the tunnel model.

    k: attraction constant toward each coordinate axis (force field).
    c: tunnel radius.
    d: offset subtracted in the motivation balance (delta = #PA - #NA - d).
    beta0..beta3: regression coefficients for the quadratic tunnel predicate.
    """

    k: float = 1.0
    c: float = 1.0
    d: int = 2
    beta0: float = 0.0
    beta1: float = 1.0
    beta2: float = -1.0
    beta3: float = 1.0

    def validate(self):
        if not self.c > 0:
            raise ValueError(f"tunnel radius c must be positive, got {self.c}")
        if not self.k > 0:
            raise ValueError(f"force constant k must be positive, got {self.k}")
        if int(self.d) != self.d or self.d < 0:
            raise ValueError(f"motivation offset d must be a nonnegative integer, got {self.d}")
        return self


def _point(p):
    arr = np.asarray(p, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"point must have 3 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def axis_distance(p):
    """Distance from a point to the diagonal x = y = z."""
    x, y, z = _point(p)
    return math.sqrt((z - y) ** 2 + (x - z) ** 2 + (y - x) ** 2) / _SQRT_3


def gux_value(p):
    """Experience value at a point: Gaussian of the diagonal distance, peak 1/sqrt(2*pi)."""
    d = axis_distance(p)
    return math.exp(-0.5 * d * d) / _SQRT_2PI


def in_tunnel(p, params):
    """True iff the point's experience value clears the radius-c threshold.

    Equivalent to axis_distance(p) <= c.
    """
    params.validate()
    threshold = math.exp(-0.5 * params.c * params.c) / _SQRT_2PI
    return gux_value(p) >= threshold


def quadratic_tunnel_predicate(p, params):
    """Regression-coefficient form of tunnel membership, kept for comparison only.

    Evaluates (b1*(x+y) + b2*z + c)^2 + b3*(x+y)^2 <= c^2.  Classification
    uses in_tunnel; this algebraic variant is not consistent with the
    distance form and exists so both can be inspected side by side.
    """
    x, y, z = _point(p)
    lhs = (params.beta1 * (x + y) + params.beta2 * z + params.c) ** 2
    lhs += params.beta3 * (x + y) ** 2
    return lhs <= params.c ** 2


def net_force_direction(p, params):
    """Sum of the three per-axis attractions K/r^2, each pulling toward its axis.

    r is the perpendicular distance from the point to a coordinate axis and
    the pull acts along the in-plane perpendicular.  Raises for points lying
    on any coordinate axis, where the pull is singular.
    """
    params.validate()
    pt = _point(p)
    total = np.zeros(3)
    for axis in range(3):
        foot = np.zeros(3)
        foot[axis] = pt[axis]
        offset = foot - pt
        r = float(np.linalg.norm(offset))
        if r == 0.0:
            raise ValueError(f"point {tuple(pt)} lies on coordinate axis {axis}; force is singular")
        total += (params.k / r ** 2) * (offset / r)
    return total


def motivation_delta(pa_count, na_count, params):
    """Motivation balance: positive-affect count minus negative minus the offset d."""
    if pa_count < 0 or na_count < 0:
        raise ValueError("affect counts must be nonnegative")
    return int(pa_count) - int(na_count) - int(params.d)


def classify(flow, delta, x1):
    """Fuzzy state rules: no flow -> 0; flow with delta == 0 and x1 >= 0.6 -> 2; else 1."""
    if not -1.0 - 1e-9 <= x1 <= 1.0 + 1e-9:
        raise ValueError(f"x1 must be a correlation in [-1, 1], got {x1}")
    if not flow:
        return 0
    if delta == 0 and x1 >= X1_THRESHOLD:
        return 2
    return 1
