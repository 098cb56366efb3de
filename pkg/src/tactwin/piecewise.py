"""Two-segment continuous piecewise-linear maps and their least-squares fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, InsufficientData, InvalidCalibration, InvalidInput

MIN_POINTS = 6
MIN_SEGMENT_POINTS = 3


@dataclass(frozen=True)
class PiecewiseLinear:
    """y = break_y + slope_lo*(x - break_x) left of the break, slope_hi right of it.

    Continuity at the break holds by construction. Evaluation outside
    [x_min, x_max] extrapolates the end segment; callers decide whether that
    is acceptable.
    """

    break_x: float
    break_y: float
    slope_lo: float
    slope_hi: float
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_min < self.break_x < self.x_max:
            raise InvalidCalibration(
                f"breakpoint {self.break_x} not inside ({self.x_min}, {self.x_max})")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        dx = x - self.break_x
        y = self.break_y + np.where(dx < 0, self.slope_lo * dx, self.slope_hi * dx)
        return float(y) if y.ndim == 0 else y

    @property
    def increasing(self) -> bool:
        return self.slope_lo > 0 and self.slope_hi > 0

    def inverse(self, y):
        """x for a given y; requires a strictly monotone map."""
        if not (self.increasing or (self.slope_lo < 0 and self.slope_hi < 0)):
            raise InvalidInput("map is not invertible")
        y = np.asarray(y, dtype=float)
        dy = y - self.break_y
        lo_side = dy < 0 if self.increasing else dy > 0
        x = self.break_x + np.where(lo_side, dy / self.slope_lo, dy / self.slope_hi)
        return float(x) if x.ndim == 0 else x

    def sse(self, x, y) -> float:
        r = np.asarray(y, dtype=float) - self(x)
        return float(np.dot(r, r))

    def to_dict(self) -> dict:
        return {"break_x": self.break_x, "break_y": self.break_y,
                "slope_lo": self.slope_lo, "slope_hi": self.slope_hi,
                "x_min": self.x_min, "x_max": self.x_max}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseLinear":
        expected = {"break_x", "break_y", "slope_lo", "slope_hi", "x_min", "x_max"}
        if set(d) != expected:
            raise InvalidCalibration(f"piecewise map keys {sorted(d)} != {sorted(expected)}")
        return cls(**{k: float(v) for k, v in d.items()})


def _hinged_fit(x, y, bx):
    """Continuous two-slope least squares with the break fixed at bx."""
    dx = x - bx
    A = np.column_stack([np.ones_like(x), np.minimum(dx, 0.0), np.maximum(dx, 0.0)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef, float(np.dot(r, r))


def _line_fit(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef, float(np.dot(r, r))


def fit_piecewise_linear(points, break_x: float | None = None) -> PiecewiseLinear:
    """Least-squares continuous two-segment fit with a globally optimal break.

    Every admissible partition of the points into a left and right run is
    considered (each run keeps at least three points). For a partition, the
    continuous optimum either has its break at the partition's boundary data
    point, or equals the two independent line fits when their intersection
    falls strictly between the boundary points. Evaluating both cases for all
    partitions yields the exact global minimiser rather than a grid estimate.

    Parameters
    ----------
    points : sequence of (x, y)
        At least six points with strictly increasing x.
    break_x : float, optional
        Fix the breakpoint instead of searching for it.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInput("points must be a sequence of (x, y) pairs")
    n = len(pts)
    if n < MIN_POINTS:
        raise InsufficientData(f"need at least {MIN_POINTS} points, got {n}")
    x, y = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise InvalidInput("points must be finite")
    if np.any(np.diff(x) <= 0):
        raise InvalidInput("x must be strictly increasing")

    k = MIN_SEGMENT_POINTS
    if break_x is not None:
        if np.count_nonzero(x <= break_x) < k or np.count_nonzero(x >= break_x) < k:
            raise DegenerateFit(f"breakpoint {break_x} leaves fewer than {k} points "
                                "on one segment")
        best_bx = float(break_x)
    else:
        best_bx, best_sse = None, np.inf
        # break on a data point
        for i in range(k - 1, n - k + 1):
            _, s = _hinged_fit(x, y, x[i])
            if s < best_sse:
                best_bx, best_sse = float(x[i]), s
        # break strictly between x[i] and x[i+1]
        for i in range(k - 1, n - k):
            (a1, b1), s1 = _line_fit(x[: i + 1], y[: i + 1])
            (a2, b2), s2 = _line_fit(x[i + 1:], y[i + 1:])
            if b1 == b2:
                continue
            xi = (a2 - a1) / (b1 - b2)
            if x[i] < xi < x[i + 1] and s1 + s2 < best_sse:
                best_bx, best_sse = float(xi), s1 + s2
        if best_bx is None:
            raise DegenerateFit("no admissible breakpoint")

    (by, s_lo, s_hi), _ = _hinged_fit(x, y, best_bx)
    return PiecewiseLinear(break_x=best_bx, break_y=float(by), slope_lo=float(s_lo),
                           slope_hi=float(s_hi), x_min=float(x[0]), x_max=float(x[-1]))
