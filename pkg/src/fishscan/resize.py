"""Cubic B-spline interpolation and fixed-size image resampling.

A spline over samples y_0..y_n on the uniform grid x_i = x_0 + i*h is

    S(x) = sum_{i=-3}^{n-1} C_i B_{3,i}(x)

where B_{3,i} is the uniform cubic B-spline supported on [x_i, x_{i+4}].
The n + 1 interpolation conditions leave two degrees of freedom, closed by
end conditions: ``"not-a-knot"`` (default) or ``"natural"``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BadTarget, OutOfDomain, TooFewSamples
from .raster import RgbImage

END_CONDITIONS = ("not-a-knot", "natural")


def cubic_bspline_basis(u) -> np.ndarray:
    """Uniform cubic B-spline with support [0, 4], evaluated at ``u``."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    p0 = (u >= 0) & (u < 1)
    p1 = (u >= 1) & (u < 2)
    p2 = (u >= 2) & (u < 3)
    p3 = (u >= 3) & (u <= 4)
    out[p0] = u[p0] ** 3 / 6.0
    v = u[p1]
    out[p1] = (-3 * v**3 + 12 * v**2 - 12 * v + 4) / 6.0
    v = u[p2]
    out[p2] = (3 * v**3 - 24 * v**2 + 60 * v - 44) / 6.0
    out[p3] = (4 - u[p3]) ** 3 / 6.0
    return out


@dataclass(frozen=True)
class SplineGrid1D:
    """Fitted cubic B-spline.

    ``coefficients[k]`` holds C_{k-3}, so the array has n + 3 entries.
    """

    n: int
    h: float
    x0: float
    coefficients: np.ndarray

    @property
    def x_end(self) -> float:
        return self.x0 + self.n * self.h

    def knots(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n + 1)

    def __call__(self, x):
        return eval_spline_1d(self, x)


def _system_matrix(n: int, end_condition: str) -> np.ndarray:
    """Rows: [start condition, S(x_0) .. S(x_n), end condition]."""
    size = n + 3
    a = np.zeros((size, size))
    for k in range(n + 1):
        a[k + 1, k:k + 3] = (1 / 6, 4 / 6, 1 / 6)
    if end_condition == "natural" or n == 1:
        # S''(x_0) = S''(x_n) = 0
        a[0, 0:3] = (1, -2, 1)
        a[-1, n:n + 3] = (1, -2, 1)
    elif n == 2:
        # both sides of the single interior knot share one cubic and x_1 is
        # both "second" and "second to last" knot: zero jerk on each piece
        a[0, 0:4] = (-1, 3, -3, 1)
        a[-1, 1:5] = (-1, 3, -3, 1)
    else:
        # S''' continuous at x_1 and x_{n-1}
        a[0, 0:5] = (-1, 4, -6, 4, -1)
        a[-1, n - 2:n + 3] = (-1, 4, -6, 4, -1)
    return a


@lru_cache(maxsize=64)
def _fit_operator(n: int, end_condition: str) -> np.ndarray:
    """Matrix mapping the n + 1 samples to the n + 3 coefficients."""
    inv = np.linalg.inv(_system_matrix(n, end_condition))
    op = np.ascontiguousarray(inv[:, 1:n + 2])
    op.setflags(write=False)
    return op


def fit_spline_1d(samples, end_condition: str = "not-a-knot", x0: float = 0.0,
                  h: float = 1.0) -> SplineGrid1D:
    """Interpolate ``samples`` placed at x0, x0 + h, ..., x0 + n*h."""
    y = np.asarray(samples, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise TooFewSamples(f"need at least 2 samples, got {y.size}")
    if end_condition not in END_CONDITIONS:
        raise ValueError(f"unknown end condition {end_condition!r}")
    n = y.size - 1
    a = _system_matrix(n, end_condition)
    rhs = np.concatenate([[0.0], y, [0.0]])
    coeffs = np.linalg.solve(a, rhs)
    return SplineGrid1D(n=n, h=float(h), x0=float(x0), coefficients=coeffs)


def _basis_matrix(u: np.ndarray, n: int) -> np.ndarray:
    """(len(u), n + 3) matrix of B_{3,i}(u) for local coordinates u in [0, n]."""
    j = np.minimum(np.floor(u).astype(np.int64), n - 1)
    rows = np.arange(u.size)
    out = np.zeros((u.size, n + 3))
    for m in range(4):
        # basis C_{j-3+m} lives at array column j + m and starts at knot j - 3 + m
        out[rows, j + m] = cubic_bspline_basis(u - (j - 3 + m))
    return out


def eval_spline_1d(spline: SplineGrid1D, x):
    """Evaluate the spline at ``x`` (scalar or array) inside [x_0, x_n]."""
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    slack = 1e-12 * max(1.0, abs(spline.x_end))
    if np.any(xs < spline.x0 - slack) or np.any(xs > spline.x_end + slack):
        raise OutOfDomain(f"x outside [{spline.x0}, {spline.x_end}]")
    u = np.clip((xs - spline.x0) / spline.h, 0.0, float(spline.n))
    values = _basis_matrix(u, spline.n) @ spline.coefficients
    if np.ndim(x) == 0:
        return float(values[0])
    return values


@lru_cache(maxsize=64)
def resample_matrix(n_in: int, n_out: int, end_condition: str = "not-a-knot") -> np.ndarray:
    """Linear operator taking n_in samples to n_out spline values.

    Output sample j sits at input coordinate j * (n_in - 1) / (n_out - 1), so
    the first and last samples of both grids coincide.
    """
    if n_in == 1:
        op = np.ones((n_out, 1))
    else:
        n = n_in - 1
        u = np.arange(n_out) * (n / (n_out - 1))
        u[-1] = n
        op = _basis_matrix(u, n) @ _fit_operator(n, end_condition)
    op.setflags(write=False)
    return op


def resize_image(image: RgbImage, target_width: int, target_height: int,
                 end_condition: str = "not-a-knot") -> RgbImage:
    """Resample to ``target_width`` x ``target_height``; rows first, then columns."""
    if int(target_width) != target_width or int(target_height) != target_height:
        raise BadTarget("target dimensions must be integers")
    if target_width < 2 or target_height < 2:
        raise BadTarget(f"target must be at least 2x2, got {target_width}x{target_height}")
    rx = resample_matrix(image.width, int(target_width), end_condition)
    ry = resample_matrix(image.height, int(target_height), end_condition)
    planes = np.moveaxis(image.pixels, 2, 0)
    # resample the offset from each channel's minimum: the operator rows sum to 1
    # only up to rounding, and this keeps a flat channel exactly flat
    base = planes.min(axis=(1, 2), keepdims=True)
    out = ry @ ((planes - base) @ rx.T) + base
    return RgbImage(np.clip(np.moveaxis(out, 0, 2), 0.0, 1.0))
