"""Pointwise geometry of the alpha-Grushin plane.

The plane carries the length element

    ds^2 = dx1^2 + dx2^2 / |x1|^(2 alpha)

which is Riemannian off the singular line Y = {x1 = 0}.  The canonical
quasisymmetry ``phi`` flattens it: in the chart (u, v) = phi(x1, x2) the
same length element reads ``|du, dv| / |x1(u)|^alpha``, a conformal
multiple of the Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Point(NamedTuple):
    x1: float
    x2: float


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite nonnegative real, got {alpha!r}")
    return alpha


def beta(alpha: float) -> float:
    """Snowflake exponent 1/(1+alpha) of the singular line."""
    return 1.0 / (1.0 + check_alpha(alpha))


def as_points(p) -> np.ndarray:
    """Coerce a point or an (n, 2) array-like into a float array."""
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Polyline:
    """Sampled curve: vertices (n, 2) and a strictly increasing parameter grid."""

    vertices: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise ValueError("a polyline needs at least two 2-d vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        t = np.array(self.params, dtype=float)
        if t.shape != (len(v),):
            raise ValueError("params must match the vertex count")
        if np.any(np.diff(t) <= 0):
            raise ValueError("params must be strictly increasing")
        if np.any(np.all(np.diff(v, axis=0) == 0, axis=1)):
            raise ValueError("consecutive vertices must differ")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "params", t)

    @classmethod
    def from_vertices(cls, vertices) -> "Polyline":
        v = np.asarray(vertices, dtype=float)
        return cls(v, np.linspace(0.0, 1.0, len(v)))

    def __len__(self) -> int:
        return len(self.vertices)

    def euclidean_length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.vertices, axis=0).T)))


def grushin_speed(p, velocity, alpha: float):
    """Grushin length element at ``p`` for the given velocity.

    Infinite exactly when the point lies on Y and the vertical velocity is
    nonzero (alpha > 0).  Vectorised over leading dimensions.
    """
    alpha = check_alpha(alpha)
    p = as_points(p)
    vel = as_points(velocity)
    x1 = np.abs(p[..., 0])
    dx, dy = vel[..., 0], vel[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        vert = np.where(dy == 0, 0.0, np.abs(dy) / x1**alpha)
    out = np.hypot(dx, vert)
    return float(out) if out.ndim == 0 else out


def canonical_phi(p, alpha: float):
    """phi(x1, x2) = (|x1|^alpha x1 / (1+alpha), x2)."""
    alpha = check_alpha(alpha)
    p = as_points(p)
    out = np.empty_like(p)
    out[..., 0] = np.abs(p[..., 0]) ** alpha * p[..., 0] / (1.0 + alpha)
    out[..., 1] = p[..., 1]
    return out


def chart_to_x1(u, alpha: float):
    """First Grushin coordinate x1(u) of the chart abscissa u."""
    u = np.asarray(u, dtype=float)
    b = 1.0 / (1.0 + alpha)
    return (1.0 + alpha) ** b * np.sign(u) * np.abs(u) ** b


def canonical_phi_inverse(p, alpha: float):
    alpha = check_alpha(alpha)
    p = as_points(p)
    out = np.empty_like(p)
    out[..., 0] = chart_to_x1(p[..., 0], alpha)
    out[..., 1] = p[..., 1]
    return out


def dilate(p, lam: float, alpha: float):
    """Grushin dilation (x1, x2) -> (lam x1, lam^(1+alpha) x2)."""
    alpha = check_alpha(alpha)
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    p = as_points(p)
    out = np.empty_like(p)
    out[..., 0] = lam * p[..., 0]
    out[..., 1] = lam ** (1.0 + alpha) * p[..., 1]
    return out


def snowflake_distance_on_Y(b1: float, b2: float, alpha: float, C: float) -> float:
    """Distance between (0, b1) and (0, b2), given C = d((0,0), (0,1))."""
    if not C > 0:
        raise ValueError("C must be positive")
    return C * abs(b2 - b1) ** beta(alpha)


def abs_power_integral(a: float, b: float, alpha: float) -> float:
    """Integral of |x|^-alpha over [a, b]; may be +inf when 0 is in [a, b]."""
    if b < a:
        a, b = b, a
    if a == b:
        return 0.0
    if a < 0 < b:
        return abs_power_integral(a, 0.0, alpha) + abs_power_integral(0.0, b, alpha)
    if b <= 0:
        a, b = -b, -a
    if a == 0 and alpha >= 1:
        return np.inf
    if alpha == 1:
        return float(np.log(b / a))
    e = 1.0 - alpha
    return float((b**e - a**e) / e)


def grushin_area(rect, alpha: float) -> float:
    """H^2_alpha measure of the rectangle (x_lo, x_hi, y_lo, y_hi) off Y.

    Rectangles meeting the singular line are infinite for alpha >= 1.
    """
    alpha = check_alpha(alpha)
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rectangle needs positive side lengths")
    col = abs_power_integral(x0, x1, alpha)
    return col * (y1 - y0)
