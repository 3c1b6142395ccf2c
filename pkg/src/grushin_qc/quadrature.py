"""Grushin length of polylines by panelled Gauss-Legendre quadrature.

Along a straight segment with slope m = dx2/dx1 the length is

    int sqrt(1 + m^2 / |x1|^(2 alpha)) dx1,

smooth away from x1 = 0 and behaving like |m| |x1|^-alpha near it.  Pieces
are split where x1 changes sign; pieces ending on the singular line are
graded geometrically (ratio 1/2) toward it.
"""

from __future__ import annotations

import numpy as np

from .geometry import Polyline, check_alpha

GRADING_FLOOR = 1e-12
DIVERGENCE_SUM = 1e6
_REL_TOL = 1e-11
_MAX_BISECTIONS = 60

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to converge (distinct from a genuine +inf)."""


def _integrand(x, m, alpha):
    # x > 0 throughout
    return np.hypot(1.0, m * x ** (-alpha))


def _gl(a, b, m, alpha, rule):
    nodes, weights = rule
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    return half * (_integrand(x, m[:, None], alpha) @ weights)


def _dyadic_panels(a, b, m):
    """Split [a, b] (0 < a < b) into panels with b_i / a_i <= 2."""
    ratio = b / a
    counts = np.where(ratio > 2.0, np.ceil(np.log2(ratio)).astype(int), 1)
    if np.all(counts == 1):
        return a, b, m, np.arange(len(a))
    owner = np.repeat(np.arange(len(a)), counts)
    k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    n = counts[owner]
    # geometric edges a * (b/a)^(k/n)
    lo = a[owner] * ratio[owner] ** (k / n)
    hi = a[owner] * ratio[owner] ** ((k + 1) / n)
    hi = np.where(k + 1 == n, b[owner], hi)
    return lo, hi, m[owner], owner


def _positive_pieces(a, b, m, alpha):
    """Integrate over pieces [a, b] with 0 < a < b, vectorised and adaptive."""
    total = np.zeros(len(a))
    lo, hi, mm, owner = _dyadic_panels(a, b, m)
    for _ in range(_MAX_BISECTIONS):
        coarse = _gl(lo, hi, mm, alpha, _GL_LO)
        fine = _gl(lo, hi, mm, alpha, _GL_HI)
        ok = np.abs(fine - coarse) <= _REL_TOL * np.abs(fine) + 1e-300
        np.add.at(total, owner[ok], fine[ok])
        if ok.all():
            return total
        bad = ~ok
        lo, hi, mm, owner = lo[bad], hi[bad], mm[bad], owner[bad]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        mm, owner = np.concatenate([mm, mm]), np.concatenate([owner, owner])
    raise QuadratureError("segment quadrature did not converge")


def graded_to_zero(width: float, m: float, alpha: float) -> float:
    """Length of the piece 0 < x1 <= width of a segment with slope m.

    Dyadic panels [w/2, w] are summed down to GRADING_FLOOR.  The piece is
    declared divergent (+inf) when the partial sums keep growing by more than
    10% for three levels past DIVERGENCE_SUM, or when the panel contributions
    stop decaying (ratio test), which is how a |x1|^-1 type singularity shows
    up.  Otherwise the remainder below the floor is added from the leading
    asymptotic |m| w^(1-alpha) / (1-alpha).
    """
    if m == 0 or alpha == 0:
        return width * float(np.hypot(1.0, m))
    edges = [width]
    while edges[-1] > GRADING_FLOOR * width:
        edges.append(edges[-1] / 2)
    edges = np.array(edges)
    hi, lo = edges[:-1], edges[1:]
    contrib = _positive_pieces(lo, hi, np.full(len(lo), float(m)), alpha)
    partial = np.cumsum(contrib)
    growth = partial[1:] / partial[:-1] - 1.0
    if len(growth) >= 3 and np.all(growth[-3:] > 0.1) and partial[-1] > DIVERGENCE_SUM:
        return np.inf
    ratios = contrib[1:] / contrib[:-1]
    if np.all(ratios[-3:] >= 1.0 - 1e-9):
        return np.inf
    floor = lo[-1]
    tail = abs(m) * floor ** (1.0 - alpha) / (1.0 - alpha)
    return float(partial[-1] + tail)


def segment_lengths(vertices, alpha: float) -> np.ndarray:
    """Grushin length of each straight segment of a vertex chain."""
    alpha = check_alpha(alpha)
    v = np.asarray(vertices, dtype=float)
    p, q = v[:-1], v[1:]
    d = q - p
    if alpha == 0:
        return np.hypot(d[:, 0], d[:, 1])
    out = np.zeros(len(d))

    vertical = d[:, 0] == 0
    if vertical.any():
        x = np.abs(p[vertical, 0])
        dy = np.abs(d[vertical, 1])
        with np.errstate(divide="ignore"):
            out[vertical] = np.where(x == 0, np.inf, dy / x**alpha)

    idx = np.flatnonzero(~vertical)
    if len(idx) == 0:
        return out
    xa, xb = p[idx, 0], q[idx, 0]
    m = d[idx, 1] / d[idx, 0]
    lo, hi = np.minimum(xa, xb), np.maximum(xa, xb)

    # Pieces of each segment on either side of x1 = 0, mirrored to x1 > 0.
    sides = (
        (hi > 0, np.maximum(lo, 0.0), hi),
        (lo < 0, -np.minimum(hi, 0.0), -lo),
    )
    for sel, a_, b_ in sides:
        away = sel & (a_ > 0)
        if away.any():
            vals = _positive_pieces(a_[away], b_[away], np.abs(m[away]), alpha)
            np.add.at(out, idx[away], vals)
        for j in np.flatnonzero(sel & (a_ == 0)):
            out[idx[j]] += graded_to_zero(b_[j], abs(m[j]), alpha)
    return out


def grushin_length(curve: Polyline, alpha: float) -> float:
    """Grushin length of a polyline (+inf if some segment diverges)."""
    return float(np.sum(segment_lengths(curve.vertices, alpha)))


def euclidean_length(curve: Polyline) -> float:
    return curve.euclidean_length()
