"""Variational Grushin distance.

Curves are transcribed as polylines in the flat chart (u, v) = phi(x1, x2).
There the length element is w(u) |d(u, v)| with w(u) = |x1(u)|^-alpha, and
w has the exact antiderivative x1(u).  A chart segment from (a, .) to
(b, .) therefore has Grushin length

    |segment| * (x1(b) - x1(a)) / (b - a),

finite even when the segment ends on the singular line.  Every value the
solver returns is the exact length of an actual curve, hence an upper bound
for d_alpha.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .geometry import (
    Point,
    Polyline,
    as_points,
    canonical_phi,
    canonical_phi_inverse,
    chart_to_x1,
    check_alpha,
    grushin_speed,
)

log = logging.getLogger(__name__)

_NEAR = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-3
    min_segments: int = 4
    max_segments: int = 128
    maxiter: int = 400


@dataclass(frozen=True)
class DistanceResult:
    value: float
    converged: bool
    chart_vertices: np.ndarray
    history: tuple = ()
    start: str = ""
    alpha: float = 1.0
    endpoints: np.ndarray | None = None

    @property
    def polyline(self) -> Polyline:
        """The minimising curve's vertices in Grushin coordinates.

        The curve itself is straight between vertices in the flat chart, not
        in these coordinates: where it crosses Y a Grushin-straight segment
        would have infinite length for alpha >= 1.
        """
        V = canonical_phi_inverse(self.chart_vertices, self.alpha)
        if self.endpoints is not None:
            # the chart round trip can be off by an ulp; report the inputs verbatim
            V[0], V[-1] = self.endpoints
        return Polyline.from_vertices(V)

    def to_dict(self) -> dict:
        return {
            "distance": self.value,
            "converged": self.converged,
            "start": self.start,
            "refinements": [{"segments": n, "length": v} for n, v in self.history],
            "polyline": (self.polyline.vertices.tolist() if self.value > 0
                         else as_points(self.endpoints[:1]).tolist()),
        }


def _weight(u, alpha):
    e = alpha / (1.0 + alpha)
    with np.errstate(divide="ignore"):
        return (1.0 + alpha) ** (-e) * np.abs(u) ** (-e)


def chart_length(V, alpha: float, grad: bool = False):
    """Grushin length of the chart polyline V (n, 2); optionally the gradient."""
    V = np.asarray(V, dtype=float)
    D = np.diff(V, axis=0)
    norm = np.hypot(D[:, 0], D[:, 1])
    a, b = V[:-1, 0], V[1:, 0]
    d = b - a
    scale = np.maximum(np.abs(a), np.abs(b))
    near = np.abs(d) <= _NEAR * scale
    mid = 0.5 * (a + b)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_far = (chart_to_x1(b, alpha) - chart_to_x1(a, alpha)) / d
        g = np.where(near, _weight(mid, alpha), g_far)
        g = np.where((a == 0) & (b == 0), np.inf, g)
        seg = np.where(norm == 0, 0.0, norm * g)
    total = float(seg.sum())
    if not grad:
        return total

    e = alpha / (1.0 + alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        dw_mid = -e * _weight(mid, alpha) / mid
        dg_db = np.where(near, 0.5 * dw_mid, (_weight(b, alpha) - g) / d)
        dg_da = np.where(near, 0.5 * dw_mid, (g - _weight(a, alpha)) / d)
        unit = D / np.where(norm == 0, 1.0, norm)[:, None]
    G = np.zeros_like(V)
    G[1:] += g[:, None] * unit
    G[:-1] -= g[:, None] * unit
    G[1:, 0] += norm * dg_db
    G[:-1, 0] += norm * dg_da
    G[~np.isfinite(G)] = 0.0
    return total, G


def _bezier(P, Q, ctrl, n):
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return (1 - t) ** 2 * P + 2 * t * (1 - t) * ctrl + t**2 * Q


def _starts(P, Q, n):
    """Initial chart polylines: straight segment and bulges to either side."""
    S = np.hypot(*(Q - P))
    mid = 0.5 * (P + Q)
    out = {}
    if not (P[0] == 0 and Q[0] == 0):
        out["straight"] = _bezier(P, Q, mid, n)
    for amp in (0.3, 0.8):
        for sign, name in ((1, "bulge+"), (-1, "bulge-")):
            ctrl = mid + np.array([sign * amp * S, 0.0])
            out[f"{name}{amp}"] = _bezier(P, Q, ctrl, n)
    return out


def _optimise(V0, alpha, maxiter):
    """Move interior vertices of V0 to reduce the chart length."""
    fixed_p, fixed_q = V0[0], V0[-1]
    scale = np.hypot(*(fixed_q - fixed_p))
    L0 = chart_length(V0, alpha)

    def fun(z):
        V = np.vstack([fixed_p, z.reshape(-1, 2) * scale, fixed_q])
        L, G = chart_length(V, alpha, grad=True)
        return L / L0, (G[1:-1] * scale / L0).ravel()

    z0 = (V0[1:-1] / scale).ravel()
    res = minimize(
        fun, z0, jac=True, method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-13, "gtol": 1e-10},
    )
    V = np.vstack([fixed_p, res.x.reshape(-1, 2) * scale, fixed_q])
    L = chart_length(V, alpha)
    if not np.isfinite(L) or L > L0:
        return V0, L0
    return V, L


def _refine(V):
    """Insert a vertex inside each chart segment; the curve is unchanged."""
    n = len(V) - 1
    # off-centre insertion keeps symmetric problems from parking vertices on u = 0
    frac = 0.5 + 0.01 * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    new = V[:-1] + frac[:, None] * (V[1:] - V[:-1])
    out = np.empty((2 * n + 1, 2))
    out[0::2] = V
    out[1::2] = new
    return out


def grushin_distance(p, q, alpha: float, opts: SolverOptions | None = None) -> DistanceResult:
    """Upper bound for d_alpha(p, q) by polyline transcription.

    Multi-start at the coarsest level, then dyadic vertex refinement until the
    relative improvement drops below ``opts.rtol`` or the segment ceiling is
    reached (result flagged ``converged=False``).  Lengths in ``history`` are
    non-increasing.
    """
    alpha = check_alpha(alpha)
    opts = opts or SolverOptions()
    p = as_points(p)
    q = as_points(q)
    P = canonical_phi(p, alpha)
    Q = canonical_phi(q, alpha)
    if np.array_equal(p, q):
        return DistanceResult(0.0, True, np.vstack([P, Q]), ((0, 0.0),), "identity", alpha, np.vstack([p, q]))

    n = opts.min_segments
    best = None
    for name, V0 in _starts(P, Q, n).items():
        if not np.isfinite(chart_length(V0, alpha)):
            continue
        V, L = _optimise(V0, alpha, opts.maxiter)
        if best is None or L < best[1]:
            best = (V, L, name)
    V, L, start = best
    history = [(n, L)]
    converged = False
    while n < opts.max_segments:
        n *= 2
        V_new, L_new = _optimise(_refine(V), alpha, opts.maxiter)
        improvement = (L - L_new) / L
        V, L = V_new, min(L, L_new)
        history.append((n, L))
        if improvement < opts.rtol:
            converged = True
            break
    if not converged:
        log.warning("distance solver hit %d segments without converging", n)
    return DistanceResult(float(L), converged, V, tuple(history), start, alpha, np.vstack([p, q]))


@functools.lru_cache(maxsize=32)
def unit_Y_distance(alpha: float, rtol: float = 1e-4) -> DistanceResult:
    """Cached solve of C(alpha) = d_alpha((0,0), (0,1))."""
    return grushin_distance((0.0, 0.0), (0.0, 1.0), alpha, SolverOptions(rtol=rtol))


def snowflake_constant(alpha: float) -> float:
    return unit_Y_distance(check_alpha(alpha)).value


@dataclass
class GrushinBallSample:
    center: Point
    radius: float
    boundary_points: np.ndarray
    directions: np.ndarray
    ok: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _ray_guess(c, e, r, alpha):
    speed = grushin_speed(c, e, alpha)
    if np.isfinite(speed) and speed > 0:
        return r / speed
    # vertical ray from a point of Y
    return r ** (1.0 + alpha)


def _solve_ray(f, s0, r, tol, max_evals=40):
    """Find s with f(s) = r for increasing f, by secant steps in log-log space.

    A bracket [lo, hi] is maintained; steps leaving it fall back to geometric
    bisection.  Returns (s, f(s)) or None.
    """
    lo = hi = None
    s, d = s0, f(s0)
    prev = None
    for _ in range(max_evals):
        if abs(d - r) <= tol * r:
            return s, d
        if d < r:
            lo = (s, d)
        else:
            hi = (s, d)
        if prev is not None and prev[1] != d and prev[0] != s:
            k = np.log(d / prev[1]) / np.log(s / prev[0])
        else:
            k = 1.0
        k = k if np.isfinite(k) and k > 0.05 else 1.0
        s_new = s * (r / d) ** (1.0 / k)
        if lo is not None and hi is not None and not lo[0] < s_new < hi[0]:
            s_new = np.sqrt(lo[0] * hi[0])
        elif lo is None:
            s_new = min(s_new, 0.5 * s) if s_new >= s else s_new
        elif hi is None:
            s_new = max(s_new, 2.0 * s) if s_new <= s else s_new
        prev = (s, d)
        s, d = s_new, f(s_new)
        if not np.isfinite(d):
            return None
    return None


def _ray_orbits(center, n):
    """Map each direction index to a representative under the metric's reflections.

    Reflection in the horizontal line through the centre is always an
    isometry; reflection x1 -> -x1 is one when the centre lies on Y.
    Returns {k: (representative, flip_x, flip_y)}.
    """
    out = {}
    for k in range(n):
        if k in out:
            continue
        out[k] = (k, False, False)
        out.setdefault((n - k) % n, (k, False, True))
        if center[0] == 0 and n % 2 == 0:
            out.setdefault((n // 2 - k) % n, (k, True, False))
            out.setdefault((n // 2 + k) % n, (k, True, True))
    return out


def grushin_sphere_sample(center, r: float, n: int, alpha: float,
                          opts: SolverOptions | None = None, tol: float = 1e-4) -> GrushinBallSample:
    """Points at Grushin distance r from ``center`` along n Euclidean rays.

    Directions are 2 pi k / n.  Rays related by a reflection isometry fixing
    the centre are solved once and mirrored.  A ray is flagged ok when its
    point lies within ``tol`` (relative) of the sphere.
    """
    if n < 8:
        raise ValueError("need at least 8 directions")
    if not r > 0:
        raise ValueError("radius must be positive")
    alpha = check_alpha(alpha)
    c = as_points(center)
    theta = 2 * np.pi * np.arange(n) / n
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    dirs[np.abs(dirs) < 1e-15] = 0.0
    pts = np.full((n, 2), np.nan)
    ok = np.zeros(n, dtype=bool)
    dist = np.full(n, np.nan)
    solved = {}

    for k, (rep, fx, fy) in _ray_orbits(c, n).items():
        if rep not in solved:
            e = dirs[rep]

            def f(s, e=e):
                return grushin_distance(c, c + s * e, alpha, opts).value

            try:
                solved[rep] = _solve_ray(f, _ray_guess(c, e, r, alpha), r, tol)
            except (ValueError, RuntimeError):
                solved[rep] = None
            if solved[rep] is None:
                log.warning("sphere sampling failed along direction %d", rep)
        hit = solved[rep]
        if hit is None:
            continue
        s, d = hit
        off = s * dirs[rep]
        off = off * np.array([-1.0 if fx else 1.0, -1.0 if fy else 1.0])
        pts[k] = c + off
        dist[k] = d
        ok[k] = True
    return GrushinBallSample(Point(*c), float(r), pts, dirs, ok, dist)
