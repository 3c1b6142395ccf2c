"""Curve constructions and diagnostics.

Contains the nonrectifiable family gamma_a(t) = (t, -t^alpha/log t + a) and
its flat image, a refinement-based rectifiability probe, the Cantor-type
curve meeting Y in a set of positive s-measure, the monotone permutation
inequality on the snowflake line, and the transport of densities through
the canonical quasisymmetry.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distance import chart_length, snowflake_constant, unit_Y_distance
from .geometry import (
    Polyline,
    beta,
    canonical_phi,
    canonical_phi_inverse,
    chart_to_x1,
    check_alpha,
    snowflake_distance_on_Y,
)
from .grid import DensityGrid
from .quadrature import grushin_length

SMALLEST_PARAM = 2.0**-40


@dataclass(frozen=True)
class ParametricCurve:
    domain: tuple
    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str
    family: str = "custom"
    parameters: dict = field(default_factory=dict)
    # the evaluator returns coordinates relative to this point
    anchor: tuple = (0.0, 0.0)
    # domain excludes its left endpoint (the curve is not defined there)
    open_left: bool = False

    @property
    def open_at_left(self) -> bool:
        return self.open_left

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float)) + np.asarray(self.anchor, dtype=float)

    def local(self, t, drop=(True, True)):
        """Evaluate with (parts of) the anchor left off, avoiding cancellation."""
        shift = np.where(drop, 0.0, np.asarray(self.anchor, dtype=float))
        return self.evaluator(np.asarray(t, dtype=float)) + shift

    def to_record(self) -> dict:
        return {"label": self.label, "family": self.family, "parameters": dict(self.parameters)}

    def check_continuity(self, levels: int = 10, tol: float = 1e-6) -> bool:
        """Sampled continuity check: dyadic refinement shrinks the max jump."""
        lo, hi = self.domain
        lo = max(lo, SMALLEST_PARAM)
        jumps = []
        for k in (levels - 2, levels):
            t = lo + (hi - lo) * np.arange(2**k + 1) / 2**k
            p = self(t)
            jumps.append(np.max(np.hypot(*np.diff(p, axis=0).T)))
        return jumps[1] < max(jumps[0], tol)


def straight_curve(p, q) -> ParametricCurve:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)

    def ev(t):
        t = np.asarray(t)[..., None]
        return (1 - t) * p + t * q

    return ParametricCurve((0.0, 1.0), ev, "segment", "segment", {"from": p.tolist(), "to": q.tolist()})


def section5_grushin_curve(a: float, alpha: float) -> ParametricCurve:
    """gamma_a(t) = (t, -t^alpha / log t + a) on (0, 1/2]."""
    alpha = check_alpha(alpha)
    if alpha <= 0:
        raise ValueError("the family needs alpha > 0")

    def ev(t):
        t = np.asarray(t, dtype=float)
        return np.stack([t, -(t**alpha) / np.log(t)], axis=-1)

    return ParametricCurve((0.0, 0.5), ev, f"gamma_{a:g}", "section5-grushin",
                           {"a": a, "alpha": alpha}, (0.0, float(a)), open_left=True)


def section5_euclidean_curve(a: float, alpha: float) -> ParametricCurve:
    """Flat image phi(gamma_a): (t^(1+alpha)/(1+alpha), -t^alpha / log t + a)."""
    alpha = check_alpha(alpha)
    if alpha <= 0:
        raise ValueError("the family needs alpha > 0")

    def ev(t):
        t = np.asarray(t, dtype=float)
        return np.stack([t ** (1 + alpha) / (1 + alpha), -(t**alpha) / np.log(t)], axis=-1)

    return ParametricCurve((0.0, 0.5), ev, f"tilde_gamma_{a:g}", "section5-euclidean",
                           {"a": a, "alpha": alpha}, (0.0, float(a)), open_left=True)


def curve_from_record(rec: dict) -> ParametricCurve:
    fam, par = rec["family"], rec["parameters"]
    if fam == "section5-grushin":
        return section5_grushin_curve(par["a"], par["alpha"])
    if fam == "section5-euclidean":
        return section5_euclidean_curve(par["a"], par["alpha"])
    if fam == "segment":
        return straight_curve(par["from"], par["to"])
    raise ValueError(f"unknown curve family {fam!r}")


def sample_params(domain, n: int, grading: str = "uniform", t_min: float | None = None,
                  open_left: bool = False) -> np.ndarray:
    """n parameters in ``domain``.

    An open left end is replaced by ``t_min`` (default 2^-40).  Geometric
    grading needs a positive start; on a closed domain starting at 0 it runs
    from ``t_min`` and the endpoint 0 is prepended.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    lo, hi = map(float, domain)
    floor = t_min if t_min is not None else SMALLEST_PARAM
    if open_left:
        lo = max(lo, floor)
    if grading == "uniform":
        return np.linspace(lo, hi, n)
    if grading == "geometric":
        if lo > 0:
            t = lo * (hi / lo) ** (np.arange(n) / (n - 1))
        else:
            t = np.concatenate([[lo], floor * (hi / floor) ** (np.arange(n - 1) / (n - 2 if n > 2 else 1))])
        t[-1] = hi
        return t
    raise ValueError(f"unknown grading {grading!r}")


def sample_curve(c: ParametricCurve, n: int, grading: str = "uniform", t_min: float | None = None) -> Polyline:
    """Polyline through ``c`` at n parameters.

    Geometric grading clusters the parameters at the left end, starting from
    ``t_min`` (default 2^-40) when the domain is open there.
    """
    t = sample_params(c.domain, n, grading, t_min, c.open_left)
    return Polyline(c(t), t)


def polyline_to_csv(curve: Polyline) -> str:
    buf = io.StringIO()
    buf.write("param,x1,x2\n")
    for t, (x, y) in zip(curve.params, curve.vertices):
        buf.write(f"{float(t)!r},{float(x)!r},{float(y)!r}\n")
    return buf.getvalue()


@dataclass
class ProbeVerdict:
    verdict: str  # "convergent" | "divergent" | "inconclusive"
    length: float
    lengths: list
    sizes: list
    t_mins: list


def probe_t_min(k: int) -> float:
    """Left endpoint at refinement level k: 2^-8 at k = 6 down to 2^-40 at k = 16."""
    return 2.0 ** (-8.0 * 5.0 ** ((k - 6) / 10.0))


def rectifiability_probe(c: ParametricCurve, alpha: float, metric: str = "grushin",
                         levels=range(6, 17)) -> ProbeVerdict:
    """Classify a curve as having convergent or divergent length.

    Lengths of polylines with n = 2^k + 1 vertices are computed for each k in
    ``levels``; for curves open at 0 the left endpoint moves toward 0 with k
    and the samples are graded geometrically.  Convergent: relative change
    below 1e-3 over each of the last three refinements.  Divergent: relative
    growth above 2% over each of the last four (or an infinite length).
    """
    if metric not in ("grushin", "euclidean"):
        raise ValueError(f"unknown metric {metric!r}")
    # Grushin lengths are invariant under vertical translation only
    drop = (False, True) if metric == "grushin" else (True, True)
    lengths, sizes, tmins = [], [], []
    for k in levels:
        n = 2**k + 1
        if c.open_at_left:
            tm = probe_t_min(k)
            t = sample_params(c.domain, n, "geometric", t_min=tm, open_left=True)
        else:
            tm = c.domain[0]
            t = sample_params(c.domain, n, "uniform")
        poly = Polyline(c.local(t, drop), t)
        if metric == "grushin":
            L = grushin_length(poly, alpha)
        else:
            L = poly.euclidean_length()
        lengths.append(L)
        sizes.append(n)
        tmins.append(tm)
        if not np.isfinite(L):
            return ProbeVerdict("divergent", np.inf, lengths, sizes, tmins)
    Ls = np.array(lengths)
    rel = np.diff(Ls) / Ls[:-1]
    if len(rel) >= 3 and np.all(np.abs(rel[-3:]) < 1e-3):
        verdict = "convergent"
    elif len(rel) >= 4 and np.all(rel[-4:] > 0.02):
        verdict = "divergent"
    else:
        verdict = "inconclusive"
    return ProbeVerdict(verdict, float(Ls[-1]), lengths, sizes, tmins)


# --- Cantor-type curve ---------------------------------------------------


@dataclass(frozen=True)
class CantorCurveSpec:
    L: float
    depth: int
    alpha: float

    def __post_init__(self):
        if not 0 < self.L < 0.5:
            raise ValueError("L must lie in (0, 1/2)")
        if self.depth < 1:
            raise ValueError("depth must be a positive integer")
        check_alpha(self.alpha)

    @property
    def s(self) -> float:
        """Grushin Hausdorff dimension of the Cantor set."""
        return (1 + self.alpha) * math.log(2) / math.log(1 / self.L)


@dataclass
class CantorCurve:
    spec: CantorCurveSpec
    intervals: list  # per level: array (2^(n-1), 2) of [a, b]
    arcs: list  # Grushin-coordinate Polylines, ordered along Y
    level_lengths: np.ndarray  # measured arc length per level
    predicted_lengths: np.ndarray  # 2^(n-1) (L^(n-1)(1-2L))^(1/(1+alpha)) C
    polyline: Polyline

    @property
    def ratios(self) -> np.ndarray:
        return self.level_lengths[1:] / self.level_lengths[:-1]

    @property
    def partial_sum(self) -> float:
        return float(self.level_lengths.sum())

    @property
    def verdict(self) -> str:
        """Ratio test on the level contributions."""
        r = 2 * self.spec.L ** beta(self.spec.alpha)
        return "convergent" if r < 1 else "divergent"


def cantor_intervals(L: float, depth: int) -> list:
    levels = []
    gaps = np.array([[0.0, 1.0]])
    for n in range(1, depth + 1):
        centre = gaps.mean(axis=1)
        half = 0.5 * L ** (n - 1) * (1 - 2 * L)
        V = np.column_stack([centre - half, centre + half])
        levels.append(V)
        gaps = np.column_stack([np.column_stack([gaps[:, 0], V[:, 0]]),
                                np.column_stack([V[:, 1], gaps[:, 1]])]).reshape(-1, 2)
    return levels


def cantor_curve(spec: CantorCurveSpec) -> CantorCurve:
    """Curve through the Cantor set, built from transported unit geodesics.

    One geodesic from (0,0) to (0,1) is computed; the arc over [a, b] is its
    image under the dilation by (b-a)^(1/(1+alpha)) and a vertical
    translation, which in the flat chart is a uniform scaling by (b - a).
    The returned polyline visits the arcs in order along Y, joining them by
    the still-unresolved pieces of Y.
    """
    if spec.depth > 12:
        raise ValueError("depth overflow: at most 12 levels")
    alpha = spec.alpha
    unit = unit_Y_distance(alpha).chart_vertices
    C = snowflake_constant(alpha)
    intervals = cantor_intervals(spec.L, spec.depth)

    level_lengths = []
    arcs = []
    for V in intervals:
        total = 0.0
        for a, b in V:
            chart = unit * (b - a)
            chart[:, 1] += a
            total += chart_length(chart, alpha)
            arcs.append((a, canonical_phi_inverse(chart, alpha)))
        level_lengths.append(total)
    n = np.arange(1, spec.depth + 1)
    predicted = 2.0 ** (n - 1) * (spec.L ** (n - 1) * (1 - 2 * spec.L)) ** beta(alpha) * C

    arcs.sort(key=lambda item: item[0])
    pieces = [np.array([[0.0, 0.0]])]
    for _, verts in arcs:
        if np.array_equal(pieces[-1][-1], verts[0]):
            verts = verts[1:]
        pieces.append(verts)
    if not np.array_equal(pieces[-1][-1], [0.0, 1.0]):
        pieces.append(np.array([[0.0, 1.0]]))
    verts = np.vstack(pieces)
    return CantorCurve(spec, intervals, [Polyline.from_vertices(v) for _, v in arcs],
                       np.array(level_lengths), predicted, Polyline.from_vertices(verts))


# --- snowflake combinatorics ------------------------------------------------


def _path_sum(points, order, alpha, C):
    y = np.asarray(points, dtype=float)[list(order)]
    return float(np.sum(C * np.abs(np.diff(y)) ** beta(alpha)))


def monotone_permutation_check(points, sigma, alpha: float, C: float) -> bool:
    """Whether the sorted traversal is no longer than the sigma-traversal."""
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    if sorted(sigma) != list(range(len(pts))):
        raise ValueError("sigma must be a permutation of range(len(points))")
    lhs = _path_sum(pts, range(len(pts)), alpha, C)
    rhs = _path_sum(pts, sigma, alpha, C)
    return lhs <= rhs * (1 + 1e-12)


def exhaustive_permutation_check(points, alpha: float, C: float, samples: int = 20000,
                                 seed: int = 0) -> tuple[bool, int]:
    """Check every permutation (n <= 9) or a random sample of them."""
    n = len(points)
    if n <= 9:
        perms = itertools.permutations(range(n))
    else:
        rng = np.random.default_rng(seed)
        perms = (rng.permutation(n).tolist() for _ in range(samples))
    count = 0
    for sigma in perms:
        count += 1
        if not monotone_permutation_check(points, sigma, alpha, C):
            return False, count
    return True, count


def box_counting_dimension_on_Y(alpha: float, b: float = 1.0, k_max: int = 10,
                                C: float | None = None) -> tuple[float, list]:
    """Box-counting dimension of {0} x [0, b] in the Grushin metric.

    Greedy covers by Grushin balls of diameter eps = 2^-k D (D the Grushin
    diameter of the segment), k = 1..k_max; returns log N / log(D / eps) at
    the finest scale together with the (eps, N) pairs.
    """
    C = snowflake_constant(alpha) if C is None else C
    D = snowflake_distance_on_Y(0.0, b, alpha, C)
    counts = []
    for k in range(1, k_max + 1):
        eps = D * 2.0**-k
        # Euclidean extent on Y of a set of Grushin diameter eps; greedy
        # covering of an interval lays these end to end
        reach = (eps / C) ** (1 + alpha)
        counts.append((eps, math.ceil(b / reach * (1 - 1e-12))))
    eps, N = counts[-1]
    return math.log(N) / math.log(D / eps), counts


# --- change of variables ----------------------------------------------------


def density_transport(rho: DensityGrid, alpha: float) -> DensityGrid:
    """Push a Grushin-coordinate density to the flat chart.

    rho_tilde(u, v) = |x1(u)|^-alpha rho(x1(u), v), zero on u = 0, sampled
    at the cell centres of the phi-image grid (piecewise-constant lookup
    in the source grid).
    """
    alpha = check_alpha(alpha)
    x0, x1, y0, y1 = rho.bbox
    xe = rho.x_edges
    meets_Y = (xe[:-1] <= 0) & (xe[1:] >= 0)
    if np.any(rho.values[meets_Y] != 0):
        raise ValueError("density must vanish on cells meeting the singular line")
    u0, u1 = canonical_phi(np.array([[x0, 0.0], [x1, 0.0]]), alpha)[:, 0]
    out = DensityGrid.euclidean((u0, u1, y0, y1), rho.nx, rho.ny)
    uc = out.x_centers
    xc = chart_to_x1(uc, alpha)
    i, _ = rho.cell_of(np.column_stack([xc, np.zeros_like(xc)]))
    with np.errstate(divide="ignore"):
        factor = np.where(xc == 0, 0.0, np.abs(xc) ** (-alpha))
    vals = rho.values[i, :] * factor[:, None]
    return out.like(vals)
