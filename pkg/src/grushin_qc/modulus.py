"""Discrete 2-modulus of sampled curve families.

A density is a nonnegative cell function on a DensityGrid; line integrals
use bilinear interpolation between cell centres, so every constraint
"integral of rho along the curve >= 1" is linear in the cell values.  The
quadratic program

    minimise  sum_i w_i rho_i^2   subject to  A rho >= 1

is solved through its dual by Hildreth's method (cyclic projected
coordinate ascent on the multipliers).  Because A >= 0 entrywise the
primal iterate rho = W^-1 A^T lambda is automatically nonnegative.

A sampled curve can stand for a thin bundle of neighbouring curves: its
constraint is then the average of the members' line integrals.  This is how
a finite sample represents a continuum family on a grid finer than the
sample spacing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse

from .curves import SMALLEST_PARAM, sample_params, section5_euclidean_curve, section5_grushin_curve, rectifiability_probe
from .geometry import Polyline, canonical_phi_inverse, check_alpha
from .grid import DensityGrid
from .quadrature import segment_lengths

log = logging.getLogger(__name__)


@dataclass
class CurveFamily:
    curves: list
    label: str = ""
    # constraint groups: each entry lists the curves averaged in one constraint
    groups: list | None = None

    def __post_init__(self):
        if not self.curves:
            raise ValueError("a curve family needs at least one curve")
        if self.groups is None:
            self.groups = [[i] for i in range(len(self.curves))]

    def __len__(self) -> int:
        return len(self.groups)

    def subfamily(self, constraint_ids) -> "CurveFamily":
        groups, curves = [], []
        for g in constraint_ids:
            members = self.groups[g]
            groups.append(list(range(len(curves), len(curves) + len(members))))
            curves.extend(self.curves[i] for i in members)
        return CurveFamily(curves, f"{self.label}[sub]", groups)

    def union(self, other: "CurveFamily") -> "CurveFamily":
        off = len(self.curves)
        groups = [list(g) for g in self.groups] + [[i + off for i in g] for g in other.groups]
        return CurveFamily(self.curves + other.curves, f"{self.label}+{other.label}", groups)

    def hull(self):
        v = np.vstack([c.vertices for c in self.curves])
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()


@dataclass
class ModulusResult:
    value: float
    density: DensityGrid
    residual: float
    iterations: int
    converged: bool
    scale: float = 1.0
    min_integral: float = 1.0
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "grid": self.density.to_dict(),
        }


def _pieces(grid: DensityGrid, curve: Polyline):
    """Split each segment into pieces spanning at most half a cell."""
    v = curve.vertices
    if not np.all(grid.contains(v)):
        raise ValueError(f"curve leaves the grid box {grid.bbox}")
    hx, hy = grid.cell_size
    d = np.diff(v, axis=0)
    n_sub = np.maximum(1, np.ceil(2 * np.maximum(np.abs(d[:, 0]) / hx, np.abs(d[:, 1]) / hy))).astype(int)
    owner = np.repeat(np.arange(len(d)), n_sub)
    k = np.arange(n_sub.sum()) - np.repeat(np.cumsum(n_sub) - n_sub, n_sub)
    f0 = k / n_sub[owner]
    f1 = (k + 1) / n_sub[owner]
    p0 = v[owner] + f0[:, None] * d[owner]
    p1 = v[owner] + f1[:, None] * d[owner]
    p1[np.cumsum(n_sub) - 1] = v[1:]
    return p0, p1


def _piece_lengths(p0, p1, metric, alpha):
    if metric == "euclidean":
        return np.hypot(*(p1 - p0).T)
    if metric == "grushin":
        # each piece is its own segment of the chain p0[i] -> p1[i]
        chain = np.empty((2 * len(p0), 2))
        chain[0::2], chain[1::2] = p0, p1
        return segment_lengths(chain, alpha)[0::2]
    raise ValueError(f"unknown metric {metric!r}")


def constraint_row(grid: DensityGrid, curve: Polyline, metric: str, alpha: float):
    """Coefficients a with  integral of rho along curve = a . rho.ravel()."""
    p0, p1 = _pieces(grid, curve)
    ds = _piece_lengths(p0, p1, metric, alpha)
    mid = 0.5 * (p0 + p1)
    idx, w = grid.bilinear_stencil(mid)
    vals = w * ds[:, None]
    zero = vals == 0  # keeps 0 * inf (pinned pieces on Y) out of the row
    vals[zero] = 0.0
    return np.bincount(idx.ravel(), weights=vals.ravel(), minlength=grid.nx * grid.ny)


def line_integral(rho: DensityGrid, curve: Polyline, metric: str = "euclidean", alpha: float = 0.0) -> float:
    """Integral of rho along the polyline in the chosen metric."""
    p0, p1 = _pieces(rho, curve)
    ds = _piece_lengths(p0, p1, metric, alpha)
    vals = rho.sample(0.5 * (p0 + p1))
    mask = vals != 0
    return float(np.sum(vals[mask] * ds[mask]))


def assemble(family: CurveFamily, grid: DensityGrid, metric: str, alpha: float) -> sparse.csr_matrix:
    live = ~grid.pinned.ravel()
    rows = []
    for g in family.groups:
        acc = np.zeros(grid.nx * grid.ny)
        for i in g:
            acc += constraint_row(grid, family.curves[i], metric, alpha)
        acc /= len(g)
        acc[~live] = 0.0
        rows.append(sparse.csr_matrix(acc))
    return sparse.vstack(rows).tocsr()


def default_grid(family: CurveFamily, metric: str, alpha: float = 0.0, nx: int = 256, ny: int = 256,
                 pad: float = 0.1) -> DensityGrid:
    """Grid over the family hull padded by ``pad`` of its extent on each side."""
    x0, x1, y0, y1 = family.hull()
    px, py = pad * (x1 - x0), pad * (y1 - y0)
    bbox = (x0 - px, x1 + px, y0 - py, y1 + py)
    if metric == "grushin":
        return DensityGrid.grushin(bbox, nx, ny, alpha)
    return DensityGrid.euclidean(bbox, nx, ny)


def hildreth(G: np.ndarray, tol: float = 1e-6, max_sweeps: int = 100_000, damping: float = 1.0):
    """Projected Gauss-Seidel on the dual of  min |x|^2_W  s.t.  A x >= 1.

    G = A W^-1 A^T.  Returns (lambda, kkt_residual, sweeps, converged).
    """
    m = len(G)
    lam = np.zeros(m)
    s = np.zeros(m)  # s = G lambda = A rho
    diag = np.diag(G).copy()
    if np.any(diag <= 0):
        raise ValueError("a constraint has no admissible support (zero-length curve)")
    resid = np.inf
    for sweep in range(1, max_sweeps + 1):
        for c in range(m):
            new = max(0.0, lam[c] + damping * (1.0 - s[c]) / diag[c])
            delta = new - lam[c]
            if delta != 0.0:
                lam[c] = new
                s += delta * G[:, c]
        viol = np.maximum(0.0, 1.0 - s)
        slack = np.where(lam > 0, np.abs(1.0 - s), 0.0)
        resid = float(max(viol.max(), slack.max()))
        if resid < tol:
            return lam, resid, sweep, True
    return lam, resid, max_sweeps, False


def solve_modulus(family: CurveFamily, grid: DensityGrid | None = None, metric: str = "euclidean",
                  alpha: float = 0.0, tol: float = 1e-6, max_sweeps: int = 100_000) -> ModulusResult:
    """Discrete 2-modulus of ``family`` with a certified-admissible density.

    After the dual iteration the density is rescaled so that its smallest
    constraint integral is exactly 1; the reported value is its energy.
    """
    if grid is None:
        grid = default_grid(family, metric, alpha)
    A = assemble(family, grid, metric, alpha)
    live = ~grid.pinned.ravel()
    Dinv = np.zeros(grid.nx * grid.ny)
    Dinv[live] = 1.0 / grid.weights.ravel()[live]
    AD = A.multiply(Dinv[None, :]).tocsr()
    G = (AD @ A.T).toarray()
    lam, resid, sweeps, ok = hildreth(G, tol, max_sweeps)
    if not ok:
        log.warning("modulus solver stopped at the sweep cap (residual %.3g)", resid)
    rho = np.asarray(AD.T @ lam).ravel()
    integrals = A @ rho
    s_min = float(integrals.min())
    scale = 1.0 / s_min
    rho *= scale
    density = grid.like(rho.reshape(grid.nx, grid.ny))
    return ModulusResult(density.energy(), density, resid, sweeps, ok, scale, s_min, lam)


# --- families ------------------------------------------------------------


def _ray_radii(r_in, r_out, n_pts):
    return np.linspace(r_in, r_out, n_pts)


def _pullback_ray(center, theta, r_in, r_out, alpha, n_pts):
    """phi^-1 image of a chart ray, refined geometrically where it meets u = 0."""
    cx, cy = center
    c, s = math.cos(theta), math.sin(theta)
    r = _ray_radii(r_in, r_out, n_pts)
    if c != 0:
        r_star = -cx / c
        if r_in < r_star < r_out:
            k = np.arange(1, 41)
            extra = np.concatenate([r_star - (r_star - r_in) * 2.0**-k, r_star + (r_out - r_star) * 2.0**-k])
            r = np.unique(np.concatenate([r, extra]))
    pts = np.column_stack([cx + r * c, cy + r * s])
    return canonical_phi_inverse(pts, alpha), r


def ring_family(center=(0.0, 0.0), r_in: float = 1.0, r_out: float = 2.0, n: int = 64,
                coords: str = "euclidean", alpha: float = 1.0, rays_per_curve: int = 16,
                n_pts: int = 65) -> CurveFamily:
    """Radial segments of the annulus r_in < |z - center| < r_out.

    Each of the n curves is a bundle of ``rays_per_curve`` rays filling an
    angular sector of width 2 pi / n (its constraint is their average).
    Sector offsets keep every ray off the vertical direction, so in
    ``grushin-pullback`` mode (rays mapped through phi^-1) no curve runs
    along the singular line.
    """
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    if n < 4:
        raise ValueError("need at least 4 curves")
    if coords not in ("euclidean", "grushin-pullback"):
        raise ValueError(f"unknown coordinates {coords!r}")
    curves, groups = [], []
    m = rays_per_curve
    for k in range(n):
        members = []
        for j in range(m):
            theta = 2 * np.pi * (k + (j + 0.5) / m) / n
            if coords == "euclidean":
                r = _ray_radii(r_in, r_out, 2)
                v = np.column_stack([center[0] + r * math.cos(theta), center[1] + r * math.sin(theta)])
            else:
                v, r = _pullback_ray(center, theta, r_in, r_out, alpha, n_pts)
            members.append(len(curves))
            curves.append(Polyline(v, r))
        groups.append(members)
    return CurveFamily(curves, f"ring({r_in:g},{r_out:g})/{coords}", groups)


def radial_segments(center, r_in, r_out, n, coords="euclidean", alpha=1.0) -> CurveFamily:
    """Plain (unbundled) radial family: one ray per curve."""
    return ring_family(center, r_in, r_out, n, coords, alpha, rays_per_curve=1)


def annulus_modulus(ratio: float) -> float:
    """Classical 2-modulus 2 pi / log(ratio) of the round annulus."""
    return 2 * np.pi / np.log(ratio)


# --- the nonrectifiable family ------------------------------------------------


def section5_integrand(t, alpha: float):
    t = np.asarray(t, dtype=float)
    L = np.log(t)
    inner = t ** (alpha - 1) / L**2 - alpha * t ** (alpha - 1) / L
    return t**alpha + t ** (-alpha) * inner**2


def _section5_tail(t0: float, alpha: float) -> float:
    """Integral of the integrand over (0, t0], via t = e^-s."""
    S = -math.log(t0)
    if alpha == 1:
        core = 1 / S + 1 / S**2 + 1 / (3 * S**3)
    else:
        core, _ = integrate.quad(lambda s: math.exp(-(alpha - 1) * s) * (1 / s**2 + alpha / s) ** 2,
                                 S, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    return core + t0 ** (alpha + 1) / (alpha + 1)


def section5_integral(alpha: float, floor_exp: int = 40, panels_per_octave: int = 1) -> float:
    """I = integral over (0, 1/2] of the section-5 integrand.

    Gauss-Kronrod (QUADPACK) panels graded geometrically toward 0 down to
    2^-floor_exp, plus the remainder below the floor.
    """
    alpha = check_alpha(alpha)
    if alpha < 1:
        raise ValueError("the integral diverges for alpha < 1")
    edges = 0.5 * 2.0 ** (-np.arange(0, (floor_exp - 1) * panels_per_octave + 1) / panels_per_octave)
    total = 0.0
    for hi, lo in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(section5_integrand, lo, hi, args=(alpha,), epsabs=0, epsrel=1e-13, limit=200)
        total += val
    return total + _section5_tail(edges[-1], alpha)


def section5_family(alpha: float, n_curves: int = 33, sub_curves: int = 16, n_pts: int = 400) -> CurveFamily:
    """Bundled sample of the flat family tilde-gamma_a, a in [0, 1]."""
    curves, groups = [], []
    centres = np.linspace(0.0, 1.0, n_curves)
    half = 0.5 / (n_curves - 1)
    t = sample_params((0.0, 0.5), n_pts, "geometric", t_min=SMALLEST_PARAM, open_left=True)
    for a0 in centres:
        members = []
        for a in np.linspace(max(0.0, a0 - half), min(1.0, a0 + half), sub_curves):
            members.append(len(curves))
            curves.append(Polyline(section5_euclidean_curve(a, alpha)(t), t))
        groups.append(members)
    return CurveFamily(curves, f"section5(alpha={alpha:g})", groups)


@dataclass
class Section5Bound:
    alpha: float
    upper_integral: float
    upper_integral_check: float
    modulus_lower_bound: float
    family_modulus_estimate: float | None
    modulus_result: ModulusResult | None = None

    @property
    def integral_agreement(self) -> float:
        return abs(self.upper_integral - self.upper_integral_check) / self.upper_integral

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "upper_integral": self.upper_integral,
            "upper_integral_check": self.upper_integral_check,
            "modulus_lower_bound": self.modulus_lower_bound,
            "family_modulus_estimate": self.family_modulus_estimate,
        }


def section5_modulus_bound(alpha: float, n_curves: int = 33, nx: int = 512, ny: int = 512,
                           solve: bool = True, sub_curves: int = 16) -> Section5Bound:
    """Lower bound 1/I for the modulus of the flat family and a discrete estimate."""
    alpha = check_alpha(alpha)
    if alpha < 1:
        raise ValueError("positive modulus of the nonrectifiable family needs alpha >= 1")
    I = section5_integral(alpha, floor_exp=40, panels_per_octave=1)
    I_check = section5_integral(alpha, floor_exp=70, panels_per_octave=2)
    estimate, res = None, None
    if solve:
        fam = section5_family(alpha, n_curves, sub_curves)
        res = solve_modulus(fam, default_grid(fam, "euclidean", nx=nx, ny=ny), "euclidean")
        estimate = res.value
    return Section5Bound(alpha, I, I_check, 1.0 / I, estimate, res)


def section5_divergence_companion(alpha: float, a_values=(0.0, 0.5, 1.0)) -> dict:
    """Grushin lengths of gamma_a diverge while their flat images converge."""
    out = {}
    for a in a_values:
        g = rectifiability_probe(section5_grushin_curve(a, alpha), alpha, "grushin")
        e = rectifiability_probe(section5_euclidean_curve(a, alpha), alpha, "euclidean")
        out[a] = (g, e)
    return out
