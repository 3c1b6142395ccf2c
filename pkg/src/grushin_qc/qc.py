"""Symbolic planar maps and distortion estimators.

Maps are described by ``MapSpec`` values: the canonical quasisymmetry and
its inverse, the conformal family (x, y) -> (s lam x, s lam^(1+alpha) y + a)
with a common sign s, Euclidean affine maps, and compositions (applied
right to left).  Estimators measure metric dilatation on sampled spheres,
empirical quasisymmetry envelopes, and the pointwise Beltrami quotient of
phi o f.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .distance import SolverOptions, grushin_distance, grushin_sphere_sample
from .geometry import as_points, canonical_phi, canonical_phi_inverse, check_alpha

KINDS = ("identity", "canonical-phi", "canonical-phi-inverse", "grushin-conformal",
         "euclidean-affine", "composition")


@dataclass(frozen=True)
class MapSpec:
    kind: str
    alpha: float = 1.0
    lam: float = 1.0
    a: float = 0.0
    signs: str = "++"
    matrix: tuple = ((1.0, 0.0), (0.0, 1.0))
    shift: tuple = (0.0, 0.0)
    parts: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        check_alpha(self.alpha)
        if self.kind == "grushin-conformal":
            if self.signs not in ("++", "--"):
                raise ValueError("conformal family signs must be '++' or '--'")
            if not self.lam > 0:
                raise ValueError("lambda must be positive")
        if self.kind == "composition" and not self.parts:
            raise ValueError("empty composition")
        if self.kind == "euclidean-affine" and abs(np.linalg.det(np.asarray(self.matrix))) == 0:
            raise ValueError("singular affine matrix")

    def __matmul__(self, other: "MapSpec") -> "MapSpec":
        """f @ g is the composition f o g."""
        return compose(self, other)

    def __str__(self) -> str:
        return format_map(self)


def identity(alpha: float = 1.0) -> MapSpec:
    return MapSpec("identity", alpha)


def phi(alpha: float = 1.0) -> MapSpec:
    return MapSpec("canonical-phi", alpha)


def phi_inv(alpha: float = 1.0) -> MapSpec:
    return MapSpec("canonical-phi-inverse", alpha)


def gconf(lam: float = 1.0, a: float = 0.0, signs: str = "++", alpha: float = 1.0) -> MapSpec:
    return MapSpec("grushin-conformal", alpha, lam=float(lam), a=float(a), signs=signs)


def affine(matrix, shift=(0.0, 0.0), alpha: float = 1.0) -> MapSpec:
    m = tuple(tuple(float(x) for x in row) for row in np.asarray(matrix, dtype=float))
    return MapSpec("euclidean-affine", alpha, matrix=m, shift=tuple(float(s) for s in shift))


def compose(*maps: MapSpec) -> MapSpec:
    """compose(f, g, h) = f o g o h; nested compositions are flattened."""
    flat = []
    for m in maps:
        flat.extend(m.parts if m.kind == "composition" else (m,))
    return MapSpec("composition", flat[0].alpha, parts=tuple(flat))


def eval_map(m: MapSpec, p) -> np.ndarray:
    """Apply ``m`` to a point or an (n, 2) array of points."""
    p = as_points(p)
    k = m.kind
    if k == "identity":
        return p.copy()
    if k == "canonical-phi":
        return canonical_phi(p, m.alpha)
    if k == "canonical-phi-inverse":
        return canonical_phi_inverse(p, m.alpha)
    if k == "grushin-conformal":
        s = 1.0 if m.signs == "++" else -1.0
        out = np.empty_like(p)
        out[..., 0] = s * m.lam * p[..., 0]
        out[..., 1] = s * m.lam ** (1 + m.alpha) * p[..., 1] + m.a
        return out
    if k == "euclidean-affine":
        return p @ np.asarray(m.matrix).T + np.asarray(m.shift)
    out = p
    for part in reversed(m.parts):
        out = eval_map(part, out)
    return out


def simplify(m: MapSpec) -> MapSpec:
    """Collapse runs of conformal-family maps (the family is closed under composition)."""
    if m.kind != "composition":
        return m
    out = []
    for part in m.parts:
        part = simplify(part)
        if part.kind == "identity":
            continue
        if out and out[-1].kind == "grushin-conformal" and part.kind == "grushin-conformal":
            f, g = out.pop(), part
            sf = 1.0 if f.signs == "++" else -1.0
            sg = 1.0 if g.signs == "++" else -1.0
            out.append(gconf(
                f.lam * g.lam,
                sf * f.lam ** (1 + f.alpha) * g.a + f.a,
                "++" if sf * sg > 0 else "--",
                f.alpha,
            ))
        elif out and {out[-1].kind, part.kind} == {"canonical-phi", "canonical-phi-inverse"}:
            out.pop()
        else:
            out.append(part)
    if not out:
        return identity(m.alpha)
    if len(out) == 1:
        return out[0]
    return MapSpec("composition", m.alpha, parts=tuple(out))


# --- compact text form -------------------------------------------------------

_TOKEN = re.compile(r"^\s*(?P<name>[a-z_]+)\s*(?:\((?P<args>[^)]*)\))?\s*$")


def _kwargs(args: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in args.split(","))):
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = v
    return out


def _floats(text: str, n: int) -> tuple:
    vals = tuple(float(x) for x in text.split(";"))
    if len(vals) != n:
        raise ValueError(f"expected {n} numbers separated by ';', got {text!r}")
    return vals


def parse_map(text: str, alpha: float = 1.0) -> MapSpec:
    """Parse e.g. ``"phi . gconf(l=2,a=0,s=++) . phi_inv"``.

    Factors: id, phi, phi_inv, gconf(l=,a=,s=), affine(m=a;b;c;d, b=tx;ty).
    """
    maps = []
    for tok in text.split(" . ") if " . " in text else [text]:
        mt = _TOKEN.match(tok)
        if not mt:
            raise ValueError(f"cannot parse map factor {tok!r}")
        name, kw = mt["name"], _kwargs(mt["args"] or "")
        if name == "id":
            maps.append(identity(alpha))
        elif name == "phi":
            maps.append(phi(alpha))
        elif name == "phi_inv":
            maps.append(phi_inv(alpha))
        elif name == "gconf":
            maps.append(gconf(float(kw.get("l", 1)), float(kw.get("a", 0)), kw.get("s", "++"), alpha))
        elif name == "affine":
            a, b, c, d = _floats(kw.get("m", "1;0;0;1"), 4)
            maps.append(affine(((a, b), (c, d)), _floats(kw.get("b", "0;0"), 2), alpha))
        else:
            raise ValueError(f"unknown map factor {name!r}")
    return maps[0] if len(maps) == 1 else compose(*maps)


def format_map(m: MapSpec) -> str:
    k = m.kind
    if k == "identity":
        return "id"
    if k == "canonical-phi":
        return "phi"
    if k == "canonical-phi-inverse":
        return "phi_inv"
    if k == "grushin-conformal":
        return f"gconf(l={m.lam!r},a={m.a!r},s={m.signs})"
    if k == "euclidean-affine":
        (a, b), (c, d) = m.matrix
        return f"affine(m={a!r};{b!r};{c!r};{d!r},b={m.shift[0]!r};{m.shift[1]!r})"
    return " . ".join(format_map(p) for p in m.parts)


# --- metric dilatation ---------------------------------------------------------


def _distance(metric, alpha, p, q, opts):
    if metric == "euclidean":
        return float(np.hypot(*(np.asarray(q) - np.asarray(p))))
    if metric == "grushin":
        return grushin_distance(p, q, alpha, opts).value
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class DilatationEstimate:
    point: tuple
    radius: float
    ratio: float
    n_ok: int
    n_dirs: int

    @property
    def reliable(self) -> bool:
        return self.n_ok == self.n_dirs and math.isfinite(self.ratio)

    def to_dict(self) -> dict:
        return {"point": list(self.point), "radius": self.radius, "ratio": self.ratio,
                "n_ok": self.n_ok, "n_dirs": self.n_dirs}


def metric_dilatation(m: MapSpec, p, radii, n_dirs: int = 16, source: str = "grushin",
                      target: str = "grushin", alpha: float | None = None,
                      opts: SolverOptions | None = None) -> list:
    """Max over min of image distances |f(p) f(q)| for q on source spheres about p."""
    alpha = m.alpha if alpha is None else check_alpha(alpha)
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    if n_dirs < 16:
        raise ValueError("need at least 16 directions")
    p = as_points(p)
    fp = eval_map(m, p)
    out = []
    for r in radii:
        if source == "grushin":
            sample = grushin_sphere_sample(p, r, n_dirs, alpha, opts)
            pts, ok = sample.boundary_points, sample.ok
        elif source == "euclidean":
            th = 2 * np.pi * np.arange(n_dirs) / n_dirs
            pts = p + r * np.column_stack([np.cos(th), np.sin(th)])
            ok = np.ones(n_dirs, dtype=bool)
        else:
            raise ValueError(f"unknown metric {source!r}")
        images = eval_map(m, pts[ok])
        d = np.array([_distance(target, alpha, fp, q, opts) for q in images])
        ratio = float(d.max() / d.min()) if len(d) and d.min() > 0 else math.inf
        out.append(DilatationEstimate(tuple(map(float, p)), r, ratio, int(ok.sum()), n_dirs))
    return out


def limsup_proxy(estimates) -> DilatationEstimate | None:
    """Estimate at the smallest radius whose sphere sample is complete."""
    good = [e for e in estimates if e.reliable]
    return min(good, key=lambda e: e.radius) if good else None


# --- quasisymmetry -------------------------------------------------------------


@dataclass
class EtaProfile:
    samples: np.ndarray  # (n, 2) columns t, distortion ratio
    bins: np.ndarray  # (k + 1,) edges
    envelope: np.ndarray  # (k,) max ratio per bin, nan when empty
    counts: np.ndarray
    triples: int
    seed: int

    def to_csv(self) -> str:
        lines = ["t_lo,t_hi,envelope,count"]
        for lo, hi, e, c in zip(self.bins[:-1], self.bins[1:], self.envelope, self.counts):
            lines.append(f"{float(lo)!r},{float(hi)!r},{float(e)!r},{int(c)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, rec: dict) -> "EtaProfile":
        env = np.array([np.nan if e is None else e for e in rec["envelope"]], dtype=float)
        return cls(np.zeros((0, 2)), np.array(rec["bins"], dtype=float), env,
                   np.array(rec["counts"], dtype=int), rec["triples"], rec["seed"])

    def to_dict(self) -> dict:
        return {
            "triples": self.triples,
            "seed": self.seed,
            "bins": self.bins.tolist(),
            "envelope": [None if not np.isfinite(e) else float(e) for e in self.envelope],
            "counts": self.counts.tolist(),
        }


def quasisymmetry_profile(m: MapSpec, triples: int = 1000, t_bins=None, source: str = "grushin",
                          target: str = "euclidean", alpha: float | None = None,
                          box=(-1.0, 1.0, -1.0, 1.0), seed: int = 0,
                          opts: SolverOptions | None = None) -> EtaProfile:
    """Empirical lower envelope of the quasisymmetry control function.

    Triples (x, y, z) are drawn uniformly in ``box``; samples with x = y or
    x = z are redrawn.  Each sample records t = d(x, y) / d(x, z) and the
    image ratio d'(fx, fy) / d'(fx, fz); the envelope is the per-bin max.
    """
    if triples < 1000:
        raise ValueError("need at least 1000 triples")
    alpha = m.alpha if alpha is None else check_alpha(alpha)
    bins = np.geomspace(1 / 8, 8, 13) if t_bins is None else np.asarray(t_bins, dtype=float)
    x0, x1, y0, y1 = box
    if not (np.isfinite([x0, x1, y0, y1]).all() and x1 > x0 and y1 > y0):
        raise ValueError("sampling box must be bounded and nondegenerate")
    rng = np.random.default_rng(seed)
    lo, hi = np.array([x0, y0]), np.array([x1, y1])
    samples = np.empty((triples, 2))
    for i in range(triples):
        while True:
            x, y, z = lo + (hi - lo) * rng.random((3, 2))
            if not (np.array_equal(x, y) or np.array_equal(x, z)):
                break
        fx, fy, fz = eval_map(m, np.array([x, y, z]))
        t = _distance(source, alpha, x, y, opts) / _distance(source, alpha, x, z, opts)
        ratio = _distance(target, alpha, fx, fy, opts) / _distance(target, alpha, fx, fz, opts)
        samples[i] = t, ratio
    which = np.digitize(samples[:, 0], bins) - 1
    k = len(bins) - 1
    envelope = np.full(k, np.nan)
    counts = np.zeros(k, dtype=int)
    for b in range(k):
        sel = which == b
        counts[b] = sel.sum()
        if counts[b]:
            envelope[b] = samples[sel, 1].max()
    return EtaProfile(samples, bins, envelope, counts, triples, seed)


# --- Beltrami quotient ----------------------------------------------------------


@dataclass
class BeltramiValue:
    mu: complex
    degenerate: bool
    h: float

    @property
    def magnitude(self) -> float:
        return abs(self.mu)


def beltrami_coefficient(f: MapSpec, p, h: float | None = None, alpha: float | None = None,
                         degenerate_tol: float = 1e-12) -> BeltramiValue:
    """Pointwise Beltrami quotient of g = phi o f at p off Y.

    With D+- = d/dx1 +- i |x1|^alpha d/dx2 acting on g = g1 + i g2, the
    quotient is mu = D+ g / D- g (it vanishes for g = phi itself).  Central
    differences with step h = max(1e-5, 1e-3 |x1|) by default.
    """
    alpha = f.alpha if alpha is None else check_alpha(alpha)
    x1, x2 = map(float, as_points(p))
    if h is None:
        h = max(1e-5, 1e-3 * abs(x1))
    if not abs(x1) > 2 * h:
        raise ValueError("point too close to the singular line for the stencil")
    g = compose(phi(alpha), f)

    def G(q):
        v = eval_map(g, q)
        return complex(v[0], v[1])

    gx = (G((x1 + h, x2)) - G((x1 - h, x2))) / (2 * h)
    gy = (G((x1, x2 + h)) - G((x1, x2 - h))) / (2 * h)
    w = abs(x1) ** alpha
    d_plus = gx + 1j * w * gy
    d_minus = gx - 1j * w * gy
    scale = abs(gx) + w * abs(gy)
    if abs(d_minus) <= degenerate_tol * max(scale, 1e-300):
        return BeltramiValue(complex("nan"), True, h)
    return BeltramiValue(d_plus / d_minus, False, h)


# --- quantitative data -----------------------------------------------------------


@dataclass(frozen=True)
class DataConversions:
    K: float
    C: float
    mu_norm: float

    def eta0(self, t):
        t = np.asarray(t, dtype=float)
        return self.C * np.maximum(t**self.K, t ** (1.0 / self.K))

    @property
    def eta0_description(self) -> str:
        return f"t -> {self.C!r} * max(t^{self.K!r}, t^(1/{self.K!r}))"

    def to_dict(self) -> dict:
        return {"K": self.K, "C": self.C, "mu_norm": self.mu_norm, "eta0": self.eta0_description}


def data_conversions(K: float) -> DataConversions:
    """Euclidean quasisymmetry control and Beltrami bound from a modulus constant K."""
    K = float(K)
    if not (math.isfinite(K) and K >= 1):
        raise ValueError("K must be a finite real >= 1")
    C = 4 ** (K - 1) * math.exp(6 * (K + 1) ** 2 * math.sqrt(K - 1))
    return DataConversions(K, C, (K - 1) / (K + 1))


# --- reports ----------------------------------------------------------------------


@dataclass
class DistortionReport:
    map_text: str
    H_estimates: list = field(default_factory=list)
    eta_samples: list = field(default_factory=list)
    K_geometric: float | None = None
    beltrami_sup: float | None = None

    def to_dict(self) -> dict:
        return {
            "map": self.map_text,
            "H_estimates": [e.to_dict() for e in self.H_estimates],
            "eta_samples": [list(map(float, s)) for s in self.eta_samples],
            "K_geometric": self.K_geometric,
            "beltrami_sup": self.beltrami_sup,
        }
