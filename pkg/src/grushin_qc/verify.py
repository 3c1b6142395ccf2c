"""Named verification suites with per-check values, targets and verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import curves, modulus, qc
from .distance import SolverOptions, grushin_distance, snowflake_constant
from .geometry import Polyline, beta, canonical_phi, check_alpha, dilate, grushin_area
from .grid import DensityGrid


@dataclass
class Check:
    name: str
    value: float | str | bool
    target: str
    tolerance: float | None
    passed: bool

    def to_dict(self) -> dict:
        v = self.value
        if isinstance(v, (float, np.floating)):
            v = float(v) if math.isfinite(v) else str(v)
        elif isinstance(v, (np.bool_,)):
            v = bool(v)
        return {"name": self.name, "value": v, "target": self.target,
                "tolerance": self.tolerance, "passed": bool(self.passed)}


@dataclass
class SuiteReport:
    suite: str
    alpha: float
    checks: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, value, target, tolerance, passed) -> Check:
        c = Check(name, value, target, tolerance, bool(passed))
        self.checks.append(c)
        return c

    def within(self, name, value, ref, rel_tol) -> Check:
        err = abs(value - ref) / abs(ref)
        return self.add(name, value, f"{ref!r} +- {rel_tol:g} rel", rel_tol, err <= rel_tol)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "suite": self.suite,
            "alpha": self.alpha,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


@dataclass
class SuiteConfig:
    alpha: float = 1.0
    seed: int = 0
    grid: tuple | None = None
    tol: float = 1e-3

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(rtol=self.tol)


# --- geometry ----------------------------------------------------------------


def suite_dilation(cfg: SuiteConfig, pairs: int = 100) -> SuiteReport:
    """d(delta_lam p, delta_lam q) = lam d(p, q) on random pairs in [-3, 3]^2."""
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("dilation", a)
    rng = np.random.default_rng(cfg.seed)
    opts = cfg.solver
    worst = {0.5: 0.0, 2.0: 0.0}
    for _ in range(pairs):
        p, q = rng.uniform(-3, 3, (2, 2))
        d = grushin_distance(p, q, a, opts).value
        for lam in worst:
            dl = grushin_distance(dilate(p, lam, a), dilate(q, lam, a), a, opts).value
            worst[lam] = max(worst[lam], abs(dl - lam * d) / (lam * d))
    for lam, err in worst.items():
        rep.add(f"max relative scaling error, lambda={lam:g}", err, "<= 0.02", 0.02, err <= 0.02)
    d1 = grushin_distance((1, 0), (0, 1), a, opts).value
    d2 = grushin_distance(dilate((1, 0), 2, a), dilate((0, 1), 2, a), a, opts).value
    rep.within("d(2-dilates of (1,0),(0,1)) / 2", d2 / 2, d1, 2 * cfg.tol)
    return rep


def suite_snowflake(cfg: SuiteConfig) -> SuiteReport:
    """Distances along Y follow C |b|^(1/(1+alpha)); box-counting gives 1+alpha."""
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("snowflake", a)
    C = snowflake_constant(a)
    rep.add("C = d((0,0),(0,1))", C, "> 0", None, C > 0)
    for b in (0.25, 0.5, 2.0, 4.0):
        d = grushin_distance((0, 0), (0, b), a, cfg.solver).value
        ratio = d / (C * b ** beta(a))
        rep.add(f"d/(C b^beta), b={b:g}", ratio, "in [0.99, 1.01]", 0.01, 0.99 <= ratio <= 1.01)
    dim, _ = curves.box_counting_dimension_on_Y(a, C=C)
    rep.add("box-counting dimension of a Y segment", dim, f"{1 + a!r} +- 0.05", 0.05, abs(dim - (1 + a)) <= 0.05)
    return rep


# --- modulus ------------------------------------------------------------------


def suite_phi_conformal(cfg: SuiteConfig, ratios=(2.0, 4.0)) -> SuiteReport:
    """Round-annulus modulus against its pullback by phi^-1 with Grushin weights."""
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("phi-conformal", a)
    nx, ny = cfg.grid or (256, 256)
    for r in ratios:
        exact = modulus.annulus_modulus(r)
        fam_e = modulus.ring_family((0.0, 0.0), 1.0, r, 64, "euclidean")
        res_e = modulus.solve_modulus(fam_e, modulus.default_grid(fam_e, "euclidean", nx=nx, ny=ny), "euclidean")
        fam_g = modulus.ring_family((0.0, 0.0), 1.0, r, 64, "grushin-pullback", a)
        res_g = modulus.solve_modulus(fam_g, modulus.default_grid(fam_g, "grushin", a, nx, ny), "grushin", a)
        rep.within(f"Euclidean annulus modulus, ratio {r:g}", res_e.value, exact, 0.05)
        rep.within(f"Grushin pullback modulus vs Euclidean, ratio {r:g}", res_g.value, res_e.value, 0.07)
        rep.add(f"solver converged, ratio {r:g}", res_e.converged and res_g.converged, "true", None,
                res_e.converged and res_g.converged)
        if "density" not in rep.artifacts:
            rep.artifacts["density"] = res_e.density
            rep.artifacts["modulus"] = res_e.to_dict()
    return rep


def suite_section5(cfg: SuiteConfig) -> SuiteReport:
    """Positive modulus of the nonrectifiable family and its divergence companion."""
    a = check_alpha(cfg.alpha)
    if a < 1:
        raise ValueError("the nonrectifiable family argument needs alpha >= 1")
    rep = SuiteReport("section5", a)
    nx, ny = cfg.grid or (512, 512)
    b = modulus.section5_modulus_bound(a, nx=nx, ny=ny)
    rep.add("upper integral I, two grids", b.integral_agreement, "relative difference <= 1e-4", 1e-4,
            b.integral_agreement <= 1e-4)
    rep.add("modulus lower bound 1/I", b.modulus_lower_bound, "> 0", None, b.modulus_lower_bound > 0)
    need = 0.9 * b.modulus_lower_bound
    rep.add("discrete modulus of the 33-curve sample", b.family_modulus_estimate, f">= {need!r}", 0.1,
            b.family_modulus_estimate >= need)
    for aa in (0.0, 0.5, 1.0):
        g = curves.rectifiability_probe(curves.section5_grushin_curve(aa, a), a, "grushin")
        e = curves.rectifiability_probe(curves.section5_euclidean_curve(aa, a), a, "euclidean")
        rep.add(f"Grushin probe of gamma_a, a={aa:g}", g.verdict, "divergent", None, g.verdict == "divergent")
        rep.add(f"Euclidean probe of flat image, a={aa:g}", e.verdict, "convergent", None, e.verdict == "convergent")
    rep.artifacts["curve"] = {"record": curves.section5_euclidean_curve(0.0, a).to_record(),
                              "n": 257, "grading": "geometric", "t_min": curves.SMALLEST_PARAM}
    rep.artifacts["bound"] = b.to_dict()
    return rep


# --- curves --------------------------------------------------------------------


def suite_cantor(cfg: SuiteConfig, depth: int = 10) -> SuiteReport:
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("cantor", a)
    conv = curves.cantor_curve(curves.CantorCurveSpec(0.2, depth, a))
    expected = 2 * 0.2 ** beta(a)
    # ratios[n - 2] compares level n with level n - 1
    worst = max(abs(conv.ratios[n - 2] - expected) / expected for n in range(3, depth + 1))
    rep.add("level ratio vs 2 L^beta, L=0.2, levels 3-10", worst, f"{expected!r} +- 1%", 0.01, worst <= 0.01)
    rep.add("verdict, L=0.2", conv.verdict, "convergent" if expected < 1 else "divergent", None,
            conv.verdict == ("convergent" if expected < 1 else "divergent"))
    div = curves.cantor_curve(curves.CantorCurveSpec(0.3, depth, a))
    expected3 = 2 * 0.3 ** beta(a)
    rep.add("verdict, L=0.3", div.verdict, "convergent" if expected3 < 1 else "divergent", None,
            div.verdict == ("convergent" if expected3 < 1 else "divergent"))
    s = curves.CantorCurveSpec(0.2, depth, a).s
    s_ref = (1 + a) * math.log(2) / math.log(5)
    rep.within("dimension parameter s, L=0.2", s, s_ref, 1e-12)
    return rep


def suite_lemma31(cfg: SuiteConfig, tuples: int = 7, size: int = 6) -> SuiteReport:
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("lemma31", a)
    C = snowflake_constant(a)
    rng = np.random.default_rng(cfg.seed)
    total, ok_all = 0, True
    for _ in range(tuples):
        pts = np.sort(rng.uniform(-5, 5, size))
        ok, count = curves.exhaustive_permutation_check(pts, a, C)
        ok_all &= ok
        total += count
    rep.add(f"{tuples} sorted {size}-tuples, all permutations", ok_all, "true", None, ok_all)
    rep.add("permutations checked", total, f"{tuples * math.factorial(size)}", None,
            total == tuples * math.factorial(size))
    return rep


def suite_transport(cfg: SuiteConfig) -> SuiteReport:
    """Energy and line-integral identities of the change of variables."""
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("transport", a)
    nx, ny = cfg.grid or (64, 64)
    rho = DensityGrid.grushin((1.0, 2.0, 0.0, 1.0), nx, ny, a, np.ones((nx, ny)))
    rt = curves.density_transport(rho, a)
    area = grushin_area((1.0, 2.0, 0.0, 1.0), a)
    rep.within("transported energy vs Grushin area of [1,2]x[0,1]", rt.energy(), area, 0.02)
    seg = Polyline.from_vertices([[1.0, 0.5], [2.0, 0.5]])
    u = canonical_phi(seg.vertices, a)
    li_g = modulus.line_integral(rho, seg, "grushin", a)
    li_e = modulus.line_integral(rt, Polyline.from_vertices(u), "euclidean")
    rep.within("horizontal segment: Grushin line integral", li_g, 1.0, 0.02)
    rep.within("horizontal segment: flat line integral", li_e, li_g, 0.02)
    t = np.linspace(0.0, 1.0, 401)
    diag = Polyline(np.column_stack([1.1 + 0.8 * t, 0.1 + 0.8 * t]), t)
    img = Polyline(canonical_phi(diag.vertices, a), t)
    li_g = modulus.line_integral(rho, diag, "grushin", a)
    li_e = modulus.line_integral(rt, img, "euclidean")
    rep.within("oblique segment: flat vs Grushin line integral", li_e, li_g, 0.02)
    return rep


# --- maps ------------------------------------------------------------------------


def _random_gconf(rng, a):
    return qc.gconf(float(np.exp(rng.uniform(np.log(0.5), np.log(2.0)))), float(rng.uniform(-2, 2)),
                    "++" if rng.random() < 0.5 else "--", a)


def suite_conformal_family(cfg: SuiteConfig, points: int = 20, radii=(1e-1, 1e-2, 1e-3)) -> SuiteReport:
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("conformal-family", a)
    rng = np.random.default_rng(cfg.seed)
    worst_hi, worst_lo = 1.0, math.inf
    for _ in range(points):
        m = _random_gconf(rng, a)
        p = rng.uniform(-2, 2, 2)
        for e in qc.metric_dilatation(m, p, radii, 16, "grushin", "grushin", a, cfg.solver):
            worst_hi = max(worst_hi, e.ratio)
            worst_lo = min(worst_lo, e.ratio)
    rep.add("max dilatation estimate", worst_hi, "<= 1.02", 0.02, worst_hi <= 1.02)
    rep.add("min dilatation estimate", worst_lo, ">= 1", None, worst_lo >= 1.0)
    err = 0.0
    for _ in range(50):
        f, g = _random_gconf(rng, a), _random_gconf(rng, a)
        s = qc.simplify(qc.compose(f, g))
        pts = rng.uniform(-3, 3, (20, 2))
        lhs, rhs = qc.eval_map(qc.compose(f, g), pts), qc.eval_map(s, pts)
        err = max(err, float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
        if s.kind != "grushin-conformal":
            err = math.inf
    rep.add("composition closure", err, "<= 1e-12", 1e-12, err <= 1e-12)
    mu = 0.0
    for _ in range(20):
        m = qc.compose(_random_gconf(rng, a), _random_gconf(rng, a))
        p = rng.uniform(0.2, 3, 2) * np.array([rng.choice([-1, 1]), 1])
        mu = max(mu, qc.beltrami_coefficient(m, p).magnitude)
    rep.add("Beltrami magnitude of family maps", mu, "< 1e-4", 1e-4, mu < 1e-4)
    return rep


def suite_h0_witness(cfg: SuiteConfig, n_dirs: int = 256, radii=(1.0, 0.5, 0.25)) -> SuiteReport:
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("h0-witness", a)
    est = qc.metric_dilatation(qc.phi(a), (0.0, 0.0), radii, n_dirs, "grushin", "euclidean", a, cfg.solver)
    vals = np.array([e.ratio for e in est])
    rep.add("complete sphere samples", all(e.reliable for e in est), "true", None, all(e.reliable for e in est))
    rep.add("dilatation of phi at the origin", float(vals.min()), ">= 1.05", None, vals.min() >= 1.05)
    spread = float((vals.max() - vals.min()) / vals.min())
    rep.add("radius stability", spread, "<= 0.02", 0.02, spread <= 0.02)
    for e in est:
        rep.add(f"estimate at r={e.radius:g}", e.ratio, "reported", None, True)
    return rep


def suite_conversions(cfg: SuiteConfig) -> SuiteReport:
    rep = SuiteReport("conversions", check_alpha(cfg.alpha))
    for K in (1.0, 2.0, 4.0):
        d = qc.data_conversions(K)
        C = 4 ** (K - 1) * math.exp(6 * (K + 1) ** 2 * math.sqrt(K - 1))
        rep.add(f"C(K), K={K:g}", d.C, repr(C), 0.0, d.C == C)
        rep.add(f"mu norm, K={K:g}", d.mu_norm, repr((K - 1) / (K + 1)), 0.0, d.mu_norm == (K - 1) / (K + 1))
        rep.add(f"eta0(1) = C(K), K={K:g}", float(d.eta0(1.0)), repr(C), 0.0, float(d.eta0(1.0)) == C)
    stretch = qc.compose(qc.phi_inv(cfg.alpha), qc.affine(((2.0, 0.0), (0.0, 1.0))), qc.phi(cfg.alpha))
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(20):
        p = rng.uniform(0.2, 3, 2) * np.array([rng.choice([-1, 1]), 1])
        mu = qc.beltrami_coefficient(stretch, p).magnitude
        worst = max(worst, abs(mu - 1 / 3) / (1 / 3))
    rep.add("Beltrami magnitude of conjugated diag(2,1)", worst, "relative error to 1/3 <= 1%", 0.01, worst <= 0.01)
    return rep


def suite_quasisymmetry(cfg: SuiteConfig, map_text: str = "phi", source: str = "grushin",
                        target: str = "euclidean", triples: int = 1000) -> SuiteReport:
    a = check_alpha(cfg.alpha)
    rep = SuiteReport("quasisymmetry", a)
    m = qc.parse_map(map_text, a)
    prof = qc.quasisymmetry_profile(m, triples, None, source, target, a, seed=cfg.seed, opts=cfg.solver)
    filled = prof.counts > 0
    finite = bool(np.all(np.isfinite(prof.envelope[filled])))
    rep.add("envelope finite on occupied bins", finite, "true", None, finite)
    rep.add("occupied bins", int(filled.sum()), f"of {len(prof.counts)}", None, True)
    if m.kind == "identity" and source == target:
        exact = bool(np.all(prof.samples[:, 0] == prof.samples[:, 1]))
        rep.add("identity envelope equals t", exact, "true", None, exact)
    rep.artifacts["profile"] = prof
    return rep


SUITES = {
    "dilation": suite_dilation,
    "snowflake": suite_snowflake,
    "phi-conformal": suite_phi_conformal,
    "section5": suite_section5,
    "cantor": suite_cantor,
    "lemma31": suite_lemma31,
    "transport": suite_transport,
    "conformal-family": suite_conformal_family,
    "h0-witness": suite_h0_witness,
    "conversions": suite_conversions,
    "quasisymmetry": suite_quasisymmetry,
}


def run_suite(name: str, cfg: SuiteConfig, **kwargs) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](cfg, **kwargs)
