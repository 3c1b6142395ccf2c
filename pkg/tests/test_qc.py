import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grushin_qc.qc import (
    DistortionReport,
    EtaProfile,
    affine,
    beltrami_coefficient,
    compose,
    data_conversions,
    eval_map,
    gconf,
    identity,
    metric_dilatation,
    parse_map,
    phi,
    phi_inv,
    quasisymmetry_profile,
    simplify,
)


def test_eval_examples():
    assert np.allclose(eval_map(gconf(2, 0, "++", 1), (1, 1)), (2, 4))
    assert np.allclose(eval_map(gconf(1, 5), (3, -2)), (3, 3))
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5, 5, (50, 2))
    for a in (0.5, 1.0, 2.0):
        back = eval_map(compose(phi_inv(a), phi(a)), pts)
        assert np.allclose(back, pts, rtol=1e-12, atol=1e-12)


def test_composition_order_is_right_to_left():
    f = affine(((1, 0), (0, 1)), (1, 0))
    g = affine(((2, 0), (0, 1)))
    assert np.allclose(eval_map(compose(f, g), (1, 0)), (3, 0))
    assert np.allclose(eval_map(compose(g, f), (1, 0)), (4, 0))


def test_mapspec_validation():
    with pytest.raises(ValueError):
        gconf(2, 0, "+-")
    with pytest.raises(ValueError):
        gconf(-1, 0)
    with pytest.raises(ValueError):
        affine(((1, 1), (1, 1)))


lams = st.floats(0.1, 10)
shifts = st.floats(-10, 10)
signs = st.sampled_from(["++", "--"])


@settings(max_examples=100)
@given(lams, shifts, signs, lams, shifts, signs, st.sampled_from([0.5, 1.0, 2.0]))
def test_conformal_family_closed_under_composition(l1, a1, s1, l2, a2, s2, alpha):
    f, g = gconf(l1, a1, s1, alpha), gconf(l2, a2, s2, alpha)
    h = simplify(compose(f, g))
    assert h.kind == "grushin-conformal"
    pts = np.random.default_rng(0).uniform(-3, 3, (10, 2))
    lhs, rhs = eval_map(compose(f, g), pts), eval_map(h, pts)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(lhs).max())


def test_simplify_cancels_phi_pairs():
    assert simplify(compose(phi(1), phi_inv(1))).kind == "identity"


def test_parse_and_format_round_trip():
    m = parse_map("phi . gconf(l=2,a=0,s=++) . phi_inv", 1.0)
    assert [p.kind for p in m.parts] == ["canonical-phi", "grushin-conformal", "canonical-phi-inverse"]
    again = parse_map(str(m), 1.0)
    assert again == m
    a = parse_map("affine(m=2;0;0;1,b=1;-1)")
    assert np.allclose(eval_map(a, (1, 1)), (3, 0))
    for bad in ("phi . wat", "gconf(l)", "affine(m=1;2)"):
        with pytest.raises(ValueError):
            parse_map(bad)


def test_affine_dilatation_euclidean():
    est = metric_dilatation(affine(((2, 0), (0, 1))), (0, 0), [1.0, 0.5], 64, "euclidean", "euclidean")
    assert all(e.ratio == pytest.approx(2.0, rel=1e-12) for e in est)


def test_conformal_family_dilatation_near_one():
    est = metric_dilatation(gconf(2, 0.5, "--", 1), (0.8, -0.4), [1e-1, 1e-2], 16)
    assert all(1 <= e.ratio <= 1.02 and e.reliable for e in est)


def test_dilatation_input_checks():
    with pytest.raises(ValueError):
        metric_dilatation(identity(), (0, 0), [0.5, 1.0], 16, "euclidean", "euclidean")
    with pytest.raises(ValueError):
        metric_dilatation(identity(), (0, 0), [1.0], 8, "euclidean", "euclidean")


def test_quasisymmetry_identity_and_similarity_exact():
    prof = quasisymmetry_profile(identity(), 1000, source="euclidean", target="euclidean", seed=3)
    assert np.array_equal(prof.samples[:, 0], prof.samples[:, 1])
    sim = affine(((0, -3), (3, 0)), (1, 2))
    prof = quasisymmetry_profile(sim, 1000, source="euclidean", target="euclidean", seed=3)
    assert np.allclose(prof.samples[:, 0], prof.samples[:, 1], rtol=1e-12)
    with pytest.raises(ValueError):
        quasisymmetry_profile(identity(), 10)


def test_quasisymmetry_profile_is_reproducible_and_serialisable():
    a = quasisymmetry_profile(identity(), 1000, source="euclidean", target="euclidean", seed=7)
    b = quasisymmetry_profile(identity(), 1000, source="euclidean", target="euclidean", seed=7)
    assert a.to_csv() == b.to_csv()
    assert EtaProfile.from_dict(a.to_dict()).to_csv() == a.to_csv()


@pytest.mark.slow
def test_phi_quasisymmetry_envelope_is_finite():
    prof = quasisymmetry_profile(phi(1.0), 1000, source="grushin", target="euclidean", seed=0)
    filled = prof.counts > 0
    assert filled.sum() >= 8
    assert np.all(np.isfinite(prof.envelope[filled]))
    assert prof.counts.sum() <= 1000


@pytest.mark.parametrize("p", [(1.0, 0.3), (-2.0, 1.0), (0.5, -3.0)])
def test_beltrami_examples(p):
    assert beltrami_coefficient(identity(1.0), p).magnitude < 1e-6
    assert beltrami_coefficient(gconf(1.7, -0.4, "--", 1.0), p).magnitude < 1e-6
    stretch = parse_map("phi_inv . affine(m=2;0;0;1) . phi", 1.0)
    assert beltrami_coefficient(stretch, p).magnitude == pytest.approx(1 / 3, rel=0.01)


def test_beltrami_stencil_must_avoid_Y():
    with pytest.raises(ValueError):
        beltrami_coefficient(identity(), (1e-6, 0.0))


def test_beltrami_degenerate_point_is_flagged():
    # orientation-reversing flip: phi o f = (u, -v) has D- (phi o f) = 0
    flip = compose(phi_inv(1.0), affine(((1, 0), (0, -1))), phi(1.0))
    val = beltrami_coefficient(flip, (1.0, 0.5))
    assert val.degenerate


def test_data_conversions():
    d1 = data_conversions(1)
    assert d1.C == 1 and d1.mu_norm == 0 and d1.eta0(0.3) == pytest.approx(0.3)
    assert data_conversions(2).mu_norm == pytest.approx(1 / 3)
    for K in (1.5, 2, 4):
        d = data_conversions(K)
        assert float(d.eta0(1.0)) == d.C
    with pytest.raises(ValueError):
        data_conversions(0.9)


def test_report_serialises():
    est = metric_dilatation(affine(((2, 0), (0, 1))), (0, 0), [1.0], 16, "euclidean", "euclidean")
    rep = DistortionReport("affine", est, [(0.5, 1.0)], None, 0.0)
    d = rep.to_dict()
    assert d["H_estimates"][0]["ratio"] == pytest.approx(2.0)
