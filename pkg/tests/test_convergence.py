import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvfunctional.bvfun import (RadialBV, lp_distance, piecewise_constant, reflected_extension,
                                total_variation)
from bvfunctional.convergence import (FAMILY_NAMES, area_strict_distance, embedding_experiment,
                                      make_family, make_limit, mollify, radial_strict_distance,
                                      run_experiment, strict_distance, triweight, triweight_cdf)
from bvfunctional.functional import area_functional
from bvfunctional.integrand import Integrand
from bvfunctional.lifting import random_bumps

from _suite import SUITE

L_STAR = 1.5131795766437733
METRICS = [strict_distance, area_strict_distance]


# -- metrics ----------------------------------------------------------------------------

@pytest.mark.parametrize("metric", METRICS)
@pytest.mark.parametrize("name", sorted(SUITE))
def test_self_distance_is_zero(metric, name):
    assert metric(SUITE[name], SUITE[name]) == 0.0


@pytest.mark.parametrize("j", [1, 4, 64])
def test_oscillation_strict_distance_is_l1(j):
    u = make_family("oscillation")(j)
    # ||sin(2 pi j x)/(2 pi j)||_1 on (0, 1) = 1 / (pi^2 j)
    assert strict_distance(u, make_limit("identity")) == pytest.approx(1 / (math.pi ** 2 * j), abs=1e-10)


@pytest.mark.parametrize("j", [1, 2, 8, 64])
def test_jump_smoothing_distances(j):
    u, lim = make_family("jump_smoothing")(j), make_limit("sign")
    assert strict_distance(u, lim) == pytest.approx(1.0 / j, abs=1e-10)
    area = (2 - 2 / j) + (2 / j) * math.sqrt(1 + j * j)
    assert area_functional(u) == pytest.approx(area, abs=1e-10)
    assert area_strict_distance(u, lim) == pytest.approx(1.0 / j + abs(area - 4.0), abs=1e-10)


@pytest.mark.parametrize("j", [1, 2, 10, 64])
def test_shifted_jump_area_strict_distance(j):
    u = make_family("shifted_jump")(j)
    # j = 1 is the constant 1: L1 gap 1 plus area gap (2 vs 3)
    expected = 2.0 if j == 1 else 1.0 / j
    assert area_strict_distance(u, make_limit("step")) == pytest.approx(expected, abs=1e-12)


def test_oscillation_area_gap():
    u = make_family("oscillation")(64)
    assert area_functional(u) == pytest.approx(L_STAR, abs=1e-9)
    assert area_strict_distance(u, make_limit("identity")) == pytest.approx(L_STAR - math.sqrt(2), abs=1e-2)


_TRIPLE_POOL = sorted(SUITE)


@settings(max_examples=50, deadline=None)
@given(names=st.lists(st.sampled_from(_TRIPLE_POOL), min_size=3, max_size=3),
       metric=st.sampled_from(METRICS))
def test_metric_axioms(names, metric):
    u, v, w = (SUITE[n] for n in names)
    if len({(x.domain, x.m) for x in (u, v, w)}) > 1:
        return
    duv, dvu = metric(u, v), metric(v, u)
    assert duv >= 0.0
    assert duv == pytest.approx(dvu, abs=1e-12)
    assert duv <= metric(u, w) + metric(w, v) + 1e-9
    if names[0] != names[1]:
        assert duv > 0.0


def test_area_strict_dominates_strict_ordering():
    # area-strict zero implies strict zero on the suite
    for u in SUITE.values():
        for v in SUITE.values():
            if (u.domain, u.m) == (v.domain, v.m) and area_strict_distance(u, v) == 0.0:
                assert strict_distance(u, v) == 0.0


# -- radial -----------------------------------------------------------------------------

def test_radial_strict_distance_self_and_steepening():
    fam = make_family("radial_steepening", d=2)
    assert radial_strict_distance(fam.limit, fam.limit) == 0.0
    d = [radial_strict_distance(fam(j), fam.limit) for j in (4, 64, 1024)]
    assert d[0] > d[1] > d[2]


# -- mollification ----------------------------------------------------------------------

def test_triweight_kernel():
    t = np.linspace(-1, 1, 20001)
    assert np.trapezoid(triweight(t), t) == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(triweight_cdf(np.array([-1.0, 0.0, 1.0, 2.0])), [0.0, 0.5, 1.0, 1.0])


@pytest.mark.parametrize("eps", [0.3, 0.01])
def test_mollify_preserves_constants(eps):
    u = piecewise_constant([-1.0, 1.0], [2.5])
    v = mollify(u, eps)
    assert not v.jumps and not v.cantor
    np.testing.assert_allclose(v.evaluate(np.linspace(-1, 1, 33)), 2.5, atol=1e-14)


@pytest.mark.parametrize("eps", [2.0 ** -k for k in (3, 6, 10)])
def test_mollified_step_l1_error(eps):
    # 2 int_0^eps (1 - K(t/eps)) dt = eps * 35/128 for the triweight cdf K
    v = mollify(make_limit("step"), eps)
    assert lp_distance(v, make_limit("step"), 1.0) == pytest.approx(35 / 128 * eps, rel=1e-7)


@pytest.mark.parametrize("name", ["step", "three_jump", "smooth_jump", "cantor", "cantor_with_jump",
                                  "quadratic", "vector_jump"])
@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_mollify_l1_bound(name, eps):
    u = SUITE[name]
    v = mollify(u, eps)
    assert not v.jumps and not v.cantor
    assert lp_distance(v, u, 1.0) <= eps * total_variation(reflected_extension(u)) + 1e-9


def test_mollify_rejects_large_eps():
    with pytest.raises(ValueError):
        mollify(make_limit("step"), 0.6)


# -- families ---------------------------------------------------------------------------

def test_family_formulas():
    x = np.linspace(0, 1, 9)
    np.testing.assert_allclose(make_family("oscillation")(4).evaluate(x)[:, 0],
                               x + np.sin(8 * np.pi * x) / (8 * np.pi), atol=1e-14)
    u = make_family("shifted_jump")(10)
    np.testing.assert_array_equal(u.evaluate(np.array([-0.5, -0.1, 0.5]))[:, 0], [0.0, 1.0, 1.0])
    assert u.jumps[0].location == pytest.approx(-0.1)
    fam = make_family("mollified", u="cantor")
    assert fam.limit.cantor and fam.index_range == (3, 4, 5, 6, 7, 8, 9, 10)


def test_family_registry():
    for name in FAMILY_NAMES:
        fam = make_family(name)
        assert fam.index_range
        j = fam.index_range[0]
        member = fam(j)
        assert isinstance(member, RadialBV) == fam.radial
    with pytest.raises(KeyError):
        make_family("nosuch")


# -- experiments ------------------------------------------------------------------------

def test_shifted_jump_experiment():
    rep = run_experiment(make_family("shifted_jump"), ["ex55"], graph=False)
    np.testing.assert_array_equal(rep.column("F_ex55"), 0.0)
    assert rep.limit_row["F_ex55"] == 1.0
    assert rep.column("area_strict_dist")[-1] == pytest.approx(1 / 64)
    assert not rep.diagnostics


def test_oscillation_abs_experiment():
    fam = make_family("oscillation", index_range=(1, 4, 16))
    bumps = random_bumps(np.random.default_rng(0), fam.limit, 4)
    rep = run_experiment(fam, ["abs"], k=0.5, dictionary=bumps)
    np.testing.assert_allclose(rep.column("F_abs"), 1.0, atol=1e-9)
    np.testing.assert_allclose(rep.column("F_abs_graph"), 1.0, atol=1e-9)
    np.testing.assert_allclose(rep.column("lifting_mass_gap"), 0.0, atol=1e-9)
    assert rep.indices == [1, 4, 16]
    assert rep.columns[-2:] == ["lifting_pairing_gap", "tail_mass"]
    assert all(np.isfinite(rep.column(c)).all() for c in rep.columns)


def test_mollified_three_jump_area_converges():
    fam = make_family("mollified", u="three_jump", index_range=(3, 6, 10))
    rep = run_experiment(fam, ["area"], graph=False, lifting=False)
    gap = np.abs(rep.column("F_area") - rep.limit_row["F_area"])
    assert np.all(np.diff(gap) < 0) and gap[-1] < 1e-2
    assert np.all(rep.column("strict_dist") <= rep.column("area_strict_dist") + 1e-12)


def test_experiment_is_deterministic_and_threaded():
    fam = make_family("jump_smoothing", index_range=(1, 2, 4))
    a = run_experiment(fam, ["area", "sqrt(1 + A^2) + y^2"], workers=1)
    b = run_experiment(fam, ["area", "sqrt(1 + A^2) + y^2"], workers=3)
    assert a.columns == b.columns
    assert "F_sqrt_1_+_A_2_+_y_2" in a.columns
    for c in a.columns:
        np.testing.assert_array_equal(a.column(c), b.column(c))


def test_failed_cells_become_diagnostics():
    def boom(x, y, A):
        raise RuntimeError("no")

    bad = Integrand(lambda x, y, A: np.abs(A[:, 0]), boom, name="bad")
    rep = run_experiment(make_family("shifted_jump", index_range=(2, 4)), [bad], graph=False)
    assert np.all(np.isnan(rep.column("F_bad")))
    assert {(d[0], d[1]) for d in rep.diagnostics} >= {(2, "F_bad"), (4, "F_bad")}
    assert np.isfinite(rep.column("strict_dist")).all()


def test_run_experiment_rejects_radial():
    with pytest.raises(ValueError):
        run_experiment(make_family("radial_steepening"))


# -- embedding --------------------------------------------------------------------------

def test_embedding_d2_steepening():
    fam = make_family("radial_steepening", index_range=(2, 16, 256, 4096), d=2)
    rep = embedding_experiment(fam)
    lp = rep.column("lp_dist")
    # ||ramp - step||_2 in R^2 with half-width 1/j at r = 1/2; the weight 2 pi r is
    # linear and the error symmetric about 1/2, so this is exact once the ramp fits
    np.testing.assert_allclose(lp, [math.sqrt(2 * math.pi / (3 * j)) for j in rep.indices], rtol=1e-8)
    np.testing.assert_allclose(rep.column("sup_dist"), 1.0)


def test_embedding_d1_sup_stays_one():
    fam = make_family("radial_steepening", index_range=(2, 32, 512), d=1)
    rep = embedding_experiment(fam)
    np.testing.assert_allclose(rep.column("sup_dist"), 1.0)
    assert np.all(np.diff(rep.column("strict_dist")) < 0)


def test_embedding_rejects_non_radial():
    with pytest.raises(ValueError):
        embedding_experiment(make_family("oscillation"))
