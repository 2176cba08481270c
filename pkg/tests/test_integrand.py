import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvfunctional.integrand import (Integrand, NoRecession, NotHomogeneous, check_homogeneous,
                                    estimate_recession, get_integrand, growth_check,
                                    parse_integrand, partition_weight, perspective,
                                    smooth_step, truncate_integrand, validate_recession)


def _pt(x, y, A):
    return np.array([x]), np.array([[y]]), np.array([[A]])


# -- recession --------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["abs", "area", "nonconvex", "ygrowth-2", "ygrowth-1.5"])
@pytest.mark.parametrize("A", [-3.0, -0.5, 1.0, 7.0])
def test_estimated_recession_matches_closed_form(name, A):
    f = get_integrand(name)
    x, y, a = _pt(0.2, 0.7, A)
    assert estimate_recession(f, x, y, a)[0] == pytest.approx(abs(A), rel=1e-5)


def test_area_recession_is_norm():
    f = get_integrand("area")
    assert f.recession_at(*_pt(0.0, 0.0, -4.0))[0] == 4.0


def test_ex55_recession_jumps_at_origin():
    f = get_integrand("ex55")
    assert not f.continuous_recession
    assert f.recession_at(*_pt(0.5, 0.0, 2.0))[0] == 2.0
    assert f.recession_at(*_pt(-0.5, 0.0, 2.0))[0] == 0.0
    # f itself is continuous in x at 0 for fixed A
    vals = [f(np.array([s]), np.array([[0.0]]), np.array([[1.5]]))[0] for s in (-1e-9, 0.0, 1e-9)]
    assert max(vals) - min(vals) < 1e-8


def test_missing_recession_raises():
    osc = Integrand(lambda x, y, A: np.abs(A[:, 0]) * (2 + np.sin(np.log1p(np.abs(A[:, 0])))))
    with pytest.raises(NoRecession):
        estimate_recession(osc, *_pt(0.0, 0.0, 1.0))
    with pytest.raises(NoRecession):
        perspective(osc)


def test_validate_recession_flags_wrong_function():
    good = validate_recession(get_integrand("area"))
    assert good.passed and good.max_deviation < 1e-3
    wrong = Integrand(lambda x, y, A: np.abs(A[:, 0]), lambda x, y, A: 2 * np.abs(A[:, 0]))
    report = validate_recession(wrong)
    assert not report.passed
    assert report.max_deviation == pytest.approx(10.0)


def test_validate_recession_flags_inhomogeneous():
    bad = Integrand(lambda x, y, A: np.abs(A[:, 0]), lambda x, y, A: A[:, 0] ** 2)
    assert not validate_recession(bad).passed


def test_check_homogeneous():
    check_homogeneous(get_integrand("abs"))
    with pytest.raises(NotHomogeneous):
        check_homogeneous(get_integrand("area"))


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(1e-3, 1e3), x=st.floats(-1, 1), y=st.floats(-5, 5), A=st.floats(-50, 50),
       name=st.sampled_from(["abs", "area", "nonconvex", "ygrowth-2", "ex55"]))
def test_recession_is_positively_homogeneous(lam, x, y, A, name):
    f = get_integrand(name)
    base = f.recession_at(*_pt(x, y, A))[0]
    scaled = f.recession_at(*_pt(x, y, lam * A))[0]
    assert scaled == pytest.approx(lam * base, rel=1e-9, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-1, 1), y=st.floats(-3, 3), A=st.floats(-10, 10),
       name=st.sampled_from(["abs", "area", "nonconvex", "ygrowth-2"]))
def test_recession_of_recession_is_itself(x, y, A, name):
    f = get_integrand(name)
    rec = Integrand(f.recession)
    once = f.recession_at(*_pt(x, y, A))[0]
    twice = estimate_recession(rec, *_pt(x, y, A))[0]
    assert twice == pytest.approx(once, rel=1e-9, abs=1e-9)


# -- perspective ------------------------------------------------------------------------

@pytest.mark.parametrize("t, A", [(1.0, 0.0), (0.5, 2.0), (-2.0, 1.0), (0.0, 3.0), (0.0, -1.0)])
def test_area_perspective_is_euclidean_norm(t, A):
    pf = perspective(get_integrand("area"))
    val = pf(np.array([0.1]), np.array([0.1]), np.array([[0.0]]), np.array([t]), np.array([[A]]))[0]
    assert val == pytest.approx(math.hypot(t, A), rel=1e-14)


def test_perspective_is_homogeneous_in_t_and_A():
    pf = perspective(get_integrand("nonconvex"))
    x, y = np.array([0.3]), np.array([[0.2]])
    base = pf(x, x, y, np.array([0.4]), np.array([[1.3]]))[0]
    for lam in (0.1, 3.0, 40.0):
        assert pf(x, x, y, np.array([0.4 * lam]), np.array([[1.3 * lam]]))[0] == pytest.approx(lam * base)


# -- truncation -------------------------------------------------------------------------

def test_smooth_step_shape():
    s = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(smooth_step(s), [1.0, 1.0, 0.5, 0.0, 0.0])
    grid = np.linspace(-0.5, 1.5, 401)
    assert np.all(np.diff(smooth_step(grid)) <= 0)


def test_truncation_matches_inside_and_vanishes_outside():
    f = get_integrand("ygrowth-2")
    fk = truncate_integrand(f, 2)
    x, A = np.zeros(3), np.ones((3, 1))
    y = np.array([[0.5], [1.99], [-3.0]])
    np.testing.assert_allclose(fk(x, y, A), [f(x, y, A)[0], f(x, y, A)[1], 0.0])
    with pytest.raises(ValueError):
        truncate_integrand(f, 0)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 6), y=st.floats(-10, 10), A=st.floats(-20, 20),
       name=st.sampled_from(["abs", "area", "nonconvex", "ygrowth-2"]))
def test_truncation_sandwich(k, y, A, name):
    f = get_integrand(name)
    pt = _pt(0.1, y, A)
    fk = truncate_integrand(f, k)(*pt)[0]
    fk1 = truncate_integrand(f, k + 1)(*pt)[0]
    full = f(*pt)[0]
    assert 0.0 <= fk <= fk1 + 1e-12 <= full + 2e-12
    w = partition_weight(pt[1], k)[0]
    assert 0.0 <= w <= 1.0


# -- growth -----------------------------------------------------------------------------

def test_growth_check_examples():
    assert growth_check(get_integrand("area")).passed
    assert growth_check(get_integrand("ygrowth-2")).passed
    sq = Integrand(lambda x, y, A: A[:, 0] ** 2, growth=(1.0, 1.0))
    report = growth_check(sq)
    assert not report.passed
    assert report.worst_ratio > 10.0 / (1 + 10.0) * 10.0 - 1e-9


def test_growth_certificate_validation():
    with pytest.raises(ValueError):
        Integrand(lambda x, y, A: x, growth=(1.0, 0.5))
    with pytest.raises(ValueError):
        Integrand(lambda x, y, A: x, continuity="measurable")


# -- registry and parsing ---------------------------------------------------------------

def test_registry_lookup():
    assert get_integrand("ygrowth-p").growth == (1.0, 2.0)
    assert get_integrand("ygrowth-3").growth == (1.0, 3.0)
    for bad in ("nosuch", "ygrowth-0.5", "ygrowth-abc"):
        with pytest.raises(KeyError):
            get_integrand(bad)


def test_parse_integrand_expression():
    f = parse_integrand("sqrt(1 + A^2) + y^2")
    x, y, A = _pt(0.0, 2.0, 3.0)
    assert f(x, y, A)[0] == pytest.approx(math.sqrt(10) + 4)
    assert f.growth[1] == 2.0
    assert f.recession_at(x, y, A)[0] == pytest.approx(3.0, rel=1e-5)
    assert parse_integrand(" area ").name == "area"


@pytest.mark.parametrize("text", ["z + A", "sqrt(", "1/(x - x)"])
def test_parse_integrand_rejects(text):
    with pytest.raises(KeyError):
        parse_integrand(text)
