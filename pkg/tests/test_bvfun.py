import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvfunctional.bvfun import (BVFunction1D, CantorComponent, JumpAtom, Piece, RadialBV, SmoothMap,
                                UnsupportedCantorComposition, cantor_function, compose, decompose,
                                from_callables, integrate, jump_average, lp_distance, piecewise_constant,
                                piecewise_linear, radial_lp_norm, radial_total_variation,
                                reflected_extension, sup_distance, total_variation, volpert_average)
from bvfunctional.convergence import make_family, make_limit
from bvfunctional.quadrature import gauss_legendre01

from _suite import SUITE


# -- construction and evaluation ---------------------------------------------------------

def test_pieces_evaluate_right_continuously():
    u = piecewise_constant([-1.0, 0.0, 1.0], [-1.0, 1.0])
    np.testing.assert_array_equal(u(np.array([-0.5, 0.0, 0.5])), [-1.0, 1.0, 1.0])
    left, right = u.traces(0.0)
    assert left[0] == -1.0 and right[0] == 1.0
    assert u.precise(0.0)[0, 0] == 0.0


def test_jump_detection_ignores_continuous_breakpoints():
    u = piecewise_linear([0.0, 0.5, 1.0], [0.0, 0.5], [0.5, 2.0])
    assert u.jumps == ()
    v = piecewise_linear([0.0, 0.5, 1.0], [0.0, 0.7], [0.5, 2.0])
    (j,) = v.jumps
    assert j.location == 0.5 and j.mass == pytest.approx(0.2)


def test_invalid_meshes_are_rejected():
    with pytest.raises(ValueError):
        piecewise_constant([0.0, 0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        BVFunction1D([0.0, 1.0], [Piece.constant(0.0, 0.5, 1.0)])
    with pytest.raises(ValueError):
        cantor_function(0.0, 1.0, alpha=0.5, beta=1.5)


def test_vector_valued_pieces():
    u = make_limit("vector_jump")
    assert u.m == 2
    (j,) = u.jumps
    np.testing.assert_allclose(j.polar, (j.right - j.left) / np.linalg.norm(j.right - j.left))
    assert np.linalg.norm(j.polar) == pytest.approx(1.0)


@pytest.mark.parametrize("x, expected", [(1 / 3, 0.5), (2 / 3, 0.5), (1 / 9, 0.25), (0.25, 1 / 3),
                                         (0.75, 2 / 3), (0.0, 0.0), (1.0, 1.0)])
def test_cantor_staircase_values(x, expected):
    assert cantor_function()(x) == pytest.approx(expected, abs=2 ** -23)


def test_cantor_square_integral_matches_self_similarity():
    # I = int c^2 solves I = I/12 + 1/12 + (1/2 + I/4)/3, so I = 3/10
    u = cantor_function()
    val, _ = integrate(u, lambda x: u.evaluate(x)[:, 0] ** 2)
    assert val == pytest.approx(0.3, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0.0, 1.0), k=st.integers(1, 18), lam=st.sampled_from([1 / 3, 0.5, 0.2]))
def test_staircase_depth_convergence(x, k, lam):
    c = CantorComponent(0.0, 1.0, lam, np.array([1.7]))
    a = c.staircase(np.array([x]), k)
    b = c.staircase(np.array([x]), k + 4)
    assert np.all(np.abs(a - b) <= 1.7 * 2.0 ** -k + 1e-15)


# -- decomposition ----------------------------------------------------------------------

def test_decompose_identity():
    d = decompose(make_limit("identity"))
    assert (d.ac_total, d.jump_total, d.cantor_total, d.total) == (1.0, 0.0, 0.0, 1.0)


def test_decompose_sign_jump():
    d = decompose(make_limit("sign"))
    assert d.ac_total == 0.0 and d.cantor_total == 0.0
    assert d.jumps == [(0.0, 2.0)]
    assert d.total == 2.0


def test_decompose_cantor():
    d = decompose(cantor_function())
    assert (d.ac_total, d.jump_total) == (0.0, 0.0)
    assert d.cantor_total == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("j", [1, 2, 3, 7, 64])
def test_oscillation_total_variation_is_one(j):
    assert total_variation(make_family("oscillation")(j)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", sorted(SUITE))
def test_mass_additivity_and_sampled_variation(name):
    u = SUITE[name]
    d = decompose(u)
    assert d.total == pytest.approx(d.ac_total + d.jump_total + d.cantor_total, rel=1e-8)
    # independent oracle: variation of samples on a fine grid containing the jump points
    x = np.unique(np.concatenate([np.linspace(u.domain.a, u.domain.b, 2 ** 16 + 1), u.breakpoints]))
    sampled = np.sum(np.linalg.norm(np.diff(u.evaluate(x), axis=0), axis=1))
    assert sampled == pytest.approx(d.total, rel=5e-3, abs=5e-3)
    assert sampled <= d.total + 1e-9


# -- jump averaging and chain rule ------------------------------------------------------

def test_jump_average_examples():
    u = make_limit("sign")
    assert jump_average(u, 0.0, 0.5)[0] == 0.0
    assert jump_average(u, 0.0, 1.0)[0] == 1.0
    sq = from_callables([-1.0, 1.0], [(lambda x: x * x, lambda x: 2 * x)])
    assert jump_average(sq, 0.3, 0.7)[0] == pytest.approx(0.09)


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=5, max_size=5),
       left=st.floats(-2, 2), right=st.floats(-2, 2))
def test_jump_average_swap_invariance(coeffs, left, right):
    nodes, weights = gauss_legendre01(32)
    g = np.polynomial.Polynomial(coeffs)
    a = JumpAtom(0.0, np.array([left]), np.array([right]))
    b = JumpAtom(0.0, np.array([right]), np.array([left]))
    ia = weights @ g(a.average(nodes)[:, 0])
    ib = weights @ g(b.average(nodes)[:, 0])
    assert ia == pytest.approx(ib, rel=1e-12, abs=1e-12)


def test_compose_examples():
    ident = make_limit("identity")
    doubled = compose(SmoothMap.linear([[2.0]]), ident)
    np.testing.assert_allclose(doubled.gradient(np.linspace(0, 1, 5)), 2.0)
    sq = compose(SmoothMap.scalar(lambda y: y * y, lambda y: 2 * y), ident)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(sq.gradient(x)[:, 0], 2 * x)
    at = compose(SmoothMap.scalar(np.arctan, lambda y: 1 / (1 + y * y)), make_limit("step"))
    (j,) = at.jumps
    assert j.mass == pytest.approx(math.pi / 4, abs=1e-15)


def test_compose_rejects_cantor_parts():
    with pytest.raises(UnsupportedCantorComposition):
        compose(SmoothMap.linear([[1.0]]), cantor_function())


def test_volpert_average_examples():
    sq = SmoothMap.scalar(lambda y: y * y, lambda y: 2 * y)
    assert volpert_average(sq, make_limit("step"), 0.0)[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert volpert_average(sq, make_limit("identity"), 0.3)[0, 0] == pytest.approx(0.6)
    eye = volpert_average(SmoothMap.linear(np.eye(2)), make_limit("vector_jump"), 0.2)
    np.testing.assert_allclose(eye, np.eye(2))


_MAPS = [
    SmoothMap.scalar(np.sin, np.cos),
    SmoothMap.scalar(lambda y: y ** 3 - y, lambda y: 3 * y * y - 1),
    SmoothMap.scalar(np.arctan, lambda y: 1 / (1 + y * y)),
    SmoothMap.scalar(lambda y: np.exp(-y * y), lambda y: -2 * y * np.exp(-y * y)),
]


@st.composite
def _random_pair(draw):
    g = draw(st.sampled_from(_MAPS))
    n = draw(st.integers(1, 4))
    inner = sorted(draw(st.lists(st.floats(-0.9, 0.9), min_size=n - 1, max_size=n - 1, unique=True)))
    bps = [-1.0] + inner + [1.0]
    if np.any(np.diff(bps) < 1e-3):
        bps = list(np.linspace(-1, 1, n + 1))
    left = draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))
    right = draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))
    return g, piecewise_linear(bps, left, right)


@settings(max_examples=20, deadline=None)
@given(pair=_random_pair())
def test_chain_rule_consistency(pair):
    g, u = pair
    w = compose(g, u)
    x = np.linspace(-0.999, 0.999, 101)
    expected = np.einsum("inm,im->in", g.grad(u.evaluate(x)), u.gradient(x))
    np.testing.assert_allclose(w.gradient(x), expected, atol=1e-12)
    wj = {j.location: j for j in w.jumps}
    for j in u.jumps:
        jump = g.func(j.right[None, :])[0] - g.func(j.left[None, :])[0]
        # Vol'pert average times the jump of u gives the jump of g o u
        via_average = volpert_average(g, u, j.location) @ j.size
        np.testing.assert_allclose(via_average, jump, atol=1e-6)
        if np.linalg.norm(jump) > 1e-12:
            np.testing.assert_allclose(wj[j.location].size, jump, atol=1e-12)
    d = decompose(w)
    ac, _ = integrate(u, lambda t: np.linalg.norm(np.einsum("inm,im->in", g.grad(u.evaluate(t)),
                                                             u.gradient(t)), axis=1))
    assert d.ac_total == pytest.approx(ac, abs=1e-6)


# -- distances --------------------------------------------------------------------------

@pytest.mark.parametrize("j", [1, 2, 4, 8, 16, 32, 64])
def test_example_53_distances(j):
    u, uj = make_limit("sign"), make_family("jump_smoothing")(j)
    assert sup_distance(uj, u) == pytest.approx(1.0, abs=1e-12)
    assert lp_distance(uj, u, 1.0) == pytest.approx(1.0 / j, abs=1e-12)


@pytest.mark.parametrize("name", sorted(SUITE))
def test_distance_to_self_is_zero(name):
    u = SUITE[name]
    assert lp_distance(u, u, 1.0) == 0.0
    assert sup_distance(u, u) == 0.0


def test_lp_distance_closed_forms():
    ident = make_limit("identity")
    zero = piecewise_constant([0.0, 1.0], [0.0])
    assert lp_distance(ident, zero, 2.0) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert lp_distance(ident, zero, math.inf) == pytest.approx(1.0)
    assert sup_distance(make_family("oscillation")(4), ident) == pytest.approx(1 / (8 * math.pi), rel=1e-9)


def test_domains_must_match():
    with pytest.raises(ValueError):
        lp_distance(make_limit("identity"), make_limit("step"))


# -- reflection and radial profiles ---------------------------------------------------------

@pytest.mark.parametrize("name", ["three_jump", "cantor", "smooth_jump", "cantor_with_jump", "vector_jump"])
def test_reflected_extension_is_even(name):
    u = SUITE[name]
    a, b = u.domain.a, u.domain.b
    ext = reflected_extension(u)
    # off-mesh samples: reflection swaps one-sided traces at breakpoints
    s = a + (b - a) * (np.arange(96) + 0.37) / 96
    np.testing.assert_allclose(ext.evaluate(2 * a - s), u.evaluate(s), atol=1e-12)
    np.testing.assert_allclose(ext.evaluate(2 * b - s), u.evaluate(s), atol=1e-12)
    np.testing.assert_allclose(ext.evaluate(s), u.evaluate(s), atol=1e-12)
    assert total_variation(ext) == pytest.approx(3 * total_variation(u), rel=1e-9)


def test_radial_examples():
    step = piecewise_constant([0.0, 0.5, 1.0], [1.0, 0.0])
    assert radial_total_variation(RadialBV(step, 2)) == pytest.approx(math.pi, abs=1e-14)
    ramp = piecewise_linear([0.0, 1.0], [0.0], [1.0])
    assert radial_total_variation(RadialBV(ramp, 2)) == pytest.approx(math.pi, abs=1e-14)
    smooth_ramp = from_callables([0.0, 1.0], [(lambda r: r, lambda r: np.ones_like(r))])
    assert radial_total_variation(RadialBV(smooth_ramp, 2)) == pytest.approx(math.pi, abs=1e-9)
    const = piecewise_constant([0.0, 1.0], [3.0])
    assert radial_total_variation(RadialBV(const, 3)) == 0.0
    # ||1_{B_{1/2}}||_2 in R^2 is sqrt(pi/4)
    assert radial_lp_norm(RadialBV(step, 2), 2.0) == pytest.approx(math.sqrt(math.pi / 4), abs=1e-12)


def test_radial_cantor_weight():
    c = cantor_function()
    # d = 2: 2 pi int r dc(r) = 2 pi * (1 - int c) = pi
    assert radial_total_variation(RadialBV(c, 2)) == pytest.approx(math.pi, abs=1e-9)


@pytest.mark.parametrize("name", ["identity", "cantor", "quadratic_profile"])
def test_radial_reduces_to_one_dimension_at_d1(name):
    profiles = {
        "identity": make_limit("identity"),
        "cantor": cantor_function(),
        "quadratic_profile": piecewise_linear([0.0, 0.4, 1.0], [1.0, -0.5], [0.2, 0.7]),
    }
    g = profiles[name]
    ru = RadialBV(g, 1)
    full = ru.slice()
    assert radial_total_variation(ru) == pytest.approx(total_variation(full), rel=1e-12)
    zero = piecewise_constant([full.domain.a, full.domain.b], [0.0])
    assert radial_lp_norm(ru, 2.0) == pytest.approx(lp_distance(full, zero, 2.0), rel=1e-9)


def test_radial_profile_must_start_at_origin():
    with pytest.raises(ValueError):
        RadialBV(make_limit("step"), 2)
