"""The extended integral functional on BV and its graph (perspective) form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvfun import MEASURE_DEPTH, BVFunction1D, integrate
from .integrand import Integrand, get_integrand, perspective
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gauss_legendre01

__all__ = ["FunctionalValue", "QuadratureSpec", "evaluate_F", "evaluate_F_graph",
           "area_functional", "theta_integral"]


@dataclass(frozen=True)
class FunctionalValue:
    total: float
    ac_part: float
    jump_part: float
    cantor_part: float
    error_estimate: float

    @classmethod
    def from_parts(cls, ac, jump, cantor, error):
        return cls(ac + jump + cantor, ac, jump, cantor, error)


def theta_integral(values: np.ndarray, weights: np.ndarray) -> float:
    """Gauss-Legendre sum, exact when the samples are all equal."""
    if np.all(values == values[0]):
        return float(values[0])
    return float(np.dot(weights, values))


def _cantor_depth(q: QuadratureSpec) -> int:
    return min(MEASURE_DEPTH, q.cantor_depth)


def _jump_sum(u: BVFunction1D, q: QuadratureSpec, density) -> tuple[float, float]:
    """``sum_i |[u]_i| int_0^1 density(x_i, u^theta, polar_i) dtheta`` with an error bound."""
    nodes, weights = gauss_legendre01(q.theta_order)
    coarse_n, coarse_w = gauss_legendre01(max(q.theta_order // 2, 1))
    total, err = 0.0, 0.0
    for j in u.jumps:
        xs = np.full(nodes.size, j.location)
        vals = density(xs, j.average(nodes), np.broadcast_to(j.polar, (nodes.size, u.m)))
        fine = theta_integral(vals, weights)
        xc = np.full(coarse_n.size, j.location)
        coarse = theta_integral(
            density(xc, j.average(coarse_n), np.broadcast_to(j.polar, (coarse_n.size, u.m))),
            coarse_w)
        total += j.mass * fine
        err += j.mass * abs(fine - coarse)
    return total, err


def _cantor_sum(u: BVFunction1D, q: QuadratureSpec, density) -> tuple[float, float]:
    depth = _cantor_depth(q)
    total, err = 0.0, 0.0
    for c in u.cantor:
        parts = []
        for d in (depth, max(depth - 2, 1)):
            x, w = c.nodes(d)
            vals = density(x, u.evaluate(x), np.broadcast_to(c.direction, (x.size, u.m)))
            parts.append(c.total * float(np.dot(w, vals)))
        total += parts[0]
        err += abs(parts[0] - parts[1])
    return total, err


def evaluate_F(f: Integrand, u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> FunctionalValue:
    """Absolutely continuous part plus recession-weighted singular parts.

    Jump atoms are evaluated at their exact location; quadrature nodes are
    nudged off the integrand's exceptional set.
    """
    def ac_density(x):
        return f(x, u.evaluate(x), u.gradient(x))

    ac, ac_err = integrate(u, ac_density, q, extra=f.exceptional_set, avoid=f.exceptional_set)
    jump = cantor = 0.0
    j_err = c_err = 0.0
    if u.jumps or u.cantor:
        rec = f.recession_at
        jump, j_err = _jump_sum(u, q, rec)
        cantor, c_err = _cantor_sum(u, q, rec)
    err = ac_err + j_err + c_err + 1e-14 * (abs(ac) + abs(jump) + abs(cantor))
    return FunctionalValue.from_parts(ac, jump, cantor, err)


def evaluate_F_graph(f: Integrand, u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> FunctionalValue:
    """Same functional computed through the graph map ``U(x) = (|x|, u(x))``.

    The perspective integrand is paired with the polar of ``DU``: on the
    absolutely continuous part the direction is ``(sgn x, u') / n`` with
    ``n = sqrt(1 + |u'|^2)`` and density ``n``; on singular parts the first
    slot of the direction is zero.  ``sgn 0`` is taken as +1, a choice on a
    Lebesgue-null set.
    """
    pf = perspective(f)

    def ac_density(x):
        grad = u.gradient(x)
        n = np.sqrt(1.0 + np.sum(grad * grad, axis=1))
        t = np.where(x >= 0.0, 1.0, -1.0) / n
        return pf(x, np.abs(x), u.evaluate(x), t, grad / n[:, None]) * n

    def singular_density(x, y, polar):
        return pf(x, np.abs(x), y, np.zeros(x.shape[0]), polar)

    ac, ac_err = integrate(u, ac_density, q, extra=f.exceptional_set, avoid=f.exceptional_set)
    jump, j_err = _jump_sum(u, q, singular_density)
    cantor, c_err = _cantor_sum(u, q, singular_density)
    err = ac_err + j_err + c_err + 1e-14 * (abs(ac) + abs(jump) + abs(cantor))
    return FunctionalValue.from_parts(ac, jump, cantor, err)


def area_functional(u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int sqrt(1 + |u'|^2) dx + |D^s u|(domain)``."""
    return evaluate_F(get_integrand("area"), u, q).total
