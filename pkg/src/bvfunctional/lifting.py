"""Lifting measures on domain x R^m built from a BV function.

The lifting spreads ``|Du|`` over the graph: ac mass sits on ``(x, u(x))``,
jump mass is spread uniformly in the jump parameter along the segment
``[u^-, u^+]``, Cantor mass sits on ``(x, u(x))``.  The measure is kept as a
list of components and every pairing integrates each kind by its own rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .bvfun import (MEASURE_DEPTH, BVFunction1D, CantorComponent, JumpAtom, decompose,
                    integrate)
from .functional import theta_integral
from .integrand import Integrand, check_homogeneous
from .quadrature import DEFAULT_SPEC, QuadratureSpec, adaptive_integrate, gauss_legendre01

__all__ = ["LiftingComponent", "LiftingMeasure", "TestFunction", "SupportViolation",
           "build_lifting", "total_mass", "Q", "functional_via_lifting", "pushforward_pair",
           "tail_gradient_mass", "lifting_convergence_report", "random_bumps"]


class SupportViolation(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LiftingComponent:
    kind: str
    mass: float
    lo: float
    hi: float
    jump: JumpAtom | None = None
    cantor: CantorComponent | None = None


@dataclass(frozen=True, eq=False)
class LiftingMeasure:
    source: BVFunction1D
    components: tuple
    spec: QuadratureSpec = DEFAULT_SPEC

    @property
    def m(self) -> int:
        return self.source.m

    def integrate(self, h: Callable, y_breaks=(), x_breaks=()) -> np.ndarray:
        """``int h(x, y, polar) d|mu|(x, y)`` for ``h`` returning ``(N,)`` or ``(N, k)``.

        ``y_breaks`` lists values where ``h`` may lose smoothness in any
        y-coordinate; jump segments are split where they cross them.
        ``x_breaks`` are extra mesh points for the absolutely continuous part.
        """
        u, q = self.source, self.spec
        out = 0.0
        if any(c.kind == "ac" for c in self.components):
            def dens(x):
                g = u.gradient(x)
                n = np.linalg.norm(g, axis=1)
                safe = np.where(n > 0, n, 1.0)
                val = np.asarray(h(x, u.evaluate(x), g / safe[:, None]), dtype=float)
                return val * (n if val.ndim == 1 else n[:, None])

            out = out + integrate(u, dens, q, extra=x_breaks)[0]
        nodes, weights = gauss_legendre01(q.theta_order)
        depth = min(MEASURE_DEPTH, q.cantor_depth)
        for c in self.components:
            if c.kind == "jump":
                th, tw = _theta_rule(c.jump, nodes, weights, y_breaks)
                xs = np.full(th.size, c.jump.location)
                vals = np.asarray(h(xs, c.jump.average(th), np.broadcast_to(c.jump.polar, (th.size, self.m))),
                                  dtype=float)
                if vals.ndim == 1:
                    out = out + c.mass * theta_integral(vals, tw)
                else:
                    out = out + c.mass * (tw @ vals)
            elif c.kind == "cantor":
                x, w = c.cantor.nodes(depth)
                vals = np.asarray(h(x, u.evaluate(x), np.broadcast_to(c.cantor.direction, (x.size, self.m))),
                                  dtype=float)
                out = out + c.mass * (w @ vals)
        return out

    def pair(self, phi: Callable, y_breaks=(), x_breaks=()) -> np.ndarray:
        """Vector pairing ``int phi(x, y) d mu`` (an element of R^m)."""
        return np.asarray(self.integrate(lambda x, y, p: phi(x, y)[:, None] * p, y_breaks, x_breaks),
                          dtype=float)


def _theta_rule(j: JumpAtom, nodes, weights, y_breaks):
    """Composite Gauss rule on [0, 1] split where ``u^theta`` crosses a break value."""
    cuts = [0.0, 1.0]
    d = j.right - j.left
    for yb in np.ravel(np.asarray(y_breaks, dtype=float)):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (yb - j.left) / d
        cuts.extend(t[np.isfinite(t) & (t > 0) & (t < 1)])
    cuts = np.unique(cuts)
    if cuts.size == 2:
        return nodes, weights
    w = np.diff(cuts)
    th = (cuts[:-1, None] + w[:, None] * nodes[None, :]).ravel()
    tw = (w[:, None] * weights[None, :]).ravel()
    return th, tw


def build_lifting(u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> LiftingMeasure:
    comps = []
    dec = decompose(u, q)
    if dec.ac_total > 0:
        comps.append(LiftingComponent("ac", dec.ac_total, u.domain.a, u.domain.b))
    for j in u.jumps:
        comps.append(LiftingComponent("jump", j.mass, j.location, j.location, jump=j))
    for c in u.cantor:
        comps.append(LiftingComponent("cantor", c.total, c.alpha, c.beta, cantor=c))
    return LiftingMeasure(u, tuple(comps), q)


def total_mass(mu: LiftingMeasure) -> float:
    return float(sum(c.mass for c in mu.components))


# ---------------------------------------------------------------------------
# test functions

def _bump(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 4, 0.0)


def _dbump(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, -8.0 * t * (1.0 - t * t) ** 3, 0.0)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A C1 function on domain x R^m with compact support in a box.

    ``support`` is ``(x_lo, x_hi, y_lo, y_hi)`` with ``y_lo``/``y_hi`` arrays
    of length m.
    """

    __test__ = False

    func: Callable
    grad_x: Callable
    grad_y: Callable
    support: tuple

    def __call__(self, x, y):
        return self.func(x, y)

    @classmethod
    def bump(cls, x0: float, rx: float, y0, ry: float, amplitude: float = 1.0):
        """``amplitude * b((x - x0)/rx) * prod_i b((y_i - y0_i)/ry)`` with ``b(t) = (1 - t^2)^4``."""
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))

        def parts(x, y):
            tx = (x - x0) / rx
            ty = (y - y0[None, :]) / ry
            return tx, ty, _bump(tx), _bump(ty)

        def func(x, y):
            _, _, bx, by = parts(x, y)
            return amplitude * bx * np.prod(by, axis=1)

        def grad_x(x, y):
            tx, _, _, by = parts(x, y)
            return amplitude * _dbump(tx) / rx * np.prod(by, axis=1)

        def grad_y(x, y):
            _, ty, bx, by = parts(x, y)
            out = np.empty_like(ty)
            for i in range(ty.shape[1]):
                others = np.prod(np.delete(by, i, axis=1), axis=1)
                out[:, i] = _dbump(ty[:, i]) / ry * others
            return amplitude * bx[:, None] * out

        return cls(func, grad_x, grad_y, (x0 - rx, x0 + rx, y0 - ry, y0 + ry))

    @classmethod
    def separable(cls, psi, dpsi, chi, dchi, support):
        """``psi(x) * chi(y)`` for scalar ``y``; ``support`` as for the class."""
        return cls(lambda x, y: psi(x) * chi(y[:, 0]),
                   lambda x, y: dpsi(x) * chi(y[:, 0]),
                   lambda x, y: (psi(x) * dchi(y[:, 0]))[:, None],
                   support)


def random_bumps(rng: np.random.Generator, u: BVFunction1D, count: int = 20) -> list[TestFunction]:
    """Bumps with x-support inside the domain and y-centres near the range of ``u``."""
    a, b = u.domain.a, u.domain.b
    xs = np.linspace(a, b, 257)[1:-1]
    vals = u.evaluate(xs)
    lo, hi = vals.min(axis=0), vals.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    out = []
    for _ in range(count):
        rx = rng.uniform(0.05, 0.45) * (b - a)
        x0 = rng.uniform(a + rx * 1.01, b - rx * 1.01)
        y0 = rng.uniform(lo - 0.2 * span, hi + 0.2 * span)
        ry = float(rng.uniform(0.3, 1.0) * np.max(span))
        out.append(TestFunction.bump(x0, rx, y0, ry, amplitude=rng.uniform(0.5, 2.0)))
    return out


# ---------------------------------------------------------------------------
# identities

def Q(phi: TestFunction, u: BVFunction1D, mu: LiftingMeasure) -> float:
    """``int d_x phi(x, u(x)) dx + int grad_y phi . d mu``; zero for the lifting of ``u``."""
    x_lo, x_hi = phi.support[0], phi.support[1]
    if not (u.domain.a < x_lo and x_hi < u.domain.b):
        raise SupportViolation("test function support must stay away from the boundary")
    q = mu.spec
    first, _ = integrate(u, lambda x: phi.grad_x(x, u.evaluate(x)), q, extra=(x_lo, x_hi))
    second = mu.integrate(lambda x, y, p: np.sum(phi.grad_y(x, y) * p, axis=1),
                          y_breaks=np.concatenate([np.ravel(phi.support[2]), np.ravel(phi.support[3])]),
                          x_breaks=(x_lo, x_hi))
    return float(first + second)


def functional_via_lifting(f: Integrand, u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``int f(x, y, polar) d|mu[u]|`` for positively 1-homogeneous ``f``."""
    check_homogeneous(f)
    mu = build_lifting(u, q)
    return float(mu.integrate(lambda x, y, p: f(x, y, p)))


def pushforward_pair(mu: LiftingMeasure, h: Callable) -> np.ndarray:
    """``int h(x) d mu(x, y)``, which equals ``int h dDu``."""
    return mu.pair(lambda x, y: np.asarray(h(x), dtype=float))


def _segment_fraction_outside(j: JumpAtom, k: float) -> float:
    """Lebesgue measure of ``{theta in [0, 1] : |u^theta| >= k}``."""
    d = j.right - j.left
    a = float(d @ d)
    b = 2.0 * float(j.left @ d)
    c = float(j.left @ j.left) - k * k
    disc = b * b - 4 * a * c
    if disc <= 0:
        return 1.0
    s = np.sqrt(disc)
    r1, r2 = (-b - s) / (2 * a), (-b + s) / (2 * a)
    inside = max(0.0, min(r2, 1.0) - max(r1, 0.0))
    return 1.0 - inside


def tail_gradient_mass(u: BVFunction1D, k: float, q: QuadratureSpec = DEFAULT_SPEC,
                       samples: int = 257) -> float:
    """``|mu[u]|({|y| >= k})``.

    The ac part integrates ``|u'|`` over ``{|u| >= k}``, whose boundary is
    located per piece by sign changes on a sample grid refined with Brent's
    method; jumps use the exact parameter fraction; Cantor parts use the
    centre rule.
    """
    total = 0.0
    intervals = []
    for i, p in enumerate(u.pieces):
        pts = np.unique(np.concatenate([[p.lo, p.hi], np.asarray(p.features, dtype=float)]))
        pts = pts[(pts >= p.lo) & (pts <= p.hi)]
        for lo, hi in zip(pts[:-1], pts[1:]):
            def g(x, i=i):
                return np.linalg.norm(u.evaluate_on_piece(i, np.atleast_1d(x)), axis=1) - k

            xs = np.linspace(lo, hi, samples)
            vals = g(xs)
            cuts = [lo]
            outside = vals >= 0
            for s in np.nonzero(outside[:-1] != outside[1:])[0]:
                if vals[s] == 0.0:
                    cuts.append(xs[s])
                else:
                    cuts.append(brentq(lambda t: g(t)[0], xs[s], xs[s + 1], xtol=1e-14))
            cuts.append(hi)
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                if c1 > c0 and g(0.5 * (c0 + c1))[0] >= 0:
                    intervals.append((c0, c1))
    if intervals:
        val, _ = adaptive_integrate(lambda x: np.linalg.norm(u.gradient(x), axis=1),
                                    np.array(intervals), tol=q.ac_tolerance,
                                    budget=q.subdivision_budget)
        total += val
    for j in u.jumps:
        total += j.mass * _segment_fraction_outside(j, k)
    depth = min(MEASURE_DEPTH, q.cantor_depth)
    for c in u.cantor:
        x, w = c.nodes(depth)
        outside = np.linalg.norm(u.evaluate(x), axis=1) >= k
        total += c.total * float(np.sum(w[outside]))
    return float(total)


def lifting_convergence_report(members: Iterable, limit: BVFunction1D, dictionary,
                               q: QuadratureSpec = DEFAULT_SPEC) -> list[dict]:
    """Per index: mass gap and worst pairing gap against the limit lifting.

    ``members`` yields ``(j, u_j)`` pairs; ``dictionary`` is a list of
    :class:`TestFunction`.  Both columns vanish along a sequence whose
    liftings converge strictly.
    """
    mu = build_lifting(limit, q)
    ref_mass = total_mass(mu)
    breaks = [np.concatenate([np.ravel(phi.support[2]), np.ravel(phi.support[3])]) for phi in dictionary]
    xb = [(phi.support[0], phi.support[1]) for phi in dictionary]
    ref_pairs = [mu.pair(phi.func, b, x) for phi, b, x in zip(dictionary, breaks, xb)]
    rows = []
    for j, uj in members:
        muj = build_lifting(uj, q)
        gaps = [float(np.linalg.norm(muj.pair(phi.func, b, x) - r))
                for phi, b, x, r in zip(dictionary, breaks, xb, ref_pairs)]
        rows.append({"j": j, "mass_gap": abs(total_mass(muj) - ref_mass),
                     "pairing_gap": max(gaps) if gaps else 0.0})
    return rows
