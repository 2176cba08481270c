"""BV functions on an interval with explicit derivative decomposition.

A :class:`BVFunction1D` is a finite mesh of C1 pieces plus optional Cantor
staircases.  Jumps are never stored by hand: they are read off the mesh as
the breakpoints where neighbouring pieces disagree.  All values are
``(N, m)`` arrays so vector-valued functions are handled uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .quadrature import (DEFAULT_SPEC, QuadratureFailure, QuadratureSpec,
                         adaptive_integrate, fixed_gauss, gauss_legendre01)

__all__ = [
    "JUMP_TOL", "Domain1D", "Piece", "JumpAtom", "CantorComponent", "BVFunction1D",
    "DerivativeDecomposition", "RadialBV", "SmoothMap", "UnsupportedCantorComposition",
    "QuadratureFailure", "decompose", "total_variation", "jump_average", "compose",
    "volpert_average", "lp_distance", "sup_distance", "radial_total_variation",
    "radial_lp_norm", "radial_lp_distance", "integrate", "piecewise_constant",
    "piecewise_linear", "from_callables", "cantor_function", "reflected_extension",
]

JUMP_TOL = 1e-12
# Cantor cells resolved explicitly when integrating against Lebesgue measure.
PARTITION_DEPTH = 12
# Cells used by the centre rule when integrating against a Cantor measure.
MEASURE_DEPTH = 16


class UnsupportedCantorComposition(ValueError):
    pass


def _rows(values, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full((n, 1), float(arr))
    if arr.ndim == 1:
        if arr.shape[0] == n:
            return arr[:, None]
        return np.broadcast_to(arr, (n, arr.shape[0])).copy()
    return arr.reshape(n, -1)


@dataclass(frozen=True)
class Domain1D:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"invalid interval ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True, eq=False)
class Piece:
    """A C1 branch on the closed interval ``[lo, hi]``.

    ``value`` and ``derivative`` take an array of abscissae and return either
    ``(N,)`` (scalar functions) or ``(N, m)`` arrays.  ``features`` lists
    interior points where the piece changes character; the integrators split
    there.
    """

    lo: float
    hi: float
    value: Callable
    derivative: Callable
    kind: str = "general"
    coeffs: tuple | None = None
    features: tuple = ()

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty piece [{self.lo}, {self.hi}]")
        if self.kind not in ("affine", "general"):
            raise ValueError(f"unknown piece kind {self.kind!r}")

    @classmethod
    def affine(cls, lo, hi, offset, slope):
        """The piece ``x -> offset + slope * x``."""
        offset = np.atleast_1d(np.asarray(offset, dtype=float))
        slope = np.atleast_1d(np.asarray(slope, dtype=float))
        offset, slope = (a.copy() for a in np.broadcast_arrays(offset, slope))
        value, derivative = _affine_funcs(offset, slope)
        return cls(float(lo), float(hi), value, derivative, "affine", (offset, slope))

    @classmethod
    def constant(cls, lo, hi, c):
        return cls.affine(lo, hi, c, np.zeros_like(np.atleast_1d(np.asarray(c, dtype=float))))

    def eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _rows(self.value(x), x.shape[0])

    def deriv(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _rows(self.derivative(x), x.shape[0])

    def derivative_mismatch(self, samples: int = 17, step: float = 1e-6) -> float:
        """Worst relative gap between ``derivative`` and a centred difference of ``value``."""
        width = self.hi - self.lo
        h = step * width
        x = np.linspace(self.lo + 2 * h, self.hi - 2 * h, samples)
        fd = (self.eval(x + h) - self.eval(x - h)) / (2 * h)
        exact = self.deriv(x)
        scale = np.maximum(1.0, np.abs(exact))
        return float(np.max(np.abs(fd - exact) / scale))


@dataclass(frozen=True)
class JumpAtom:
    location: float
    left: np.ndarray
    right: np.ndarray

    @property
    def size(self) -> np.ndarray:
        return self.right - self.left

    @property
    def mass(self) -> float:
        return float(np.linalg.norm(self.right - self.left))

    @property
    def polar(self) -> np.ndarray:
        d = self.right - self.left
        return d / np.linalg.norm(d)

    def average(self, theta) -> np.ndarray:
        """``theta * u^+ + (1 - theta) * u^-`` for scalar or array ``theta``."""
        theta = np.asarray(theta, dtype=float)
        return theta[..., None] * self.right + (1.0 - theta[..., None]) * self.left


@dataclass(frozen=True, eq=False)
class CantorComponent:
    """Self-similar staircase on ``[alpha, beta]``.

    Each construction step keeps two outer subintervals of relative length
    ``(1 - removed_fraction) / 2``.  The function rises by ``mass`` (a vector in
    R^m) from ``alpha`` to ``beta`` and is flat on every removed gap.
    """

    alpha: float
    beta: float
    removed_fraction: float
    mass: np.ndarray

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise ValueError("Cantor support must be a nondegenerate interval")
        if not 0.0 < self.removed_fraction < 1.0:
            raise ValueError("removed_fraction must lie in (0, 1)")
        v = np.atleast_1d(np.asarray(self.mass, dtype=float))
        if not np.linalg.norm(v) > 0:
            raise ValueError("Cantor mass must be nonzero")
        object.__setattr__(self, "mass", v)

    @property
    def ratio(self) -> float:
        return 0.5 * (1.0 - self.removed_fraction)

    @property
    def total(self) -> float:
        return float(np.linalg.norm(self.mass))

    @property
    def direction(self) -> np.ndarray:
        return self.mass / self.total

    def unit_staircase(self, x, depth: int = 24) -> np.ndarray:
        """Normalized staircase in [0, 1]; error at most ``2**-depth``."""
        t = np.clip((np.asarray(x, dtype=float) - self.alpha) / (self.beta - self.alpha), 0.0, 1.0)
        r = self.ratio
        acc = np.zeros_like(t)
        live = np.ones(t.shape, dtype=bool)
        s = 0.5
        for _ in range(depth):
            left = t <= r
            right = t >= 1.0 - r
            gap = live & ~(left | right)
            acc = np.where(gap, acc + s, acc)
            acc = np.where(live & right, acc + s, acc)
            live = live & ~gap
            t = np.where(left, t / r, np.where(right, (t - (1.0 - r)) / r, t))
            s *= 0.5
        return np.where(live, acc + 2.0 * s * t, acc)

    def staircase(self, x, depth: int = 24) -> np.ndarray:
        """Cumulative mass ``|D^c u|([alpha, x])``."""
        return self.total * self.unit_staircase(x, depth)

    def contribution(self, x, depth: int = 24) -> np.ndarray:
        return self.unit_staircase(x, depth)[:, None] * self.mass[None, :]

    def cells(self, depth: int) -> tuple[np.ndarray, float]:
        """Left endpoints (sorted) and common width of the ``2**depth`` cells."""
        r = self.ratio
        lefts = np.zeros(1)
        for i in range(depth):
            lefts = np.concatenate([lefts, lefts + (1.0 - r) * r ** i])
        lefts.sort()
        scale = self.beta - self.alpha
        return self.alpha + scale * lefts, scale * r ** depth

    def nodes(self, depth: int = MEASURE_DEPTH) -> tuple[np.ndarray, np.ndarray]:
        """Centre rule for the normalized Cantor measure (weights sum to 1).

        Exact for affine integrands; for C2 integrands the error is bounded
        by ``max|phi''| * (beta - alpha)**2 * ratio**(2 * depth) / 8``.
        """
        lefts, width = self.cells(depth)
        return lefts + 0.5 * width, np.full(lefts.size, 0.5 ** depth)


@dataclass(frozen=True, eq=False)
class DerivativeDecomposition:
    ac_density: Callable
    jumps: list
    cantor: list
    ac_total: float
    jump_total: float
    cantor_total: float
    error: float = 0.0

    @property
    def total(self) -> float:
        return self.ac_total + self.jump_total + self.cantor_total


class BVFunction1D:
    """A BV function on the open interval ``(breakpoints[0], breakpoints[-1])``.

    ``pieces[i]`` lives on ``[breakpoints[i], breakpoints[i+1]]``.  Pointwise
    values are the active piece plus every Cantor staircase; at a breakpoint
    the right-hand piece is used.
    """

    def __init__(self, breakpoints: Sequence[float], pieces: Sequence[Piece],
                 cantor: Sequence[CantorComponent] = (), cantor_depth: int = 24):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing with at least two entries")
        if len(pieces) != bp.size - 1:
            raise ValueError("need exactly one piece per mesh interval")
        for i, p in enumerate(pieces):
            if p.lo != bp[i] or p.hi != bp[i + 1]:
                raise ValueError(f"piece {i} does not match mesh interval [{bp[i]}, {bp[i+1]}]")
        self.domain = Domain1D(float(bp[0]), float(bp[-1]))
        self.breakpoints = bp
        self.breakpoints.setflags(write=False)
        self.pieces = tuple(pieces)
        self.cantor = tuple(cantor)
        self.cantor_depth = cantor_depth
        self.m = self.pieces[0].eval(np.array([bp[0]])).shape[1]
        for p in self.pieces:
            if p.eval(np.array([p.lo])).shape[1] != self.m:
                raise ValueError("pieces disagree on the target dimension")
        supports = sorted((c.alpha, c.beta) for c in self.cantor)
        for c in self.cantor:
            if c.mass.size != self.m:
                raise ValueError("Cantor mass vector has the wrong dimension")
            if not (self.domain.a <= c.alpha and c.beta <= self.domain.b):
                raise ValueError("Cantor support must lie in the closed domain")
        for (_, b1), (a2, _) in zip(supports, supports[1:]):
            if a2 < b1:
                raise ValueError("Cantor supports must be pairwise disjoint")

    def __repr__(self):
        return (f"BVFunction1D(domain=({self.domain.a}, {self.domain.b}), pieces={len(self.pieces)}, "
                f"jumps={len(self.jumps)}, cantor={len(self.cantor)})")

    @cached_property
    def jumps(self) -> tuple[JumpAtom, ...]:
        out = []
        for i in range(1, len(self.pieces)):
            x = self.breakpoints[i]
            xs = np.array([x])
            left = self.pieces[i - 1].eval(xs)[0]
            right = self.pieces[i].eval(xs)[0]
            if np.linalg.norm(right - left) > JUMP_TOL:
                stair = self._staircases(xs)[0]
                out.append(JumpAtom(float(x), left + stair, right + stair))
        return tuple(out)

    @cached_property
    def _jump_index(self) -> dict:
        return {j.location: j for j in self.jumps}

    def jump_at(self, x: float) -> JumpAtom | None:
        return self._jump_index.get(float(x))

    @property
    def is_affine(self) -> bool:
        return all(p.kind == "affine" for p in self.pieces)

    def piece_index(self, x) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def _staircases(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((x.shape[0], self.m))
        for c in self.cantor:
            out += c.contribution(x, self.cantor_depth)
        return out

    def _dispatch(self, x: np.ndarray, attr: str) -> np.ndarray:
        idx = self.piece_index(x)
        out = np.empty((x.shape[0], self.m))
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = getattr(self.pieces[i], attr)(x[mask])
        return out

    def evaluate(self, x) -> np.ndarray:
        """Values at an array of points, shape ``(N, m)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self._dispatch(x, "eval")
        if self.cantor:
            out += self._staircases(x)
        return out

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = self.evaluate(x)
        if self.m == 1:
            out = out[:, 0]
        return out[0] if scalar else out

    def gradient(self, x) -> np.ndarray:
        """Approximate derivative (density of the ac part), shape ``(N, m)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._dispatch(x, "deriv")

    def evaluate_on_piece(self, i: int, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.pieces[i].eval(x)
        if self.cantor:
            out = out + self._staircases(x)
        return out

    def traces(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        """One-sided limits ``(u^-(x), u^+(x))``."""
        xs = np.array([float(x)])
        i = int(self.piece_index(xs)[0])
        right = self.evaluate_on_piece(i, xs)[0]
        if i > 0 and x == self.breakpoints[i]:
            left = self.evaluate_on_piece(i - 1, xs)[0]
        else:
            left = right
        return left, right

    def precise(self, x) -> np.ndarray:
        """Precise representative: trace average at jumps, value elsewhere."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.evaluate(x)
        if self.jumps:
            locs = np.array([j.location for j in self.jumps])
            hit = np.isin(x, locs)
            for k in np.nonzero(hit)[0]:
                j = self.jump_at(x[k])
                out[k] = 0.5 * (j.left + j.right)
        return out

    def cut_points(self) -> np.ndarray:
        pts = [self.breakpoints]
        for p in self.pieces:
            if p.features:
                pts.append(np.asarray(p.features, dtype=float))
        for c in self.cantor:
            pts.append(np.array([c.alpha, c.beta]))
        pts = np.unique(np.concatenate(pts))
        return pts[(pts >= self.domain.a) & (pts <= self.domain.b)]


# ---------------------------------------------------------------------------
# constructors

def piecewise_constant(breakpoints, values) -> BVFunction1D:
    bp = list(map(float, breakpoints))
    return BVFunction1D(bp, [Piece.constant(bp[i], bp[i + 1], v) for i, v in enumerate(values)])


def piecewise_linear(breakpoints, left_values, right_values) -> BVFunction1D:
    """Affine pieces interpolating ``left_values[i]`` to ``right_values[i]``."""
    bp = list(map(float, breakpoints))
    pieces = []
    for i, (vl, vr) in enumerate(zip(left_values, right_values)):
        lo, hi = bp[i], bp[i + 1]
        vl = np.atleast_1d(np.asarray(vl, dtype=float))
        vr = np.atleast_1d(np.asarray(vr, dtype=float))
        slope = (vr - vl) / (hi - lo)
        pieces.append(Piece.affine(lo, hi, vl - slope * lo, slope))
    return BVFunction1D(bp, pieces)


def from_callables(breakpoints, funcs, cantor=()) -> BVFunction1D:
    """Build from ``(value, derivative)`` pairs, one per mesh interval."""
    bp = list(map(float, breakpoints))
    pieces = [Piece(bp[i], bp[i + 1], f, df) for i, (f, df) in enumerate(funcs)]
    return BVFunction1D(bp, pieces, cantor)


def cantor_function(a=0.0, b=1.0, alpha=None, beta=None, removed_fraction=1 / 3,
                    mass=1.0, base=0.0) -> BVFunction1D:
    """Cantor staircase on ``(a, b)`` supported on ``[alpha, beta]`` (default: all of it)."""
    alpha = a if alpha is None else alpha
    beta = b if beta is None else beta
    comp = CantorComponent(alpha, beta, removed_fraction, np.atleast_1d(mass))
    return BVFunction1D([a, b], [Piece.constant(a, b, np.broadcast_to(base, comp.mass.shape))], [comp])


# ---------------------------------------------------------------------------
# integration over BV structure

def _cantor_cells(c: CantorComponent, depth: int) -> np.ndarray:
    lefts, width = c.cells(depth)
    return np.stack([lefts, lefts + width], axis=1)


def partition(funcs: Sequence[BVFunction1D], extra=(), cantor: bool = True,
              depth: int = PARTITION_DEPTH) -> tuple[np.ndarray, np.ndarray]:
    """Split the common domain into smooth intervals and residual Cantor cells.

    Smooth intervals contain no breakpoint, feature or Cantor point of any of
    ``funcs`` in their interior.  Residual cells are the depth-``depth``
    construction cells of every Cantor component; integrands there are
    continuous but rough, so callers apply a fixed rule.
    """
    dom = funcs[0].domain
    pts = [f.cut_points() for f in funcs]
    pts.append(np.asarray(extra, dtype=float).ravel())
    cells = []
    if cantor:
        for f in funcs:
            for c in f.cantor:
                cells.append(_cantor_cells(c, depth))
    if cells:
        cells = np.concatenate(cells)
        pts.append(cells.ravel())
    else:
        cells = np.zeros((0, 2))
    pts = np.unique(np.concatenate(pts + [np.array([dom.a, dom.b])]))
    pts = pts[(pts >= dom.a) & (pts <= dom.b)]
    iv = np.stack([pts[:-1], pts[1:]], axis=1)
    if cells.shape[0] == 0:
        return iv, cells
    mids = 0.5 * (iv[:, 0] + iv[:, 1])
    order = np.argsort(cells[:, 0])
    cl = cells[order]
    k = np.searchsorted(cl[:, 0], mids, side="right") - 1
    inside = (k >= 0) & (mids < cl[np.clip(k, 0, None), 1])
    return iv[~inside], iv[inside]


def integrate(funcs, g, q: QuadratureSpec = DEFAULT_SPEC, extra=(), avoid=(),
              cantor: bool = True, cell_order: int = 8):
    """Integrate ``g(x)`` over the domain shared by ``funcs``.

    Returns ``(value, error_estimate)``.  Smooth intervals use the adaptive
    Gauss-Kronrod rule, residual Cantor cells a fixed Gauss rule whose error
    is estimated against half the order.
    """
    if isinstance(funcs, BVFunction1D):
        funcs = [funcs]
    smooth, cells = partition(funcs, extra=extra, cantor=cantor)
    value, err = adaptive_integrate(g, smooth, tol=q.ac_tolerance,
                                    budget=q.subdivision_budget, avoid=avoid)
    if cells.shape[0]:
        hi = fixed_gauss(g, cells, order=cell_order, avoid=avoid)
        lo = fixed_gauss(g, cells, order=cell_order // 2, avoid=avoid)
        value = value + hi
        err += float(np.max(np.abs(np.asarray(hi) - np.asarray(lo))))
    return value, err


# ---------------------------------------------------------------------------
# derivative decomposition

def decompose(u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> DerivativeDecomposition:
    """Split ``|Du|`` into its absolutely continuous, jump and Cantor masses."""
    ac = 0.0
    err = 0.0
    general = []
    for p in u.pieces:
        if p.kind == "affine":
            ac += float(np.linalg.norm(p.coeffs[1])) * (p.hi - p.lo)
        else:
            general.append(p)
    if general:
        def density(x):
            return np.linalg.norm(u.gradient(x), axis=1)

        bounds = []
        for p in general:
            pts = np.unique(np.concatenate([[p.lo, p.hi], np.asarray(p.features, dtype=float)]))
            pts = pts[(pts >= p.lo) & (pts <= p.hi)]
            bounds.append(np.stack([pts[:-1], pts[1:]], axis=1))
        val, err = adaptive_integrate(density, np.concatenate(bounds), tol=q.ac_tolerance,
                                      budget=q.subdivision_budget)
        ac += val
    jumps = [(j.location, j.mass) for j in u.jumps]
    cantor = [(c, c.total) for c in u.cantor]
    return DerivativeDecomposition(
        ac_density=u.gradient,
        jumps=jumps,
        cantor=cantor,
        ac_total=ac,
        jump_total=float(sum(mass for _, mass in jumps)),
        cantor_total=float(sum(mass for _, mass in cantor)),
        error=err,
    )


def total_variation(u: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    return decompose(u, q).total


def jump_average(u: BVFunction1D, x: float, theta) -> np.ndarray:
    """``theta u^+ + (1 - theta) u^-`` at a jump, the precise value elsewhere.

    The left trace plays the role of ``u^-``.  Guarantees are stated for
    integrals over theta, which do not depend on that choice.
    """
    j = u.jump_at(x)
    if j is not None:
        return j.average(theta)
    value = u.precise(np.array([float(x)]))[0]
    theta = np.asarray(theta, dtype=float)
    return np.broadcast_to(value, theta.shape + value.shape).copy()


# ---------------------------------------------------------------------------
# chain rule

@dataclass(frozen=True)
class SmoothMap:
    """A C1 Lipschitz map R^m -> R^n.

    ``func`` maps ``(N, m)`` to ``(N, n)``; ``grad`` maps ``(N, m)`` to
    ``(N, n, m)``.
    """

    func: Callable
    grad: Callable

    @classmethod
    def scalar(cls, f, df):
        """Wrap an elementwise scalar function (m = n = 1)."""
        return cls(lambda y: f(y[:, :1]), lambda y: df(y[:, :1])[:, :, None])

    @classmethod
    def linear(cls, matrix):
        mat = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(lambda y: y @ mat.T, lambda y: np.broadcast_to(mat, (y.shape[0],) + mat.shape))


def compose(g: SmoothMap, u: BVFunction1D) -> BVFunction1D:
    """The function ``g o u`` with pieces ``g(P)`` and derivatives ``Dg(P) P'``."""
    if u.cantor:
        raise UnsupportedCantorComposition(
            "composition with a Cantor part leaves the constant-direction representation")
    pieces = []
    for p in u.pieces:
        def value(x, p=p):
            return g.func(p.eval(x))

        def derivative(x, p=p):
            return np.einsum("inm,im->in", g.grad(p.eval(x)), p.deriv(x))

        pieces.append(Piece(p.lo, p.hi, value, derivative, "general", None, p.features))
    return BVFunction1D(u.breakpoints, pieces)


def volpert_average(g: SmoothMap, u: BVFunction1D, x: float, order: int = 32) -> np.ndarray:
    """Average of ``Dg`` along the jump segment at ``x`` (``Dg(u(x))`` elsewhere)."""
    j = u.jump_at(x)
    if j is None:
        y = u.precise(np.array([float(x)]))
        return np.asarray(g.grad(y), dtype=float)[0]
    nodes, weights = gauss_legendre01(order)
    grads = np.asarray(g.grad(j.average(nodes)), dtype=float)
    return np.einsum("k,knm->nm", weights, grads)


# ---------------------------------------------------------------------------
# distances

def _check_same_domain(u: BVFunction1D, v: BVFunction1D):
    if u.domain != v.domain:
        raise ValueError(f"domains differ: {u.domain} vs {v.domain}")
    if u.m != v.m:
        raise ValueError("target dimensions differ")


def lp_distance(u: BVFunction1D, v: BVFunction1D, p: float = 1.0,
                q: QuadratureSpec = DEFAULT_SPEC, weight: Callable | None = None) -> float:
    """``(int |u - v|^p w dx)^(1/p)``; ``p = inf`` gives the sup distance."""
    _check_same_domain(u, v)
    if math.isinf(p):
        return sup_distance(u, v)
    if p < 1:
        raise ValueError("p must be at least 1")

    def g(x):
        d = np.linalg.norm(u.evaluate(x) - v.evaluate(x), axis=1) ** p
        return d * weight(x) if weight is not None else d

    val, _ = integrate([u, v], g, q)
    return float(max(val, 0.0) ** (1.0 / p))


def sup_distance(u: BVFunction1D, v: BVFunction1D, grid: int = 33) -> float:
    """Supremum of ``|u - v|`` over the domain, one-sided limits included.

    Each mesh cell of the common refinement is treated as a closed interval on
    which the two active pieces extend continuously, so a sup that is only
    approached at a jump is still attained.
    """
    _check_same_domain(u, v)
    pts = np.unique(np.concatenate([u.cut_points(), v.cut_points()]))
    best = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = np.array([0.5 * (lo + hi)])
        iu, iv = int(u.piece_index(mid)[0]), int(v.piece_index(mid)[0])

        def diff(x, iu=iu, iv=iv):
            x = np.atleast_1d(x)
            return np.linalg.norm(u.evaluate_on_piece(iu, x) - v.evaluate_on_piece(iv, x), axis=1)

        exact = (u.pieces[iu].kind == "affine" and v.pieces[iv].kind == "affine"
                 and not u.cantor and not v.cantor)
        xs = np.array([lo, hi]) if exact else np.linspace(lo, hi, grid)
        vals = diff(xs)
        k = int(np.argmax(vals))
        local = float(vals[k])
        if not exact:
            a = xs[max(k - 1, 0)]
            b = xs[min(k + 1, xs.size - 1)]
            if b > a:
                res = minimize_scalar(lambda t: -diff(t)[0], bounds=(a, b), method="bounded",
                                      options={"xatol": 1e-12 * (1 + abs(b))})
                local = max(local, -float(res.fun))
        best = max(best, local)
    return best


# ---------------------------------------------------------------------------
# reflection

def _reflect_piece(p: Piece, pivot: float, shift: np.ndarray) -> Piece:
    lo, hi = 2 * pivot - p.hi, 2 * pivot - p.lo
    feats = tuple(2 * pivot - f for f in p.features)
    if p.kind == "affine":
        offset, slope = p.coeffs
        return Piece(lo, hi, *_affine_funcs(offset + slope * 2 * pivot + shift, -slope),
                     "affine", (offset + slope * 2 * pivot + shift, -slope), feats)

    def value(x):
        return p.eval(2 * pivot - np.asarray(x, dtype=float)) + shift[None, :]

    def derivative(x):
        return -p.deriv(2 * pivot - np.asarray(x, dtype=float))

    return Piece(lo, hi, value, derivative, "general", None, feats)


def _affine_funcs(offset, slope):
    offset = np.asarray(offset, dtype=float)
    slope = np.asarray(slope, dtype=float)

    def value(x):
        return offset[None, :] + slope[None, :] * np.asarray(x, dtype=float)[:, None]

    def derivative(x):
        return np.broadcast_to(slope, (np.shape(x)[0], slope.size))

    return value, derivative


def _shift_piece(p: Piece, shift: np.ndarray) -> Piece:
    if not np.any(shift):
        return p
    if p.kind == "affine":
        offset, slope = p.coeffs
        return Piece(p.lo, p.hi, *_affine_funcs(offset + shift, slope), "affine",
                     (offset + shift, slope), p.features)

    def value(x):
        return p.eval(x) + shift[None, :]

    return Piece(p.lo, p.hi, value, p.derivative, "general", None, p.features)


def reflected_extension(u: BVFunction1D, left: bool = True, right: bool = True) -> BVFunction1D:
    """Even reflection of ``u`` across one or both domain endpoints.

    The result lives on up to three copies of the domain.  Reflection never
    creates a jump at the pivot.  Reflected staircases run downhill, which is
    represented as a negative-mass component plus a constant shift.
    """
    a, b = u.domain.a, u.domain.b
    shift = np.zeros(u.m)
    cantor = list(u.cantor)
    if left:
        for c in u.cantor:
            shift = shift + c.mass
            cantor.append(CantorComponent(2 * a - c.beta, 2 * a - c.alpha, c.removed_fraction, -c.mass))
    if right:
        for c in u.cantor:
            cantor.append(CantorComponent(2 * b - c.beta, 2 * b - c.alpha, c.removed_fraction, -c.mass))
    pieces = [_shift_piece(p, shift) for p in u.pieces]
    bps = list(u.breakpoints)
    if left:
        refl = [_reflect_piece(p, a, shift) for p in reversed(u.pieces)]
        pieces = refl + pieces
        bps = [2 * a - x for x in reversed(u.breakpoints[1:])] + bps
    if right:
        refl = [_reflect_piece(p, b, shift) for p in reversed(u.pieces)]
        pieces = pieces + refl
        bps = bps + [2 * b - x for x in reversed(u.breakpoints[:-1])]
    return BVFunction1D(bps, pieces, cantor, u.cantor_depth)


# ---------------------------------------------------------------------------
# radial profiles

@dataclass(frozen=True, eq=False)
class RadialBV:
    """``x -> profile(|x|)`` on the ball of radius ``R`` in R^dim.

    ``dim = 1`` is allowed as the degenerate case where the sphere is two
    points and the function is the even extension of the profile.
    """

    profile: BVFunction1D
    dim: int

    def __post_init__(self):
        if self.profile.domain.a != 0.0:
            raise ValueError("radial profile must be defined on (0, R)")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def radius(self) -> float:
        return self.profile.domain.b

    @property
    def sphere_area(self) -> float:
        d = self.dim
        return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)

    def weight(self, r) -> np.ndarray:
        return np.asarray(r, dtype=float) ** (self.dim - 1)

    def slice(self) -> BVFunction1D:
        """The function along a diameter, ``t -> profile(|t|)`` on ``(-R, R)``."""
        return reflected_extension(self.profile, left=True, right=False)


def radial_total_variation(ru: RadialBV, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    g = ru.profile
    k = ru.dim - 1
    ac = 0.0
    affine_done = []
    for p in g.pieces:
        if p.kind == "affine" and k == 0:
            ac += float(np.linalg.norm(p.coeffs[1])) * (p.hi - p.lo)
            affine_done.append(p)
        elif p.kind == "affine":
            ac += float(np.linalg.norm(p.coeffs[1])) * (p.hi ** (k + 1) - p.lo ** (k + 1)) / (k + 1)
            affine_done.append(p)
    rest = [p for p in g.pieces if p not in affine_done]
    if rest:
        iv = []
        for p in rest:
            pts = np.unique(np.concatenate([[p.lo, p.hi], np.asarray(p.features, dtype=float)]))
            pts = pts[(pts >= p.lo) & (pts <= p.hi)]
            iv.append(np.stack([pts[:-1], pts[1:]], axis=1))
        val, _ = adaptive_integrate(lambda r: np.linalg.norm(g.gradient(r), axis=1) * ru.weight(r),
                                    np.concatenate(iv), tol=q.ac_tolerance, budget=q.subdivision_budget)
        ac += val
    jumps = sum(j.location ** k * j.mass for j in g.jumps)
    cantor = 0.0
    for c in g.cantor:
        nodes, w = c.nodes(min(MEASURE_DEPTH, q.cantor_depth))
        cantor += c.total * float(np.sum(w * ru.weight(nodes)))
    return ru.sphere_area * (ac + jumps + cantor)


def radial_lp_norm(ru: RadialBV, p: float = 2.0, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    g = ru.profile
    if math.isinf(p):
        zero = BVFunction1D(g.breakpoints[[0, -1]], [Piece.constant(g.domain.a, g.domain.b, np.zeros(g.m))])
        return sup_distance(g, zero)
    val, _ = integrate(g, lambda r: np.linalg.norm(g.evaluate(r), axis=1) ** p * ru.weight(r), q)
    return float((ru.sphere_area * max(val, 0.0)) ** (1.0 / p))


def radial_lp_distance(ru: RadialBV, rv: RadialBV, p: float = 2.0,
                       q: QuadratureSpec = DEFAULT_SPEC) -> float:
    if ru.dim != rv.dim:
        raise ValueError("radial functions live in different dimensions")
    if math.isinf(p):
        return sup_distance(ru.profile, rv.profile)
    d = lp_distance(ru.profile, rv.profile, p, q, weight=ru.weight)
    return float(ru.sphere_area ** (1.0 / p) * d)
