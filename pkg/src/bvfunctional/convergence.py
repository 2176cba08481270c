"""Strict and area-strict metrics, sequence families and the experiment runner."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bvfun import (MEASURE_DEPTH, BVFunction1D, Piece, RadialBV, cantor_function, from_callables,
                    lp_distance, piecewise_constant, piecewise_linear, radial_lp_distance,
                    radial_total_variation, reflected_extension, sup_distance, total_variation)
from .functional import area_functional, evaluate_F, evaluate_F_graph
from .integrand import parse_integrand
from .lifting import build_lifting, lifting_convergence_report, tail_gradient_mass, total_mass
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gauss_legendre01

__all__ = ["strict_distance", "area_strict_distance", "mollify", "SequenceFamily", "make_family",
           "FAMILY_NAMES", "LIMITS", "make_limit", "ConvergenceReport", "run_experiment",
           "embedding_experiment", "radial_strict_distance", "triweight", "triweight_cdf"]


def strict_distance(u: BVFunction1D, v: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``||u - v||_1 + | |Du|(domain) - |Dv|(domain) |``."""
    return lp_distance(u, v, 1.0, q) + abs(total_variation(u, q) - total_variation(v, q))


def area_strict_distance(u: BVFunction1D, v: BVFunction1D, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``||u - v||_1`` plus the gap between the area functionals."""
    return lp_distance(u, v, 1.0, q) + abs(area_functional(u, q) - area_functional(v, q))


def radial_strict_distance(ru: RadialBV, rv: RadialBV, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    return (radial_lp_distance(ru, rv, 1.0, q)
            + abs(radial_total_variation(ru, q) - radial_total_variation(rv, q)))


# ---------------------------------------------------------------------------
# mollification

def triweight(t):
    """Kernel ``35/32 (1 - t^2)^3`` on ``[-1, 1]``; unit mass, C2."""
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, 35.0 / 32.0 * (1.0 - t * t) ** 3, 0.0)


def triweight_cdf(t):
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    t2 = t * t
    return 35.0 / 32.0 * t * (1.0 - t2 + 0.6 * t2 * t2 - t2 * t2 * t2 / 7.0) + 0.5


def _atom_depth(ext: BVFunction1D, eps: float) -> int:
    depth = 1
    for c in ext.cantor:
        width = c.beta - c.alpha
        need = math.log(eps / 64.0 / width) / math.log(c.ratio)
        depth = max(depth, math.ceil(need))
    return int(min(depth, ext.cantor_depth, MEASURE_DEPTH))


def mollify(u: BVFunction1D, eps: float, depth: int | None = None,
            order: int = 32) -> BVFunction1D:
    """Convolution of the even reflection of ``u`` with a triweight kernel of radius ``eps``.

    The result is a single C1 piece on the original domain.  Jumps enter the
    derivative as kernel-weighted atoms; Cantor parts are replaced by their
    depth-``depth`` cell-centre atoms and convolved through the cumulative
    kernel, so values stay exact for the atomic approximation.

    Parameters
    ----------
    eps : float
        Kernel radius, required to satisfy ``eps < (b - a) / 4``.
    depth : int, optional
        Cantor atom depth; by default the smallest depth whose cells are
        narrower than ``eps / 64``.
    """
    a, b = u.domain.a, u.domain.b
    if not 0.0 < eps < (b - a) / 4.0:
        raise ValueError(f"eps must lie in (0, {(b - a) / 4}); got {eps}")
    ext = reflected_extension(u)
    m = u.m
    nodes, weights = gauss_legendre01(order)
    pieces = ext.pieces
    jl = np.array([j.location for j in ext.jumps])
    js = np.array([j.size for j in ext.jumps]).reshape(-1, m)
    if ext.cantor:
        d = depth if depth is not None else _atom_depth(ext, eps)
        locs, masses = [], []
        for c in ext.cantor:
            x, w = c.nodes(d)
            locs.append(x)
            masses.append(w[:, None] * c.mass[None, :])
        locs = np.concatenate(locs)
        masses = np.concatenate(masses)
        order_ = np.argsort(locs, kind="stable")
        locs, masses = locs[order_], masses[order_]
        cum = np.vstack([np.zeros((1, m)), np.cumsum(masses, axis=0)])
    else:
        locs = np.zeros(0)

    def atoms(x, kernel, full):
        lo = np.searchsorted(locs, x - eps, side="left")
        hi = np.searchsorted(locs, x + eps, side="right")
        out = cum[lo] if full else np.zeros((x.size, m))
        width = int(np.max(hi - lo)) if x.size else 0
        for start in range(0, width, 256):
            idx = lo[:, None] + start + np.arange(min(256, width - start))[None, :]
            ok = idx < hi[:, None]
            idx = np.where(ok, idx, 0)
            k = np.where(ok, kernel((x[:, None] - locs[idx]) / eps), 0.0)
            out = out + np.einsum("ij,ijk->ik", k, masses[idx])
        return out

    def convolve(x, attr):
        out = np.zeros((x.size, m))
        lo, hi = x - eps, x + eps
        for p in pieces:
            left = np.maximum(lo, p.lo)
            right = np.minimum(hi, p.hi)
            act = right > left
            if not act.any():
                continue
            xa, la, w = x[act], left[act], (right - left)[act]
            s = la[:, None] + w[:, None] * nodes[None, :]
            vals = getattr(p, attr)(s.ravel()).reshape(xa.size, order, m)
            ker = triweight((xa[:, None] - s) / eps) / eps * weights[None, :] * w[:, None]
            out[act] += np.einsum("ij,ijk->ik", ker, vals)
        return out

    def value(x):
        x = np.asarray(x, dtype=float)
        out = convolve(x, "eval")
        if locs.size:
            out += atoms(x, triweight_cdf, True)
        return out

    def derivative(x):
        x = np.asarray(x, dtype=float)
        out = convolve(x, "deriv")
        if jl.size:
            out += (triweight((x[:, None] - jl[None, :]) / eps) / eps) @ js
        if locs.size:
            out += atoms(x, lambda t: triweight(t) / eps, False)
        return out

    feats = []
    for t in list(ext.breakpoints) + [f for p in pieces for f in p.features]:
        feats.extend((t - eps, t + eps))
    for c in ext.cantor:
        if c.beta < a - eps or c.alpha > b + eps:
            continue
        # cells about eps wide, so each integration interval sees one smoothing scale
        level = math.ceil(math.log(eps / (c.beta - c.alpha)) / math.log(c.ratio))
        lefts, width = c.cells(int(min(max(level, 0), MEASURE_DEPTH)))
        for e in (lefts, lefts + width):
            feats.extend(e - eps)
            feats.extend(e)
            feats.extend(e + eps)
    feats = np.unique(np.asarray(feats, dtype=float))
    feats = tuple(feats[(feats > a) & (feats < b)].tolist())
    return BVFunction1D([a, b], [Piece(a, b, value, derivative, "general", None, feats)],
                        cantor_depth=u.cantor_depth)


# ---------------------------------------------------------------------------
# families

def _three_jump() -> BVFunction1D:
    return piecewise_linear([-1.0, -0.5, 0.0, 0.5, 1.0],
                            [0.0, 1.5, -0.5, 1.0], [0.5, 1.0, 0.0, 2.0])


def _smooth_jump() -> BVFunction1D:
    return from_callables([-1.0, 0.3, 1.0], [
        (lambda x: np.sin(2 * x), lambda x: 2 * np.cos(2 * x)),
        (lambda x: 1.0 + x * x, lambda x: 2 * x),
    ])


def _vector_jump() -> BVFunction1D:
    return piecewise_linear([-1.0, -0.4, 0.2, 1.0],
                            [[0.0, 1.0], [0.6, 0.4], [-0.5, 1.5]],
                            [[0.6, 0.4], [1.2, 1.0], [0.3, 0.2]])


LIMITS: dict[str, Callable[[], BVFunction1D]] = {
    "step": lambda: piecewise_constant([-1.0, 0.0, 1.0], [0.0, 1.0]),
    "sign": lambda: piecewise_constant([-1.0, 0.0, 1.0], [-1.0, 1.0]),
    "three_jump": _three_jump,
    "cantor": cantor_function,
    "smooth_jump": _smooth_jump,
    "vector_jump": _vector_jump,
    "identity": lambda: piecewise_linear([0.0, 1.0], [0.0], [1.0]),
}


def make_limit(name: str) -> BVFunction1D:
    try:
        return LIMITS[name]()
    except KeyError:
        raise KeyError(f"unknown limit function {name!r}; known: {sorted(LIMITS)}") from None


GEOMETRIC = (1, 2, 4, 8, 16, 32, 64)


@dataclass(frozen=True, eq=False)
class SequenceFamily:
    """A sequence ``j -> u_j`` together with its limit."""

    name: str
    generator: Callable
    limit: object
    index_range: tuple
    params: dict = field(default_factory=dict)

    @property
    def radial(self) -> bool:
        return isinstance(self.limit, RadialBV)

    def __call__(self, j):
        return self.generator(j)

    def members(self):
        return [(j, self.generator(j)) for j in self.index_range]


def _oscillation(j):
    k = 2 * math.pi * j
    return from_callables([0.0, 1.0], [(lambda x: x + np.sin(k * x) / k,
                                        lambda x: 1.0 + np.cos(k * x))])


def _ramp(j, lo, hi, centre, half, low, high):
    """``low`` left of ``centre - half``, ``high`` right of ``centre + half``, linear between."""
    a, b = max(lo, centre - half), min(hi, centre + half)
    slope = (high - low) / (2 * half)

    def at(x):
        return low + slope * (x - centre + half)

    bps, left, right = [lo], [], []
    if a > lo:
        bps.append(a)
        left.append(low)
        right.append(low)
    bps.append(b)
    left.append(at(a))
    right.append(at(b))
    if b < hi:
        bps.append(hi)
        left.append(high)
        right.append(high)
    return piecewise_linear(bps, left, right)


def _jump_smoothing(j):
    return _ramp(j, -1.0, 1.0, 0.0, 1.0 / j, -1.0, 1.0)


def _shifted_jump(j):
    if j == 1:
        return piecewise_constant([-1.0, 1.0], [1.0])
    return piecewise_constant([-1.0, -1.0 / j, 1.0], [0.0, 1.0])


FAMILY_NAMES = ("oscillation", "jump_smoothing", "shifted_jump", "mollified",
                "radial_steepening", "radial_mollified")


def make_family(name: str, index_range: Sequence[int] | None = None, **params) -> SequenceFamily:
    """Build a named family.

    ``mollified`` takes ``u`` (a :class:`BVFunction1D` or a name from
    :data:`LIMITS`, default ``"step"``) and uses ``eps_j = 2^-j``; only
    indices with ``eps_j`` below a quarter of the domain length are kept.
    The radial families take ``d`` (default 2) and live on the unit ball.
    """
    def rng(default):
        return tuple(int(j) for j in (index_range if index_range is not None else default))

    if name == "oscillation":
        return SequenceFamily(name, _oscillation, make_limit("identity"), rng(GEOMETRIC), params)
    if name == "jump_smoothing":
        return SequenceFamily(name, _jump_smoothing, make_limit("sign"), rng(GEOMETRIC), params)
    if name == "shifted_jump":
        return SequenceFamily(name, _shifted_jump, make_limit("step"), rng(GEOMETRIC), params)
    if name == "mollified":
        u = params.get("u", "step")
        limit = make_limit(u) if isinstance(u, str) else u
        length = limit.domain.length
        js = [j for j in rng(range(1, 11)) if 2.0 ** -j < length / 4]
        return SequenceFamily(name, lambda j: mollify(limit, 2.0 ** -j), limit, tuple(js), params)
    if name in ("radial_steepening", "radial_mollified"):
        d = int(params.get("d", 2))
        step = piecewise_constant([0.0, 0.5, 1.0], [-1.0, 1.0])
        limit = RadialBV(step, d)
        if name == "radial_steepening":
            return SequenceFamily(
                name, lambda j: RadialBV(_ramp(j, 0.0, 1.0, 0.5, 1.0 / j, -1.0, 1.0), d), limit,
                rng(2 ** np.arange(18)), params)
        js = [j for j in rng(range(3, 18))]
        return SequenceFamily(name, lambda j: RadialBV(mollify(step, 2.0 ** -j), d), limit,
                              tuple(js), params)
    raise KeyError(f"unknown family {name!r}; known: {list(FAMILY_NAMES)}")


# ---------------------------------------------------------------------------
# experiments

@dataclass
class ConvergenceReport:
    """Rows keyed by index plus a row for the limit.

    Cells that failed to evaluate hold NaN and the failure is recorded in
    ``diagnostics`` as ``(j, column, message)``.
    """

    family: str
    columns: list
    rows: list
    limit_row: dict
    diagnostics: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def indices(self) -> list:
        return [r["j"] for r in self.rows]


def _cell(diag, j, col, fn):
    try:
        return float(fn())
    except Exception as exc:  # recorded, report still emitted
        diag.append((j, col, f"{type(exc).__name__}: {exc}"))
        return float("nan")


def run_experiment(family: SequenceFamily, integrands: Sequence = ("area",), p: float = 2.0,
                   k: float | None = None, q: QuadratureSpec = DEFAULT_SPEC, graph: bool = True,
                   lifting: bool = True, dictionary: Sequence | None = None,
                   workers: int = 1) -> ConvergenceReport:
    """Tabulate distances, functional values and lifting columns along ``family``.

    ``dictionary`` is an optional list of test functions; when given, the
    report carries the worst pairing gap between the liftings of ``u_j`` and
    of the limit.  Rows are computed on ``workers`` threads and returned in
    index order.
    """
    if family.radial:
        raise ValueError("radial families are handled by embedding_experiment")
    fs = [parse_integrand(f) if isinstance(f, str) else f for f in integrands]
    names = [re.sub(r"[^\w.+-]+", "_", f.name).strip("_") or f"f{i}" for i, f in enumerate(fs)]
    limit = family.limit
    cols = ["strict_dist", "area_strict_dist", "l1_dist", "lp_dist", "sup_dist"]
    for n in names:
        cols.append(f"F_{n}")
        if graph:
            cols.append(f"F_{n}_graph")
    if lifting:
        cols.append("lifting_mass_gap")
    if dictionary:
        cols.append("lifting_pairing_gap")
    if k is not None:
        cols.append("tail_mass")
    diag: list = []
    limit_mass = total_mass(build_lifting(limit, q)) if lifting else 0.0
    if dictionary:
        def pairing_gap(v):
            rep = lifting_convergence_report([(0, v)], limit, dictionary, q)
            return rep[0]["pairing_gap"]

    def values(j, v, is_limit=False):
        row = {"j": j}
        for c in cols[:5]:
            if is_limit:
                row[c] = 0.0
        if not is_limit:
            row["strict_dist"] = _cell(diag, j, "strict_dist", lambda: strict_distance(v, limit, q))
            row["area_strict_dist"] = _cell(diag, j, "area_strict_dist",
                                            lambda: area_strict_distance(v, limit, q))
            row["l1_dist"] = _cell(diag, j, "l1_dist", lambda: lp_distance(v, limit, 1.0, q))
            row["lp_dist"] = _cell(diag, j, "lp_dist", lambda: lp_distance(v, limit, p, q))
            row["sup_dist"] = _cell(diag, j, "sup_dist", lambda: sup_distance(v, limit))
        for n, f in zip(names, fs):
            row[f"F_{n}"] = _cell(diag, j, f"F_{n}", lambda: evaluate_F(f, v, q).total)
            if graph:
                row[f"F_{n}_graph"] = _cell(diag, j, f"F_{n}_graph", lambda: evaluate_F_graph(f, v, q).total)
        if lifting:
            row["lifting_mass_gap"] = _cell(diag, j, "lifting_mass_gap",
                                            lambda: abs(total_mass(build_lifting(v, q)) - limit_mass))
        if dictionary:
            row["lifting_pairing_gap"] = _cell(diag, j, "lifting_pairing_gap", lambda: pairing_gap(v))
        if k is not None:
            row["tail_mass"] = _cell(diag, j, "tail_mass", lambda: tail_gradient_mass(v, k, q))
        return row

    members = family.members()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda jv: values(*jv), members))
    else:
        rows = [values(j, v) for j, v in members]
    limit_row = values("limit", limit, is_limit=True)
    diag.sort(key=lambda d: (str(d[0]), d[1]))
    return ConvergenceReport(family.name, cols, rows, limit_row, diag)


def embedding_experiment(family: SequenceFamily, d: int | None = None, p: float | None = None,
                         q: QuadratureSpec = DEFAULT_SPEC) -> ConvergenceReport:
    """Strict distance against the critical-exponent and sup distances for a radial family.

    ``p`` defaults to ``d / (d - 1)`` (infinite for ``d = 1``).
    """
    if not family.radial:
        raise ValueError("embedding_experiment needs a radial family")
    d = family.limit.dim if d is None else d
    if p is None:
        p = math.inf if d == 1 else d / (d - 1)
    limit = family.limit if family.limit.dim == d else RadialBV(family.limit.profile, d)
    cols = ["strict_dist", "lp_dist", "sup_dist"]
    diag: list = []
    rows = []
    for j, rv in family.members():
        rv = rv if rv.dim == d else RadialBV(rv.profile, d)
        rows.append({
            "j": j,
            "strict_dist": _cell(diag, j, "strict_dist", lambda: radial_strict_distance(rv, limit, q)),
            "lp_dist": _cell(diag, j, "lp_dist", lambda: radial_lp_distance(rv, limit, p, q)),
            "sup_dist": _cell(diag, j, "sup_dist", lambda: sup_distance(rv.profile, limit.profile)),
        })
    limit_row = {"j": "limit", "strict_dist": 0.0, "lp_dist": 0.0, "sup_dist": 0.0}
    return ConvergenceReport(family.name, cols, rows, limit_row, diag)
