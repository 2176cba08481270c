"""Quadrature primitives shared by every module.

Vectorized globally-adaptive Gauss-Kronrod (7/15) integration over a list of
intervals, cached Gauss-Legendre rules on [0, 1], and the quadrature settings
object passed around the library.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureFailure(RuntimeError):
    """Adaptive subdivision ran out of budget before meeting the tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy settings for functional, lifting and distance evaluations.

    Parameters
    ----------
    theta_order : int
        Gauss-Legendre node count for integrals over the jump parameter.
    ac_tolerance : float
        Absolute tolerance of the adaptive integrator, distributed over the
        integration range in proportion to subinterval length.
    cantor_depth : int
        Depth of the self-similar construction used for staircase evaluation.
    subdivision_budget : int
        Maximum number of subintervals the adaptive integrator may create.
    """

    theta_order: int = 32
    ac_tolerance: float = 1e-9
    cantor_depth: int = 24
    subdivision_budget: int = 100_000

    def __post_init__(self):
        if self.theta_order < 2:
            raise ValueError("theta_order must be at least 2")
        if not self.ac_tolerance > 0:
            raise ValueError("ac_tolerance must be positive")
        if self.cantor_depth < 1:
            raise ValueError("cantor_depth must be positive")
        if self.subdivision_budget < 1:
            raise ValueError("subdivision_budget must be positive")


DEFAULT_SPEC = QuadratureSpec()

# Kronrod 15-point abscissae (positive half) and weights, with the embedded
# 7-point Gauss weights on the odd-indexed abscissae.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GK_GAUSS_WEIGHTS = np.zeros(15)
GK_GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GK_GAUSS_WEIGHTS[7] = _WG[3]
GK_GAUSS_WEIGHTS[9:15:2] = _WG[:3][::-1]


@lru_cache(maxsize=None)
def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1] (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _as_2d(values: np.ndarray, n: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values.reshape(n, -1)


def _nudge(x: np.ndarray, avoid: np.ndarray, shift: float) -> np.ndarray:
    if avoid.size == 0:
        return x
    hit = np.isin(x, avoid)
    if hit.any():
        x = np.where(hit, x + shift, x)
    return x


def adaptive_integrate(func, intervals, tol: float = 1e-9, budget: int = 100_000,
                       avoid=(), min_width: float = 1e-15):
    """Integrate a vectorized function over a union of intervals.

    ``func`` maps an array of abscissae of shape ``(N,)`` to values of shape
    ``(N,)`` or ``(N, k)``. Each interval is bisected until its
    |Kronrod - Gauss| estimate drops below ``tol * width / total_width``.
    Nodes landing exactly on a point in ``avoid`` are shifted by 1e-13.

    Returns
    -------
    value : float or ndarray
        Integral (shape ``(k,)`` for vector-valued ``func``).
    error : float
        Sum of the accepted local error estimates.
    """
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    iv = iv[iv[:, 1] > iv[:, 0]]
    avoid = np.asarray(avoid, dtype=float).ravel()
    if iv.shape[0] == 0:
        return 0.0, 0.0
    total = float(np.sum(iv[:, 1] - iv[:, 0]))
    accepted_lo: list[np.ndarray] = []
    accepted_val: list[np.ndarray] = []
    err_total = 0.0
    created = iv.shape[0]
    scalar_out = None
    active = iv
    while active.shape[0]:
        lo, hi = active[:, 0], active[:, 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
        x = _nudge(x, avoid, 1e-13)
        raw = func(x)
        if scalar_out is None:
            scalar_out = np.ndim(raw) == 1
        vals = _as_2d(raw, x.size).reshape(active.shape[0], 15, -1)
        kron = np.einsum("j,ijk->ik", GK_KRONROD_WEIGHTS, vals) * half[:, None]
        gauss = np.einsum("j,ijk->ik", GK_GAUSS_WEIGHTS, vals) * half[:, None]
        err = np.max(np.abs(kron - gauss), axis=1)
        if not np.all(np.isfinite(kron)):
            raise QuadratureFailure("integrand produced non-finite values")
        width = hi - lo
        ok = (err <= tol * width / total) | (width <= min_width * (1.0 + np.abs(mid)))
        if ok.any():
            accepted_lo.append(lo[ok])
            accepted_val.append(kron[ok])
            err_total += float(np.sum(err[ok]))
        rest = active[~ok]
        if rest.shape[0] == 0:
            break
        created += rest.shape[0]
        if created > budget:
            raise QuadratureFailure(
                f"subdivision budget {budget} exhausted with {rest.shape[0]} unresolved subintervals")
        m = 0.5 * (rest[:, 0] + rest[:, 1])
        active = np.concatenate([np.stack([rest[:, 0], m], axis=1),
                                 np.stack([m, rest[:, 1]], axis=1)])
    los = np.concatenate(accepted_lo)
    vals = np.concatenate(accepted_val)
    order = np.argsort(los, kind="stable")
    value = np.sum(vals[order], axis=0)
    if scalar_out:
        return float(value[0]), err_total
    return value, err_total


def fixed_gauss(func, intervals, order: int = 8, avoid=()):
    """Apply an ``order``-point Gauss-Legendre rule on each interval and sum."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    nodes, weights = gauss_legendre01(order)
    width = iv[:, 1] - iv[:, 0]
    x = (iv[:, :1] + width[:, None] * nodes[None, :]).ravel()
    x = _nudge(x, np.asarray(avoid, dtype=float).ravel(), 1e-13)
    raw = func(x)
    vals = _as_2d(raw, x.size).reshape(iv.shape[0], order, -1)
    total = np.sum(np.einsum("j,ijk->ik", weights, vals) * width[:, None], axis=0)
    if np.ndim(raw) == 1:
        return float(total[0])
    return total
