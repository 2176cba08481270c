"""Integrands f(x, y, A), their recession functions and derived integrands.

Evaluators are vectorized: ``x`` has shape ``(N,)`` and ``y``, ``A`` have
shape ``(N, m)`` (the domain is one-dimensional, so ``A`` is an m x 1 matrix
stored as a vector).  They return an ``(N,)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "Integrand", "PerspectiveIntegrand", "NoRecession", "NotHomogeneous",
    "RecessionReport", "GrowthReport", "estimate_recession", "recession_spread",
    "validate_recession", "check_homogeneous", "perspective", "truncate_integrand",
    "growth_check", "smooth_step", "get_integrand", "parse_integrand", "REGISTRY_NAMES",
]

T_EXPONENTS = tuple(range(4, 25))
RADII = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
SPREAD_THRESHOLD = 1e-3


class NoRecession(ValueError):
    """The recession limit does not settle: probe values keep spreading."""

    def __init__(self, message, spread=None):
        super().__init__(message)
        self.spread = spread


class NotHomogeneous(ValueError):
    pass


def _prepare(x, y, A):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.shape[0]

    def rows(v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0:
            return np.full((n, 1), float(v))
        if v.ndim == 1:
            return v[:, None] if (v.shape[0] == n and n > 1) else np.broadcast_to(v, (n, v.shape[0]))
        return v

    return x, rows(y), rows(A)


@dataclass(frozen=True, eq=False)
class Integrand:
    """An integrand with optional recession function and growth certificate.

    Parameters
    ----------
    func : callable
        ``func(x, y, A) -> (N,)`` array.
    recession : callable, optional
        Closed-form recession function with the same signature.  When absent,
        :func:`estimate_recession` is used on demand.
    growth : (C, p)
        Claimed bound ``|f| <= C (1 + |y|^p + |A|)``.
    continuity : {"continuous", "caratheodory"}
    exceptional_set : tuple of float
        Points in x where ``f`` or its recession may be discontinuous.
    """

    func: Callable
    recession: Callable | None = None
    growth: tuple = (1.0, 1.0)
    continuity: str = "continuous"
    exceptional_set: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.continuity not in ("continuous", "caratheodory"):
            raise ValueError(f"unknown continuity class {self.continuity!r}")
        C, p = self.growth
        if C < 0 or p < 1:
            raise ValueError("growth certificate needs C >= 0 and p >= 1")

    def __call__(self, x, y, A) -> np.ndarray:
        x, y, A = _prepare(x, y, A)
        return np.asarray(self.func(x, y, A), dtype=float).reshape(x.shape[0])

    def recession_at(self, x, y, A) -> np.ndarray:
        x, y, A = _prepare(x, y, A)
        if self.recession is not None:
            return np.asarray(self.recession(x, y, A), dtype=float).reshape(x.shape[0])
        return estimate_recession(self, x, y, A)

    @property
    def continuous_recession(self) -> bool:
        return self.continuity == "continuous" and not self.exceptional_set


# ---------------------------------------------------------------------------
# recession estimation

def _probe_offsets(m: int) -> np.ndarray:
    """Unit offsets in (x, y, A) coordinates: the centre and +-e_i."""
    dim = 1 + 2 * m
    eye = np.eye(dim)
    return np.concatenate([np.zeros((1, dim)), eye, -eye])


def recession_spread(f: Integrand, x, y, A, t_exponents=T_EXPONENTS, radii=RADII):
    """Probe ``f(x', y', t A') / t`` on a lattice of joint limit orders.

    Stage ``s`` perturbs every argument by ``radii[s]`` along each axis and
    uses a window of six consecutive powers of two that slides from the start
    to the end of ``t_exponents``.

    Returns
    -------
    estimate : (N,) array
        Centre probe at the largest ``t``.
    spreads : (N, n_stages) array
        Max minus min of the probe values within each stage.
    """
    x, y, A = _prepare(x, y, A)
    n, m = y.shape
    offsets = _probe_offsets(m)
    exps = list(t_exponents)
    n_stages = len(radii)
    width = min(6, len(exps))
    step = (len(exps) - width) / max(n_stages - 1, 1)
    spreads = np.empty((n, n_stages))
    estimate = None
    for s, radius in enumerate(radii):
        start = int(round(s * step))
        window = np.array([2.0 ** e for e in exps[start:start + width]])
        d = radius * offsets
        xp = (x[:, None] + d[None, :, 0]).reshape(-1)
        yp = (y[:, None, :] + d[None, :, 1:1 + m]).reshape(-1, m)
        Ap = (A[:, None, :] + d[None, :, 1 + m:]).reshape(-1, m)
        vals = np.empty((n, offsets.shape[0], window.size))
        for k, t in enumerate(window):
            vals[:, :, k] = np.asarray(f.func(xp, yp, t * Ap), dtype=float).reshape(n, -1) / t
        spreads[:, s] = vals.max(axis=(1, 2)) - vals.min(axis=(1, 2))
        estimate = vals[:, 0, -1]
    return estimate, spreads


def estimate_recession(f: Integrand, x, y, A, t_exponents=T_EXPONENTS, radii=RADII,
                       threshold: float = SPREAD_THRESHOLD):
    """Numerical recession value ``lim f(x', y', t A') / t``.

    Raises :class:`NoRecession` when the final-stage spread exceeds
    ``threshold * max(1, |estimate|)`` at any point.
    """
    scalar = np.ndim(x) == 0
    est, spreads = recession_spread(f, x, y, A, t_exponents, radii)
    final = spreads[:, -1]
    bad = final > threshold * np.maximum(1.0, np.abs(est))
    if np.any(bad):
        k = int(np.argmax(final))
        raise NoRecession(f"recession limit does not settle (final spread {final[k]:.3g})",
                          spread=float(final[k]))
    return float(est[0]) if scalar else est


@dataclass
class RecessionReport:
    max_deviation: float
    worst_point: tuple
    homogeneity_error: float
    passed: bool
    failures: list = field(default_factory=list)


def _default_samples(m: int = 1):
    xs = np.array([-0.5, 0.3, 0.9])
    ys = np.array([-2.0, 0.0, 1.5])
    As = np.array([-3.0, -1.0, 0.5, 2.0, 10.0])
    X, Y, AA = np.meshgrid(xs, ys, As, indexing="ij")
    return X.ravel(), np.tile(Y.ravel()[:, None], (1, m)), np.tile(AA.ravel()[:, None], (1, m))


def validate_recession(f: Integrand, samples=None, tol: float = SPREAD_THRESHOLD) -> RecessionReport:
    """Compare a supplied recession function with the numerical estimate.

    Also checks positive 1-homogeneity in ``A`` for ``lambda`` in
    {0.5, 2, 10}.  Mismatches are reported, not raised.
    """
    if f.recession is None:
        raise ValueError("integrand has no recession function to validate")
    x, y, A = _default_samples() if samples is None else _prepare(*samples)
    supplied = f.recession_at(x, y, A)
    failures = []
    try:
        est = estimate_recession(f, x, y, A)
    except NoRecession as exc:
        failures.append(str(exc))
        est, _ = recession_spread(f, x, y, A)
    dev = np.abs(supplied - est)
    k = int(np.argmax(dev))
    hom = 0.0
    for lam in (0.5, 2.0, 10.0):
        scaled = f.recession_at(x, y, lam * A)
        err = np.abs(scaled - lam * supplied) / np.maximum(lam * np.abs(supplied), 1e-300)
        err = np.where(np.abs(supplied) > 0, err, np.abs(scaled))
        hom = max(hom, float(np.max(err)))
    if hom > 1e-9:
        failures.append(f"recession not 1-homogeneous (relative error {hom:.3g})")
    if np.any(dev > tol * np.maximum(1.0, np.abs(est))):
        failures.append(f"recession deviates from estimate by {dev[k]:.3g}")
    return RecessionReport(float(dev[k]), (float(x[k]), y[k].tolist(), A[k].tolist()), hom,
                           not failures, failures)


def check_homogeneous(f: Integrand, samples=None, tol: float = 1e-9):
    """Raise :class:`NotHomogeneous` unless ``f(x, y, lam A) = lam f(x, y, A)``."""
    x, y, A = _default_samples() if samples is None else _prepare(*samples)
    base = f(x, y, A)
    for lam in (0.5, 2.0, 10.0):
        err = np.abs(f(x, y, lam * A) - lam * base)
        if np.any(err > tol * np.maximum(1.0, lam * np.abs(base))):
            raise NotHomogeneous(f"{f.name or 'integrand'} is not positively 1-homogeneous in A")


# ---------------------------------------------------------------------------
# perspective

@dataclass(frozen=True, eq=False)
class PerspectiveIntegrand:
    """``(x, (r, y), (t, A)) -> |t| f(x, y, A / |t|)``, recession at ``t = 0``.

    ``t`` is the scalar slot of the graph direction (the domain is 1-D); ``r``
    is carried for the identification with R^(1+m) and does not enter.
    """

    base: Integrand

    def __call__(self, x, r, y, t, A) -> np.ndarray:
        x, y, A = _prepare(x, y, A)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        at = np.abs(t)
        out = np.empty(x.shape[0])
        pos = at > 0
        if np.any(pos):
            out[pos] = at[pos] * self.base(x[pos], y[pos], A[pos] / at[pos][:, None])
        if np.any(~pos):
            out[~pos] = self.base.recession_at(x[~pos], y[~pos], A[~pos])
        return out


def perspective(f: Integrand) -> PerspectiveIntegrand:
    """Build the perspective integrand; needs a recession function.

    When ``f`` carries no closed-form recession, one probe of the estimator
    is made up front so that a missing limit surfaces here.
    """
    if f.recession is None:
        x, y, A = _default_samples()
        estimate_recession(f, x[:3], y[:3], A[:3])
    return PerspectiveIntegrand(f)


# ---------------------------------------------------------------------------
# truncation

def _psi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s):
    """C-infinity step: 1 for ``s <= 0``, 0 for ``s >= 1``."""
    a = _psi(1.0 - np.asarray(s, dtype=float))
    return a / (a + _psi(s))


def partition_weight(y, k: int):
    """Sum of the first ``k`` members of the partition of unity.

    Member ``n`` is ``smooth_step(|y| - n) - smooth_step(|y| - n + 1)``
    (the first is ``smooth_step(|y| - 1)``), supported where
    ``n - 1 <= |y| <= n + 1``; the sum telescopes.
    """
    r = np.linalg.norm(np.atleast_2d(y), axis=-1)
    return smooth_step(r - k)


def truncate_integrand(f: Integrand, k: int) -> Integrand:
    """``f_k = (sum_{n<=k} phi_n(y)) f``: equal to ``f`` for ``|y| < k``, zero beyond ``k + 1``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    C, p = f.growth

    def func(x, y, A):
        return partition_weight(y, k) * f.func(x, y, A)

    if f.recession is not None:
        def rec(x, y, A):
            return partition_weight(y, k) * f.recession(x, y, A)
    else:
        def rec(x, y, A):
            w = partition_weight(y, k)
            out = np.zeros(x.shape[0])
            live = w > 0
            if np.any(live):
                out[live] = w[live] * estimate_recession(f, x[live], y[live], A[live])
            return out

    return Integrand(func, rec, (C * (1.0 + (k + 1.0) ** p), 1.0), f.continuity,
                     f.exceptional_set, f"{f.name}|k={k}")


# ---------------------------------------------------------------------------
# growth

@dataclass
class GrowthReport:
    worst_ratio: float
    worst_point: tuple
    passed: bool


def growth_check(f: Integrand, samples=None) -> GrowthReport:
    """Worst ratio ``|f| / (1 + |y|^p + |A|)`` over a log-scaled grid."""
    C, p = f.growth
    if samples is None:
        mags = np.concatenate([[0.0], np.logspace(-2, 3, 11)])
        vals = np.concatenate([-mags[1:], mags])
        xs = np.array([-0.75, -0.1, 0.0, 0.4, 0.9])
        X, Y, AA = np.meshgrid(xs, vals, vals, indexing="ij")
        x, y, A = X.ravel(), Y.ravel()[:, None], AA.ravel()[:, None]
    else:
        x, y, A = _prepare(*samples)
    ratio = np.abs(f(x, y, A)) / (1.0 + np.linalg.norm(y, axis=1) ** p + np.linalg.norm(A, axis=1))
    k = int(np.argmax(ratio))
    return GrowthReport(float(ratio[k]), (float(x[k]), y[k].tolist(), A[k].tolist()),
                        bool(ratio[k] <= C * (1 + 1e-12)))


# ---------------------------------------------------------------------------
# registry

def _norm(v):
    return np.linalg.norm(v, axis=1)


def _abs():
    return Integrand(lambda x, y, A: _norm(A), lambda x, y, A: _norm(A), (1.0, 1.0), name="abs")


def _area():
    return Integrand(lambda x, y, A: np.sqrt(1.0 + _norm(A) ** 2), lambda x, y, A: _norm(A),
                     (1.0, 1.0), name="area")


def _nonconvex():
    def func(x, y, A):
        a2 = _norm(A) ** 2
        return np.sqrt(1.0 + a2) + np.exp(-a2)

    return Integrand(func, lambda x, y, A: _norm(A), (2.0, 1.0), name="nonconvex")


def _ygrowth(p: float):
    return Integrand(lambda x, y, A: _norm(y) ** p + _norm(A), lambda x, y, A: _norm(A),
                     (1.0, float(p)), name=f"ygrowth-{p:g}")


def _ex55():
    """Continuous integrand whose recession jumps at x = 0.

    ``g(x, A) = |A| * clip(|A| x + 1, 0, 1)`` and ``f = (1 - h(A)) g`` with
    ``h`` a smooth cutoff equal to 1 on [-1, 1] and 0 outside [-2, 2].
    """
    def func(x, y, A):
        a = _norm(A)
        g = a * np.clip(a * x + 1.0, 0.0, 1.0)
        return (1.0 - smooth_step(a - 1.0)) * g

    def rec(x, y, A):
        return np.where(x >= 0.0, _norm(A), 0.0)

    return Integrand(func, rec, (1.0, 1.0), "caratheodory", (0.0,), name="ex55")


REGISTRY_NAMES = ("abs", "area", "nonconvex", "ygrowth-p", "ex55")


def get_integrand(name: str) -> Integrand:
    """Look up a built-in integrand; ``ygrowth-<p>`` selects the exponent."""
    if name == "abs":
        return _abs()
    if name == "area":
        return _area()
    if name == "nonconvex":
        return _nonconvex()
    if name == "ex55":
        return _ex55()
    if name.startswith("ygrowth"):
        tail = name[len("ygrowth"):].lstrip("-")
        if tail in ("", "p"):
            return _ygrowth(2.0)
        try:
            p = float(tail)
        except ValueError:
            raise KeyError(name) from None
        if p < 1:
            raise KeyError(name)
        return _ygrowth(p)
    raise KeyError(name)


def parse_integrand(text: str) -> Integrand:
    """Registry name, or an expression in ``x``, ``y``, ``A`` (scalar case).

    Expressions are parsed with sympy and may use ``abs``, ``sqrt``, ``exp``,
    ``log``, ``sin``, ``cos`` and powers.  Their recession function is
    estimated numerically; the growth certificate is probed with
    :func:`growth_check` at ``p = 1`` and ``p = 2``, keeping the tighter one.
    """
    text = text.strip()
    try:
        return get_integrand(text)
    except KeyError:
        pass
    import sympy

    xs, ys, As = sympy.symbols("x y A", real=True)
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals={"x": xs, "y": ys, "A": As})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise KeyError(text) from exc
    if not expr.free_symbols <= {xs, ys, As}:
        raise KeyError(text)
    fn = sympy.lambdify((xs, ys, As), expr, "numpy")

    def func(x, y, A):
        out = fn(x, y[:, 0], A[:, 0])
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape)

    probe = Integrand(func, None, (1.0, 1.0), name=text)
    ratios = {p: growth_check(replace(probe, growth=(1.0, p))).worst_ratio for p in (1.0, 2.0)}
    p = min(ratios, key=ratios.get)
    if not math.isfinite(ratios[p]):
        raise KeyError(text)
    return replace(probe, growth=(ratios[p], p))
