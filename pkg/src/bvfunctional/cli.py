"""Command-line front end: ``reproduce <id>`` and ``run <config>``.

Config files are INI-style ``key = value`` lines grouped under
``[experiment]``, ``[quadrature]`` and ``[output]`` headers; lines before
the first header belong to ``[experiment]``.  See the README for the keys.
"""

from __future__ import annotations

import argparse
import configparser
import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bvfun import BVFunction1D, decompose
from .convergence import (FAMILY_NAMES, LIMITS, ConvergenceReport, embedding_experiment,
                          make_family, make_limit, run_experiment)
from .functional import evaluate_F, evaluate_F_graph
from .integrand import get_integrand, parse_integrand
from .lifting import random_bumps
from .quadrature import QuadratureSpec

__all__ = ["ConfigError", "ParseError", "UnknownName", "ExperimentConfig", "parse_config",
           "reproduce", "run", "main", "write_csv", "write_svg", "REPRODUCIBLE", "L_STAR"]

# (1/2pi) * integral over a period of sqrt(1 + (1 + sin s)^2)
L_STAR = 1.5131795766437733


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(line, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))


class ParseError(ConfigError):
    pass


class UnknownName(ConfigError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "oscillation"
    limit: str | None = None
    dim: int = 2
    integrands: tuple = ("area",)
    p: float = 2.0
    k: float | None = None
    indices: tuple | None = None
    jmax: int | None = None
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    graph: bool = True
    lifting: bool = True
    dictionary_size: int = 0
    seed: int = 0
    workers: int = 1
    out_dir: str = "."
    name: str | None = None

    @property
    def output_name(self) -> str:
        return self.name or self.family

    def family_object(self):
        params = {}
        if self.family == "mollified":
            params["u"] = self.limit or "step"
        if self.family.startswith("radial"):
            params["d"] = self.dim
        fam = make_family(self.family, self.indices, **params)
        if self.jmax is not None:
            fam = replace(fam, index_range=tuple(j for j in fam.index_range if j <= self.jmax))
        return fam


_KEYS = {
    "experiment": {"family", "limit", "d", "integrands", "p", "k", "indices", "jmax",
                   "graph", "lifting", "dictionary", "seed", "workers"},
    "quadrature": {"tol", "cantor_depth", "theta_order", "budget"},
    "output": {"dir", "name"},
}


def _line_of(text_lines, section, key):
    current = "experiment"
    for i, line in enumerate(text_lines, 1):
        s = line.strip()
        m = re.fullmatch(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return 0


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _indices(v):
    out = tuple(int(s) for s in re.split(r"[,\s]+", v.strip()) if s)
    if not out or any(j < 1 for j in out):
        raise ValueError("indices must be positive integers")
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config; raises :class:`ConfigError` with line numbers."""
    lines = text.splitlines()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None,
                                   default_section="__defaults__")
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.DuplicateSectionError:
        # an explicit [experiment] header repeats the implicit one; merge them
        try:
            cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None,
                                           default_section="__defaults__", strict=False)
            cp.read_string("[experiment]\n" + text)
        except configparser.Error as exc:
            raise ParseError([(max(getattr(exc, "lineno", 1) - 1, 1), exc.message)]) from None
    except configparser.ParsingError as exc:
        raise ParseError([(ln - 1, f"malformed line {raw.strip(chr(39)).removesuffix(chr(92) + 'n')!r}")
                          for ln, raw in exc.errors]) from None
    except configparser.Error as exc:
        raise ParseError([(max(getattr(exc, "lineno", 1) - 1, 1), exc.message)]) from None

    parse_errors, name_errors = [], []
    for section in cp.sections():
        if section not in _KEYS:
            parse_errors.append((_section_line(lines, section), f"unknown section [{section}]"))
            continue
        for key in cp[section]:
            if key not in _KEYS[section]:
                parse_errors.append((_line_of(lines, section, key), f"unknown key {key!r} in [{section}]"))

    kw = {}
    quad = {}

    def take(section, key, conv, target, dest):
        if not cp.has_option(section, key):
            return
        raw = cp.get(section, key)
        try:
            target[dest] = conv(raw)
        except (ValueError, TypeError) as exc:
            parse_errors.append((_line_of(lines, section, key), f"{key}: {exc}"))

    take("experiment", "family", str.strip, kw, "family")
    take("experiment", "limit", str.strip, kw, "limit")
    take("experiment", "d", int, kw, "dim")
    take("experiment", "p", float, kw, "p")
    take("experiment", "k", float, kw, "k")
    take("experiment", "indices", _indices, kw, "indices")
    take("experiment", "jmax", int, kw, "jmax")
    take("experiment", "graph", _bool, kw, "graph")
    take("experiment", "lifting", _bool, kw, "lifting")
    take("experiment", "dictionary", int, kw, "dictionary_size")
    take("experiment", "seed", int, kw, "seed")
    take("experiment", "workers", int, kw, "workers")
    take("quadrature", "tol", float, quad, "ac_tolerance")
    take("quadrature", "cantor_depth", int, quad, "cantor_depth")
    take("quadrature", "theta_order", int, quad, "theta_order")
    take("quadrature", "budget", int, quad, "subdivision_budget")
    take("output", "dir", str.strip, kw, "out_dir")
    take("output", "name", str.strip, kw, "name")

    if cp.has_option("experiment", "integrands"):
        names = tuple(s.strip() for s in cp.get("experiment", "integrands").split(";") if s.strip())
        line = _line_of(lines, "experiment", "integrands")
        for n in names:
            try:
                parse_integrand(n)
            except KeyError as exc:
                name_errors.append((line, str(exc.args[0])))
        kw["integrands"] = names
    fam = kw.get("family", "oscillation")
    if fam not in FAMILY_NAMES:
        name_errors.append((_line_of(lines, "experiment", "family"), f"unknown family {fam!r}"))
    if "limit" in kw and kw["limit"] not in LIMITS:
        name_errors.append((_line_of(lines, "experiment", "limit"), f"unknown limit {kw['limit']!r}"))
    try:
        kw["quadrature"] = QuadratureSpec(**quad)
    except ValueError as exc:
        parse_errors.append((_section_line(lines, "quadrature"), str(exc)))
    if "dim" in kw and kw["dim"] < 1:
        parse_errors.append((_line_of(lines, "experiment", "d"), "d must be at least 1"))

    if parse_errors:
        raise ParseError(sorted(parse_errors + name_errors))
    if name_errors:
        raise UnknownName(sorted(name_errors))
    return ExperimentConfig(**kw)


def _section_line(lines, section):
    for i, line in enumerate(lines, 1):
        if line.strip() == f"[{section}]":
            return i
    return 0


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r[c]) for c in columns) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


def write_svg(path: Path, title: str, xs, series: dict, width: int = 640, height: int = 400) -> None:
    """Minimal log-x line chart; non-finite points are skipped."""
    xs = np.asarray(xs, dtype=float)
    left, right, top, bottom = 70, 160, 40, 50
    pw, ph = width - left - right, height - top - bottom
    lx = np.log10(xs)
    x0, x1 = float(lx.min()), float(lx.max())
    if x1 == x0:
        x1 = x0 + 1.0
    allv = np.concatenate([np.asarray(v, dtype=float) for v in series.values()]) if series else np.zeros(1)
    allv = allv[np.isfinite(allv)]
    y0, y1 = (float(allv.min()), float(allv.max())) if allv.size else (0.0, 1.0)
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left}" y="20" font-size="14">{title}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 - 1e-9 <= e <= x1 + 1e-9:
            out.append(f'<line x1="{px(e):.2f}" y1="{top + ph}" x2="{px(e):.2f}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(e):.2f}" y="{top + ph + 18}" text-anchor="middle">1e{e}</text>')
    for t in np.linspace(y0, y1, 5):
        out.append(f'<text x="{left - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">j</text>')
    for i, (name, vals) in enumerate(series.items()):
        colour = _PALETTE[i % len(_PALETTE)]
        vals = np.asarray(vals, dtype=float)
        ok = np.isfinite(vals)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx[ok], vals[ok]))
        if pts:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        ly = top + 14 * i + 10
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{colour}"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def _emit(out_dir: Path, name: str, report: ConvergenceReport, plot_cols) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cols = ["j"] + list(report.columns)
    write_csv(out_dir / f"{name}.csv", cols, report.rows + [report.limit_row])
    xs = report.indices
    write_svg(out_dir / f"{name}.svg", name, xs, {c: report.column(c) for c in plot_cols})


# ---------------------------------------------------------------------------
# reproduce

class _Checks:
    def __init__(self, stream):
        self.stream = stream
        self.ok = True

    def __call__(self, label: str, passed: bool, detail: str = "") -> None:
        passed = bool(passed)
        self.ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {label}" + (f" ({detail})" if detail else ""),
              file=self.stream)


def _richardson(report, col):
    """First-order extrapolation from the last two rows of a geometric index range."""
    v = report.column(col)
    return 2.0 * v[-1] - v[-2]


def _reproduce_oscillation(opts, check):
    fam = _family("oscillation", opts)
    rep = run_experiment(fam, ["abs", "area"], p=opts.p, k=opts.k, q=opts.q, graph=False)
    tv = rep.column("F_abs")
    check("total variation of u_j equals 1", np.all(np.abs(tv - 1.0) <= 1e-9),
          f"max deviation {np.max(np.abs(tv - 1.0)):.2e}")
    strict = rep.column("strict_dist")
    check("strict distance below 1e-2 at the final index", strict[-1] < 1e-2, f"{strict[-1]:.3e}")
    area = rep.column("F_area")
    check("area functional within 1e-3 of L*", abs(area[-1] - L_STAR) <= 1e-3, f"{area[-1]:.12f}")
    check("L* - sqrt(2) > 0.09", L_STAR - math.sqrt(2) > 0.09, f"{L_STAR - math.sqrt(2):.6f}")
    lim = _richardson(rep, "area_strict_dist")
    check("area-strict distance tends to 0.0993 +- 1e-3", abs(lim - 0.0993) <= 1e-3,
          f"extrapolated {lim:.6f}")
    return rep, ["strict_dist", "area_strict_dist", "l1_dist"]


def _reproduce_jump_smoothing(opts, check):
    fam = _family("jump_smoothing", opts)
    rep = run_experiment(fam, ["abs", "area"], p=opts.p, k=opts.k, q=opts.q, graph=False)
    sup = rep.column("sup_dist")
    check("sup distance equals 1 for every j", np.all(np.abs(sup - 1.0) <= 1e-12),
          f"max deviation {np.max(np.abs(sup - 1.0)):.2e}")
    tv_gap = np.abs(rep.column("F_abs") - 2.0)
    check("total variation gap is 0", np.all(tv_gap <= 1e-12), f"{tv_gap.max():.2e}")
    last = rep.column("area_strict_dist")[-1]
    check("area-strict distance below 1e-2 at the final index", last < 1e-2, f"{last:.6f}")
    return rep, ["strict_dist", "area_strict_dist", "sup_dist"]


def _reproduce_shifted_jump(opts, check):
    fam = _family("shifted_jump", opts)
    rep = run_experiment(fam, ["ex55"], p=opts.p, k=opts.k, q=opts.q, graph=False)
    f = rep.column("F_ex55")
    check("F[u_j] = 0 exactly for every j", np.all(f == 0.0), f"values {sorted(set(f.tolist()))}")
    check("F[u] = 1 exactly", rep.limit_row["F_ex55"] == 1.0, f"{rep.limit_row['F_ex55']!r}")
    js = np.array(rep.indices, dtype=float)
    area = rep.column("area_strict_dist")
    mask = js >= 2
    check("area-strict distance equals 1/j", np.allclose(area[mask], 1.0 / js[mask], rtol=0, atol=1e-12),
          f"final {area[-1]:.6f}")
    return rep, ["area_strict_dist", "F_ex55"]


def _reproduce_cantor(opts, check):
    u = make_limit("cantor")
    u = BVFunction1D(u.breakpoints, u.pieces, u.cantor, opts.q.cantor_depth)
    dec = decompose(u, opts.q)
    print(f"ac={dec.ac_total:g} jump={dec.jump_total:g} cantor={dec.cantor_total:g}", file=check.stream)
    check("decomposition ac=0 jump=0 cantor=1",
          dec.ac_total == 0 and dec.jump_total == 0 and abs(dec.cantor_total - 1.0) <= 1e-12)
    f = get_integrand("area")
    direct, graph = evaluate_F(f, u, opts.q).total, evaluate_F_graph(f, u, opts.q).total
    check("area functional equals 2 by both evaluation paths",
          abs(direct - 2.0) <= 1e-9 and abs(graph - 2.0) <= 1e-9, f"{direct:.12f} / {graph:.12f}")
    fam = make_family("mollified", tuple(j for j in range(3, 9) if opts.jmax is None or j <= opts.jmax),
                      u=u)
    rep = run_experiment(fam, ["abs", "ygrowth-2"], p=opts.p, k=opts.k, q=opts.q, graph=False)
    gap = rep.column("lifting_mass_gap")
    check("lifting mass gap of the mollified family decreases", np.all(np.diff(gap) < 0),
          f"final {gap[-1]:.3e}")
    return rep, ["strict_dist", "area_strict_dist", "lifting_mass_gap"]


def _reproduce_radial(opts, check):
    rows = []
    for name in ("radial_steepening", "radial_mollified"):
        for d in (2, 1):
            fam = make_family(name, None, d=d)
            if opts.jmax is not None:
                fam = replace(fam, index_range=tuple(j for j in fam.index_range if j <= opts.jmax))
            rep = embedding_experiment(fam, q=opts.q)
            if rep.diagnostics:
                raise RuntimeError(rep.diagnostics[0][2])
            col = rep.column("lp_dist")
            if d == 2:
                check(f"{name} d=2: L2 distance decreases below 1e-2",
                      np.all(np.diff(col) < 0) and col[-1] < 1e-2, f"final {col[-1]:.3e}")
            else:
                sup = rep.column("sup_dist")
                check(f"{name} d=1: sup distance stays 1", np.all(np.abs(sup - 1.0) <= 1e-9),
                      f"max deviation {np.max(np.abs(sup - 1.0)):.2e}")
            for r in rep.rows:
                rows.append({"family": name, "d": d, **r})
    return rows, None


REPRODUCIBLE = {
    "oscillation": _reproduce_oscillation,
    "jump-smoothing": _reproduce_jump_smoothing,
    "shifted-jump": _reproduce_shifted_jump,
    "cantor": _reproduce_cantor,
    "radial": _reproduce_radial,
}


@dataclass
class _Options:
    out: Path
    q: QuadratureSpec
    jmax: int | None
    seed: int
    p: float
    k: float | None


def _family(name, opts):
    fam = make_family(name)
    if opts.jmax is not None:
        fam = replace(fam, index_range=tuple(j for j in fam.index_range if j <= opts.jmax))
    return fam


def reproduce(example_id: str, opts: _Options, stream=None) -> int:
    stream = stream or sys.stdout
    if example_id not in REPRODUCIBLE:
        print(f"error: unknown example {example_id!r}; choose from {', '.join(REPRODUCIBLE)}",
              file=sys.stderr)
        return 2
    check = _Checks(stream)
    try:
        result, plot_cols = REPRODUCIBLE[example_id](opts, check)
    except Exception as exc:
        print(f"error: evaluation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    opts.out.mkdir(parents=True, exist_ok=True)
    if isinstance(result, ConvergenceReport):
        if result.diagnostics:
            for j, col, msg in result.diagnostics:
                print(f"error: j={j} {col}: {msg}", file=sys.stderr)
            _emit(opts.out, example_id, result, plot_cols)
            return 2
        _emit(opts.out, example_id, result, plot_cols)
    else:
        cols = ["family", "d", "j", "strict_dist", "lp_dist", "sup_dist"]
        write_csv(opts.out / f"{example_id}.csv", cols, result)
        xs = sorted({r["j"] for r in result if r["d"] == 2})
        lookup = {(r["family"], r["j"]): r["lp_dist"] for r in result if r["d"] == 2}
        write_svg(opts.out / f"{example_id}.svg", "L2 distance (d=2)", xs,
                  {name: [lookup.get((name, x), float("nan")) for x in xs]
                   for name in ("radial_steepening", "radial_mollified")})
    return 0 if check.ok else 1


def run(cfg: ExperimentConfig, stream=None) -> int:
    stream = stream or sys.stdout
    out = Path(cfg.out_dir)
    try:
        fam = cfg.family_object()
        if fam.radial:
            rep = embedding_experiment(fam, q=cfg.quadrature)
            plot = ["strict_dist", "lp_dist", "sup_dist"]
        else:
            fs = [parse_integrand(s) for s in cfg.integrands]
            dictionary = None
            if cfg.dictionary_size:
                rng = np.random.default_rng(cfg.seed)
                dictionary = random_bumps(rng, fam.limit, cfg.dictionary_size)
            rep = run_experiment(fam, fs, p=cfg.p, k=cfg.k, q=cfg.quadrature, graph=cfg.graph,
                                 lifting=cfg.lifting, dictionary=dictionary, workers=cfg.workers)
            plot = ["strict_dist", "area_strict_dist", "l1_dist"]
    except Exception as exc:
        print(f"error: evaluation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(out, cfg.output_name, rep, plot)
    print(f"wrote {out / (cfg.output_name + '.csv')} ({len(rep.rows)} rows)", file=stream)
    for j, col, msg in rep.diagnostics:
        print(f"error: j={j} {col}: {msg}", file=sys.stderr)
    return 2 if rep.diagnostics else 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bvfunctional",
                                 description="BV functional evaluation and convergence experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--quad-tol", type=float, default=None, help="adaptive quadrature tolerance")
    common.add_argument("--cantor-depth", type=int, default=None, help="Cantor staircase depth")
    common.add_argument("--jmax", type=int, default=None, help="largest sequence index")
    common.add_argument("--seed", type=int, default=None, help="seed for random test functions")
    common.add_argument("--p", type=float, default=None, help="exponent of the lp_dist column")
    common.add_argument("--k", type=float, default=None, help="radius for the tail_mass column")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("reproduce", parents=[common], help="reproduce a built-in example")
    r.add_argument("example", help=", ".join(REPRODUCIBLE))
    c = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    c.add_argument("config", help="path to the config file")
    return ap


def _quad(base: QuadratureSpec, args) -> QuadratureSpec:
    kw = {}
    if args.quad_tol is not None:
        kw["ac_tolerance"] = args.quad_tol
    if args.cantor_depth is not None:
        kw["cantor_depth"] = args.cantor_depth
    return replace(base, **kw)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            q = _quad(QuadratureSpec(), args)
            opts = _Options(Path(args.out or "."), q, args.jmax, args.seed or 0,
                            2.0 if args.p is None else args.p, args.k)
            return reproduce(args.example, opts)
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        try:
            cfg = parse_config(text)
        except ConfigError as exc:
            for line, msg in exc.errors:
                print(f"{args.config}:{line}: {type(exc).__name__}: {msg}", file=sys.stderr)
            return 2
        overrides = {"quadrature": _quad(cfg.quadrature, args)}
        for flag, key in (("out", "out_dir"), ("jmax", "jmax"), ("seed", "seed"), ("p", "p"), ("k", "k")):
            if getattr(args, flag) is not None:
                overrides[key] = getattr(args, flag)
        return run(replace(cfg, **overrides))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
