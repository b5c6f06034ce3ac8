"""Command-line interface: ``eplr <command> ...``.

Exit status is 0 on success, 2 for invalid usage and 3 when a built-in
verification fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from typing import Sequence

import numpy as np

from .cbc import cbc_fast, criterion_B, criterion_pointwise, dual_oracle_prefixes
from .errors import ResourceError, UsageError, VerificationError
from .extrapolation import ExtrapolationScheme
from .gfpoly import build_field_table, find_irreducible
from .matvec import ROW_ORDER, build_profile, fast_product, naive_product
from .pointset import LatticeRule, generate_points, write_points
from .quadrature import convergence_sweep, eplr_integrate, make_integrand
from .rulefile import (
    RuleEntry,
    RuleFile,
    format_float,
    parse_weights,
    read_rule_file,
    serialize,
    write_rule_file,
)
from .walsh import C_alpha_default, H_product, WeightModel, cbc_bound, existence_bound


def resolve_c_alpha(value: str | None, alpha: int, b: int) -> float:
    """``--c-alpha``: a number, "lemma" for the closed-form constant, or None
    for the default (1 when b = 2, the closed form otherwise)."""
    if value is None:
        return 1.0 if b == 2 else C_alpha_default(alpha, b)
    if value == "lemma":
        return C_alpha_default(alpha, b)
    try:
        c = float(value)
    except ValueError:
        raise UsageError(f"--c-alpha expects a number or 'lemma', got {value!r}") from None
    if not c > 0:
        raise UsageError("--c-alpha must be positive")
    return c


def kernel_alpha(alpha: int) -> int:
    """Smoothness used by the construction criterion for a chain of order alpha.

    The kernel w_alpha diverges at the origin for alpha = 1, so a single plain
    rule is built with the alpha = 2 criterion.
    """
    return max(alpha, 2)


def _model(b: int, alpha: int, s: int, weights: str, c_alpha: float) -> WeightModel:
    return WeightModel(parse_weights(weights, s), alpha=kernel_alpha(alpha), base=b, c_alpha=c_alpha)


def _model_from_file(rf: RuleFile) -> WeightModel:
    return _model(rf.base, rf.alpha, rf.s, rf.weights, rf.c_alpha)


def _integrand(name: str, s: int, gamma, args) -> object:
    if name in ("f1", "f2"):
        extra = {"c1": args.c1} if name == "f1" else {"c2": args.c2}
        return make_integrand(name, s=s, gamma=gamma, **extra)
    if name == "constant":
        return make_integrand(name, s=s, value=args.value)
    return make_integrand(name)


# --- commands -----------------------------------------------------------------


def cmd_construct(args) -> int:
    if args.m < args.alpha:
        raise UsageError(f"need m >= alpha (got m={args.m}, alpha={args.alpha}): "
                         "the chain uses sizes b^(m-alpha+1), ..., b^m")
    if args.alpha < 1:
        raise UsageError("alpha must be at least 1")
    ca = resolve_c_alpha(args.c_alpha, kernel_alpha(args.alpha), args.base)
    model = _model(args.base, args.alpha, args.s, args.weights, ca)
    rf = RuleFile(args.base, args.alpha, args.weights, ca, args.s)
    for m in range(args.m - args.alpha + 1, args.m + 1):
        rep = cbc_fast(args.base, m, args.s, model)
        rf.entries.append(RuleEntry(rep.rule, rep.criterion, rep.bound))
        print(f"m={m} N={rep.rule.n_points} criterion={rep.criterion:.6e} "
              f"bound={rep.bound:.6e} time={rep.wall_time:.3f}s", file=sys.stderr)
    text = serialize(rf)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_rule_file(rf, args.out)
    return 0


def cmd_integrate(args) -> int:
    rf = read_rule_file(args.rule_file)
    f = _integrand(args.integrand, rf.s, rf.gamma(), args)
    alpha = rf.alpha if args.alpha is None else args.alpha
    if alpha > len(rf.entries):
        raise UsageError(f"file holds {len(rf.entries)} rules, alpha={alpha} requested")
    chain = sorted((e.rule for e in rf.entries), key=lambda r: r.m)[-alpha:]
    rep = eplr_integrate(f, chain, ExtrapolationScheme(rf.base, alpha))
    print(f"estimate {rep.estimate!r}")
    for r, v in zip(sorted(chain, key=lambda r: -r.m), rep.per_rule_estimates):
        print(f"rule m={r.m} N={r.n_points} estimate {v!r}")
    print(f"N {rep.total_points}")
    if rep.error is not None:
        print(f"exact {f.exact_integral!r}")
        print(f"abs_error {rep.error!r}")
    return 0


def render_svg(xs, ys, alpha: int, base: int, width: int = 480, height: int = 360) -> str:
    """Log-log error plot: one data polyline and dotted guides of slopes -alpha, -(alpha-1)."""
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        raise UsageError("nothing to plot: no positive errors")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y_lo, y_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1
    anchor = pts[0]
    guides = []
    for slope in (-alpha, -(alpha - 1)):
        guides.append((slope, anchor[1], anchor[1] + slope * (x1 - x0)))
        y_lo = min(y_lo, anchor[1] + slope * (x1 - x0))
    if y_hi == y_lo:
        y_hi = y_lo + 1
    pad = 50

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<path class="axis" d="M{pad},{pad} V{height - pad} H{width - pad}" '
        'stroke="black" fill="none"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">'
        f'log_{base} N</text>',
        f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})" '
        f'text-anchor="middle">log_{base} |error|</text>',
    ]
    for slope, ya, yb in guides:
        out.append(
            f'<line class="guide" x1="{sx(x0):.2f}" y1="{sy(ya):.2f}" x2="{sx(x1):.2f}" '
            f'y2="{sy(yb):.2f}" stroke="gray" stroke-dasharray="2,4"/>'
        )
        out.append(f'<text x="{sx(x1) + 4:.2f}" y="{sy(yb):.2f}" font-size="11">'
                   f'slope {slope}</text>')
    coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
    out.append(f'<polyline class="data" points="{coords}" fill="none" stroke="blue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_converge(args) -> int:
    if args.m_max < args.m_min:
        raise UsageError(f"empty m range {args.m_min}..{args.m_max}")
    ca = resolve_c_alpha(args.c_alpha, kernel_alpha(args.alpha), args.base)
    model = _model(args.base, args.alpha, args.s, args.weights, ca)
    f = _integrand(args.integrand, args.s, model.gamma, args)
    result = convergence_sweep(f, args.base, args.alpha, range(args.m_min, args.m_max + 1), model)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "N", "estimate", "abs_error", "fitted_rate"])
    for row in result.rows:
        w.writerow([row.m, row.N, repr(row.estimate), repr(row.abs_error), format_float(result.rate)])
    _emit(buf.getvalue(), args.csv)
    print(f"fitted rate {format_float(result.rate)}", file=sys.stderr)
    if args.svg:
        xs, ys = result.log_points()
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(xs, ys, args.alpha, args.base))
    return 0


def cmd_criterion(args) -> int:
    rf = read_rule_file(args.rule_file)
    model = _model_from_file(rf)
    m = max(rf.m_values) if args.m is None else args.m
    rule = rf.rule_for(m)
    lams = [float(x) for x in args.lambdas.split(",")]
    bt = criterion_pointwise(rule, model)
    b_id = criterion_B(rule, model)
    values, tails = dual_oracle_prefixes(rule, model, args.T)
    print(f"m {m}")
    print(f"criterion_tilde {bt!r}")
    print(f"criterion_B {b_id!r}")
    print(f"dual_oracle {values[-1]!r} tail {tails[-1]!r} (T={args.T})")
    print(f"H_product {H_product(model, rule.s)!r}")
    failed = []
    if abs(values[-1] - b_id) > tails[-1] + 1e-9 * max(1.0, abs(b_id)):
        failed.append("dual oracle disagrees with the point-sum criterion")
    for lam in lams:
        cb = cbc_bound(model, rule.s, m, lam)
        eb = existence_bound(model, rule.s, m, lam)
        print(f"lambda {lam} cbc_bound {cb!r} existence_bound {eb!r}")
        for d, (v, t) in enumerate(zip(values, tails), 1):
            if v + t > cbc_bound(model, d, m, lam):
                failed.append(f"prefix d={d} exceeds the CBC bound at lambda={lam}")
    if failed:
        raise VerificationError("; ".join(failed))
    return 0


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_matvec_bench(args) -> int:
    if args.m_max < args.m_min:
        raise UsageError(f"empty m range {args.m_min}..{args.m_max}")
    rng = np.random.default_rng(args.seed)
    b, s, t = args.base, args.s, args.t
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "s", "t", "time_fast", "time_naive"])
    for m in range(args.m_min, args.m_max + 1):
        table = build_field_table(find_irreducible(b, m))
        gen = tuple(table.exp_of(int(z)) for z in rng.integers(0, table.order, size=s))
        rule = LatticeRule(b, m, table.modulus, gen)
        profile = build_profile(rule, table)
        A = rng.standard_normal((s, t))
        fast = fast_product(profile, A)
        naive = naive_product(rule, A, table)
        err = float(np.max(np.abs(fast - naive)))
        if err > 1e-10:
            raise VerificationError(f"m={m}: fast and naive products differ by {err:.3e}")
        tf = _best_time(lambda: fast_product(profile, A), args.repeat)
        tn = _best_time(lambda: naive_product(rule, A, table), args.repeat)
        w.writerow([b**m, s, t, f"{tf:.6e}", f"{tn:.6e}"])
    _emit(buf.getvalue(), args.csv)
    return 0


def _best_time(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(max(repeat, 1)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_points(args) -> int:
    rf = read_rule_file(args.rule_file)
    m = max(rf.m_values) if args.m is None else args.m
    rule = rf.rule_for(m)
    pts = generate_points(rule)
    if args.order == "generator":
        table = build_field_table(rule.modulus)
        order = np.concatenate([[0], np.asarray(table.exp, dtype=np.int64)])
        pts = type(pts)(pts.numerators[order], pts.denominator, rule)
    buf = io.StringIO()
    if args.order == "generator":
        buf.write(f"# {ROW_ORDER}\n")
    write_points(pts, buf)
    _emit(buf.getvalue(), args.out)
    return 0


# --- parser -------------------------------------------------------------------


def _add_weights(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", default="j^-2", help="j^-2, const:0.5 or a comma list")
    p.add_argument("--c-alpha", default=None, help="number or 'lemma' (default 1 for b=2)")


def _add_integrand_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c1", type=float, default=1.3, help="exponent of f1")
    p.add_argument("--c2", type=int, default=1, choices=(1, 2), help="exponent of f2")
    p.add_argument("--value", type=float, default=1.0, help="value of the constant integrand")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eplr", description="Extrapolated polynomial lattice rules over F_b."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build an alpha-chain of rules by fast CBC")
    p.add_argument("--base", "-b", type=int, default=2)
    p.add_argument("-m", type=int, required=True, help="log_b of the largest rule size")
    p.add_argument("-s", type=int, required=True, help="dimension")
    p.add_argument("--alpha", type=int, default=2)
    _add_weights(p)
    p.add_argument("--out", "-o", default=None, help="rule file (stdout if omitted)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("integrate", help="apply a rule file to a built-in integrand")
    p.add_argument("rule_file")
    p.add_argument("--integrand", required=True)
    p.add_argument("--alpha", type=int, default=None, help="defaults to the file's alpha")
    _add_integrand_params(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("converge", help="error sweep over m, CSV and optional SVG")
    p.add_argument("--base", "-b", type=int, default=2)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("-s", type=int, required=True)
    p.add_argument("--integrand", required=True)
    p.add_argument("--m-min", type=int, required=True)
    p.add_argument("--m-max", type=int, required=True)
    _add_weights(p)
    _add_integrand_params(p)
    p.add_argument("--csv", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--svg", default=None, help="optional log-log plot")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("criterion", help="criterion values and bounds for a stored rule")
    p.add_argument("rule_file")
    p.add_argument("--m", type=int, default=None, help="which rule of the chain (default largest)")
    p.add_argument("--lambdas", default="1,0.75")
    p.add_argument("-T", type=int, default=60, help="dual-lattice truncation level")
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("matvec-bench", help="time fast versus naive X A products")
    p.add_argument("--base", "-b", type=int, default=2)
    p.add_argument("--m-min", type=int, default=8)
    p.add_argument("--m-max", type=int, default=14)
    p.add_argument("-s", type=int, default=10)
    p.add_argument("-t", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_matvec_bench)

    p = sub.add_parser("points", help="write the points of a stored rule")
    p.add_argument("rule_file")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--order", choices=("natural", "generator"), default="natural")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_points)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ResourceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
