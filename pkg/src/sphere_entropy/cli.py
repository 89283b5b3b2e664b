"""``sphere-entropy`` command-line front end.

    sphere-entropy {constants|envelope|oracle-check|decay|validate} --config <json> [--out <path>] [--svg]

Exit codes: 0 success, 1 configuration or usage error, 2 invariant or
verification failure, 3 resource error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import (
    BoundEnvelope,
    asymptotic_constants_geometric,
    asymptotic_constants_harmonic,
    delta_threshold,
    envelope,
    refined_constants,
    sharper_upper_constant,
)
from .config import RunConfig, load_config
from .decay import (
    WINDOW_GRID,
    decay_check,
    defect_ratio_window,
    holder_constant,
    holder_defect_grid,
    multiplier_table,
    persisted_defect_windows,
)
from .errors import ConfigError, ConvergenceError, DivergenceError, DomainError, ResourceError
from .harmonics import legendre_table
from .kernels import Explicit, Geometric, PolynomialDecay, validate
from .oracle import run_case, standard_suite

__all__ = ["main", "build_parser", "envelope_csv", "envelope_svg", "CSV_HEADER"]

EXIT_OK, EXIT_CONFIG, EXIT_FAILED, EXIT_RESOURCE = 0, 1, 2, 3
CSV_HEADER = (
    "eps",
    "lower_ln_cov",
    "upper_ln_cov",
    "m_lower",
    "m_upper",
    "normalized_lower",
    "normalized_upper",
)
COMMANDS = ("constants", "envelope", "oracle-check", "decay", "validate")
_MAX_WORKERS = 8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for verification failures here
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sphere-entropy",
        description="Covering-number bounds for RKHS unit balls of isotropic kernels on spheres.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="kernel/run configuration (JSON)")
    parser.add_argument("--out", help="output path (CSV for envelope, report text otherwise)")
    parser.add_argument("--svg", action="store_true", help="also write an SVG chart (envelope)")
    return parser


def _fmt(x) -> str:
    return format(float(x), ".17g")


def envelope_csv(env: BoundEnvelope) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in env.rows:
        writer.writerow(
            [
                _fmt(r.eps),
                _fmt(r.lower_ln_cov),
                _fmt(r.upper_ln_cov),
                str(r.m_lower),
                str(r.m_upper),
                _fmt(r.normalized_lower),
                _fmt(r.normalized_upper),
            ]
        )
    return buf.getvalue()


def envelope_svg(env: BoundEnvelope, width: int = 640, height: int = 400) -> str:
    """Line chart of the normalized bounds against ln(1/eps)."""
    left, right, top, bottom = 70, 20, 30, 50
    pts = [
        (math.log(1 / r.eps), r.normalized_lower, r.normalized_upper)
        for r in env.rows
        if math.isfinite(r.normalized_lower) and math.isfinite(r.normalized_upper)
    ]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    ys = [v for p in pts for v in p[1:]] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def sy(y):
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom)

    def polyline(idx, colour):
        coords = " ".join(f"{sx(p[0]):.2f},{sy(p[idx]):.2f}" for p in pts)
        return f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>'

    base = height - bottom
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{base}" x2="{width - right}" y2="{base}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>',
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 12}" text-anchor="middle">ln(1/eps)</text>',
        f'<text x="16" y="{(top + base) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + base) / 2:.1f})">normalized ln C(eps)</text>',
        f'<text x="{left}" y="{base + 16}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{width - right}" y="{base + 16}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{left - 6}" y="{base}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end">{y1:.3g}</text>',
        f'<text x="{left + 10}" y="{top - 10}" fill="#1f77b4">lower</text>',
        f'<text x="{left + 60}" y="{top - 10}" fill="#d62728">upper</text>',
    ]
    if pts:
        lines.append(polyline(1, "#1f77b4"))
        lines.append(polyline(2, "#d62728"))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- commands: each returns (report text, exit code) -------------------------


def _geometric_lines(model: Geometric, d: int, source: str = "") -> list:
    delta = model.delta if model.delta is not None else model.theta
    out = [f"regime: geometric{source}", f"theta = {model.theta:.17g}, delta = {delta:.17g}, a0 = {model.a0:.17g}"]
    out.append("[ratio-bound constants]")
    out += asymptotic_constants_geometric(d, model.theta, delta).lines()[1:]
    out.append("[shifted-normalizer constants]")
    out += refined_constants(d, model.theta, delta, model.a0).lines()[1:]
    out.append("[sharper upper constant, valid when a0 = 1 and a_k <= theta^k]")
    out.append(f"upper constant: {sharper_upper_constant(d, model.theta):.17g}  (rate (ln(1/eps))^{d + 1})")
    if model.a0 != 1.0:
        out.append("note: a0 != 1, the sharper upper constant does not apply")
    thr = delta_threshold(model.theta, d)
    out.append(f"delta threshold: {thr.value:.17g}  (exponent {thr.exponent:.17g}, valid {str(thr.valid).lower()})")
    if thr.warning:
        out.append(f"warning: {thr.warning}")
    return out


def _polynomial_lines(model: PolynomialDecay, d: int, source: str = "") -> list:
    c = asymptotic_constants_harmonic(d, model.c1, model.beta, model.c2, model.rho, model.a0)
    out = c.lines()
    out[0] += source
    return out


def cmd_constants(cfg: RunConfig):
    model, d = cfg.kernel, cfg.d
    warnings = []
    if isinstance(model, Explicit):
        if model.tail is None:
            warnings.append("warning: explicit coefficients without a tail model; no asymptotic constants apply")
            return "regime undetermined\n", EXIT_OK, warnings
        source = " (from the tail model; prefix coefficients do not affect the limits)"
        model = model.tail
    else:
        source = ""
    if isinstance(model, Geometric):
        lines = _geometric_lines(model, d, source)
    else:
        lines = _polynomial_lines(model, d, source)
    return "\n".join(lines) + "\n", EXIT_OK, warnings


def cmd_envelope(cfg: RunConfig, out: Optional[str], svg: bool):
    workers = min(_MAX_WORKERS, os.cpu_count() or 1)
    env = envelope(cfg.kernel, cfg.d, cfg.eps_grid, workers=workers)
    text = envelope_csv(env)
    code = EXIT_OK
    warnings = []
    if any(r.lower_ln_cov > r.upper_ln_cov for r in env.rows):
        warnings.append("error: lower bound exceeds upper bound in some row")
        code = EXIT_FAILED
    want_svg = svg or cfg.format == "csv+svg"
    target = out or cfg.output
    if target is None:
        if want_svg:
            raise ConfigError("output", "an output path is required to write the SVG chart")
        return text, code, warnings
    path = Path(target)
    _write(path, text)
    if want_svg:
        _write(path.with_suffix(".svg"), envelope_svg(env))
    return None, code, warnings


def cmd_oracle_check(cfg: RunConfig):
    lines, failed = [], False
    for case in standard_suite(cfg.kernel, cfg.d):
        res = run_case(case)
        head = f"{res.status:4s}  {case.label:<24s} n={case.ellipsoid.n} eps={case.eps:.6g} bound={res.bound:.6g}"
        if res.count is None:
            lines.append(f"{head}  ({res.message})")
        else:
            lines.append(f"{head} upper_count={res.count.upper_count} lower_count={res.count.lower_count}")
        failed |= res.status == "fail"
    n_pass = sum(ln.startswith("pass") for ln in lines)
    n_skip = sum(ln.startswith("skip") for ln in lines)
    lines.append(f"summary: {n_pass} pass, {len(lines) - n_pass - n_skip} fail, {n_skip} skip")
    return "\n".join(lines) + "\n", EXIT_FAILED if failed else EXIT_OK, []


_IDENTITY_T = (0.01, 0.1, 1.0)
_HOLDER_T = tuple(np.geomspace(1e-3, 1.0, 10))
_HOLDER_S = (-1.0, -0.5, 0.0, 0.5, 1.0)


def cmd_decay(cfg: RunConfig):
    model, d = cfg.kernel, cfg.d
    failed = False
    lines = [f"[defect-ratio windows, k <= {WINDOW_GRID['k_max']}, t in [{WINDOW_GRID['t_min']:g}, {WINDOW_GRID['t_max']:g}]]"]
    stored = persisted_defect_windows()["windows"]
    for r in (1, 2, 3):
        lo, hi = defect_ratio_window(d, r)
        line = f"d={d} r={r}: c_lo={lo:.6g} c_hi={hi:.6g}"
        ref = stored.get(f"d={d},r={r}")
        if ref:
            line += f"  (persisted {ref[0]:.6g}, {ref[1]:.6g})"
        lines.append(line)

    ident = multiplier_table(d, 1, 200, np.array(_IDENTITY_T)) - legendre_table(d, 200, np.cos(_IDENTITY_T))
    gap = float(np.max(np.abs(ident)))
    ok = gap <= 1e-12
    failed |= not ok
    lines.append(f"r=1 identity m_1(k,t) = P_k(cos t), k <= 200: max gap {gap:.3g} ({'ok' if ok else 'FAILED'})")

    lines.append("[Hoelder defects |I_t| / t^(2r) over t in [1e-3, 1], s in {-1,-0.5,0,0.5,1}]")
    for r in (1, 2):
        try:
            c = holder_constant(model, d, r)
        except DivergenceError as exc:
            lines.append(f"r={r}: constant diverges ({exc})")
            continue
        try:
            values, err = holder_defect_grid(model, d, r, _HOLDER_T, _HOLDER_S, tol=1e-13)
        except ConvergenceError as exc:
            lines.append(f"r={r}: truncation did not converge ({exc})")
            continue
        t = np.array(_HOLDER_T)[:, None]
        ratio = float(np.max((np.abs(values) - err) / t ** (2 * r)))
        ok = ratio <= c
        failed |= not ok
        lines.append(f"r={r}: max ratio {ratio:.6g}, empirical constant {c:.6g} ({'ok' if ok else 'FAILED'})")

    sup, satisfied = decay_check(model, d)
    lines.append(f"decay check a_k k^{d}, k <= 1000: sup {sup:.6g}, satisfied={str(satisfied).lower()}")
    return "\n".join(lines) + "\n", EXIT_FAILED if failed else EXIT_OK, []


def cmd_validate(cfg: RunConfig):
    report = validate(cfg.kernel)
    return "\n".join(report.lines()) + "\n", EXIT_OK if report.ok else EXIT_FAILED, []


def _dispatch(args) -> int:
    cfg = load_config(args.config)
    if args.command == "envelope":
        text, code, warnings = cmd_envelope(cfg, args.out, args.svg)
    else:
        if args.svg:
            raise UsageError("--svg applies to the envelope command only")
        handler = {
            "constants": cmd_constants,
            "oracle-check": cmd_oracle_check,
            "decay": cmd_decay,
            "validate": cmd_validate,
        }[args.command]
        text, code, warnings = handler(cfg)
        if args.out:
            _write(Path(args.out), text)
    for w in warnings:
        print(w, file=sys.stderr)
    if text is not None:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sphere-entropy: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"sphere-entropy: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"sphere-entropy: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, MemoryError) as exc:
        print(f"sphere-entropy: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"sphere-entropy: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ConvergenceError, DivergenceError) as exc:
        print(f"sphere-entropy: failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
