"""Command-line front end: every verb writes plot-ready CSV.

Exit codes: 0 ok, 1 a rate claim failed, 2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from .best_approx import remez
from .expansion import (
    PhiFunction,
    error_sequences,
    expansion_coeffs,
    default_grid,
    phi_eval,
    partial_sums,
)
from .jacobi_core import JacobiParams, pointwise_bound
from .quadrature import QuadratureWarning
from .rate_analysis import (
    ANCHORS,
    claim_suite,
    fit_rate,
    reports_to_csv,
    run_claims,
    xi_expected_slope,
    xi_sweep,
)

EXIT_OK, EXIT_CLAIM, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

VERBS = ("coeffs", "error-curve", "rate-table", "remez-compare", "xi-sweep", "verify")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    kind: str = "interior_plus"
    a: float = 0.25
    lam: float = 0.5
    z: str = "one"
    alpha: float = 0.0
    beta: float = 0.0
    n: int = 100
    nmax: int = 64
    nrange: tuple[int, int] = (8, 128)
    grid: int = 2001
    out: str | None = None
    figure: str | None = None
    claim: str | None = None
    anchor: str | None = None
    extras: dict = field(default_factory=dict)

    def phi(self) -> PhiFunction:
        try:
            return PhiFunction(self.kind, self.a, self.lam, self.z)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def params(self) -> JacobiParams:
        try:
            p = JacobiParams(self.alpha, self.beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            self.phi().check_params(p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return p


def _nrange(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--nrange expects lo:hi, got {text!r}") from exc
    if not 1 <= lo < hi:
        raise ConfigError("--nrange needs 1 <= lo < hi")
    return lo, hi


_KEYMAP = {"lambda": "lam"}
_CASTS = {"a": float, "lam": float, "alpha": float, "beta": float, "n": int, "nmax": int, "grid": int}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[_KEYMAP.get(k, k).replace("-", "_")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--kind", help="interior_plus | interior_minus | interior_abs | step | boundary_right | boundary_left")
    common.add_argument("--a", type=float, help="singular point in (-1, 1)")
    common.add_argument("--lambda", dest="lam", type=float, help="exponent > -1")
    common.add_argument("--z", help="smooth factor: one, exp, cos or poly:c0,c1,...")
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--n", type=int, help="degree")
    common.add_argument("--nmax", type=int, help="largest degree")
    common.add_argument("--nrange", help="degree range lo:hi")
    common.add_argument("--grid", type=int, help="number of x points")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--figure", help="restrict to the claims of one figure, e.g. 1.5")
    common.add_argument("--claim", help="substring filter on claim ids and tags")
    common.add_argument("--anchor", choices=ANCHORS, help="xi-sweep anchor (default: all)")

    parser = argparse.ArgumentParser(prog="phi-spectral", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "coeffs": "Jacobi coefficients a_0..a_nmax as k,coeff",
        "error-curve": "pointwise truncation and best-approximation errors at fixed n",
        "rate-table": "run the rate claims and write one CSV row per claim",
        "remez-compare": "sup errors of truncation, best approximation and the weighted error over n",
        "xi-sweep": "growth of the pointwise constant near a and the endpoints",
        "verify": "run the rate claims and print PASS/FAIL lines",
    }
    for verb in VERBS:
        sub.add_parser(verb, parents=[common], help=helps[verb])
    return parser


def resolve(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    merged = read_config_file(ns.config) if ns.config else {}
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        merged[k] = v
    names = {f.name for f in fields(RunConfig)}
    for k, v in merged.items():
        if k not in names or k in ("command", "extras"):
            raise ConfigError(f"unknown setting {k!r}")
        try:
            if k == "nrange":
                v = _nrange(v) if isinstance(v, str) else v
            elif k in _CASTS:
                v = _CASTS[k](v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
        setattr(cfg, k, v)
    if cfg.n < 0 or cfg.nmax < 0:
        raise ConfigError("degrees must be nonnegative")
    if cfg.command == "error-curve" and cfg.grid < 1000:
        raise ConfigError("error-curve needs --grid >= 1000")
    return cfg


def _g(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _rows(header, rows) -> str:
    out = [",".join(header)]
    out += [",".join(r if isinstance(r, str) else _g(r) for r in row) for row in rows]
    return "\n".join(out) + "\n"


def cmd_coeffs(cfg: RunConfig) -> tuple[str, int]:
    f, p = cfg.phi(), cfg.params()
    return expansion_coeffs(f, p, cfg.nmax, check=True).to_csv(), EXIT_OK


def _shape_bound(f: PhiFunction, p: JacobiParams, n: int, x: np.ndarray) -> np.ndarray:
    """Constant-free decay profile of the pointwise estimate."""
    pb = pointwise_bound(p, n, x)
    with np.errstate(divide="ignore"):
        if f.kind == "boundary_right":
            return pb * (n + 1.0) ** (-2 * f.lam - p.alpha - 1) / (1 - x)
        if f.kind == "boundary_left":
            return pb * (n + 1.0) ** (-2 * f.lam - p.beta - 1) / (1 + x)
        return pb * (n + 1.0) ** (-f.lam - 0.5) / np.abs(x - f.a)


def cmd_error_curve(cfg: RunConfig) -> tuple[str, int]:
    f, p = cfg.phi(), cfg.params()
    n = cfg.n
    if n > 200:
        raise ConfigError("error-curve compares with the best approximation, which is limited to n <= 200")
    x = np.linspace(-1.0, 1.0, cfg.grid)
    t = expansion_coeffs(f, p, n)
    fx = phi_eval(f, x)
    e = np.abs(fx - partial_sums(t, x)[n])
    best = remez(f, n)
    b_err = fx - best.evaluate(x)
    bound = _shape_bound(f, p, n, x)
    return _rows(["x", "error", "best_error", "bound"], zip(x, e, b_err, bound)), EXIT_OK


def _degrees(lo: int, hi: int) -> list[int]:
    out, n = [], lo
    while n < hi:
        out.append(n)
        n *= 2
    out.append(hi)
    return out


def cmd_remez_compare(cfg: RunConfig) -> tuple[str, int]:
    f, p = cfg.phi(), cfg.params()
    lo, hi = cfg.nrange
    if hi > 200:
        raise ConfigError("remez-compare runs the exchange up to degree 200 only")
    ns = _degrees(lo, hi)
    t = expansion_coeffs(f, p, hi)
    weighted = "weighted_hat" if f.is_interior else "weighted_boundary"
    seqs = error_sequences(f, t, default_grid(f), ("maxnorm", weighted))
    best = [remez(f, n).error for n in ns]
    trunc = [seqs["maxnorm"][n] for n in ns]
    hat = [seqs[weighted][n] for n in ns]
    text = _rows(["n", "maxerr_trunc", "maxerr_best", "maxerr_hat"], ([str(n), a, b, c] for n, a, b, c in zip(ns, trunc, best, hat)))
    slopes = []
    for col in (trunc, best, hat):
        try:
            slopes.append(fit_rate(ns, col).slope)
        except ValueError:
            slopes.append(math.nan)
    text += "# slope," + ",".join(_g(s) for s in slopes) + "\n"
    return text, EXIT_OK


def select_claims(cfg: RunConfig):
    claims = claim_suite()
    if cfg.figure:
        tag = cfg.figure if cfg.figure.startswith("fig") else f"fig{cfg.figure}"
        claims = [c for c in claims if tag in c.tags]
    if cfg.claim:
        claims = [c for c in claims if cfg.claim in c.id or cfg.claim in c.tags]
    if not claims:
        raise ConfigError("no claim matches the filter")
    return claims


def cmd_rate_table(cfg: RunConfig) -> tuple[str, int]:
    reports = run_claims(select_claims(cfg))
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_CLAIM
    return reports_to_csv(reports), code


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    reports = run_claims(select_claims(cfg))
    lines = [r.line() for r in reports]
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} claims passed")
    return "\n".join(lines) + "\n", EXIT_OK if failed == 0 else EXIT_CLAIM


def cmd_xi_sweep(cfg: RunConfig) -> tuple[str, int]:
    f, p = cfg.phi(), cfg.params()
    if not f.is_interior:
        raise ConfigError("xi-sweep needs an interior singularity")
    n = cfg.n
    t = expansion_coeffs(f, p, n)
    anchors = [cfg.anchor] if cfg.anchor else list(ANCHORS)
    rows, code = [], EXIT_OK
    for an in anchors:
        fit = xi_sweep(f, p, n, an, table=t)
        exp = xi_expected_slope(f, p, an)
        ok = abs(fit.slope - exp) <= 0.15
        code = code if ok else EXIT_CLAIM
        rows.append([an, exp, fit.slope, fit.residual, str(ok).lower()])
    return _rows(["anchor", "expected_slope", "measured_slope", "residual", "pass"], rows), code


COMMANDS = {
    "coeffs": cmd_coeffs,
    "error-curve": cmd_error_curve,
    "rate-table": cmd_rate_table,
    "remez-compare": cmd_remez_compare,
    "xi-sweep": cmd_xi_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve(ns)
        with warnings.catch_warnings():
            warnings.simplefilter("error", QuadratureWarning)
            text, code = COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError, QuadratureWarning, MemoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
