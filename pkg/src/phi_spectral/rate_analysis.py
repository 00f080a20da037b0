"""Log-log rate fits and the claim-by-claim verification harness."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .expansion import (
    ERROR_FLOOR,
    PhiFunction,
    default_grid,
    error_sequences,
    expansion_coeffs,
    pointwise_error,
)
from .jacobi_core import JacobiParams
from .kernel_error import quotient_coeffs

__all__ = [
    "InsufficientData",
    "RateFit",
    "fit_rate",
    "octave_envelope",
    "local_peaks",
    "LOCATIONS",
    "RateClaim",
    "expected_slope",
    "make_claim",
    "claim_suite",
    "ClaimReport",
    "verify_claim",
    "run_claims",
    "reports_to_csv",
    "xi_sweep",
    "xi_expected_slope",
    "ANCHORS",
    "default_xis",
    "error_measure",
    "no_log_ratio",
    "DEFAULT_NS",
    "thread_count",
]

DEFAULT_NS = np.arange(64, 4097)


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    n_range: tuple[float, float]
    envelope: bool
    n_points: int

    def predict(self, n):
        return np.exp(self.intercept) * np.asarray(n, dtype=float) ** self.slope


def octave_envelope(ns, values, drop_sparse_tail: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Per-octave maxima of |values|, keyed by the octave's lower edge 2^j.

    A trailing octave holding far fewer samples than the others (e.g. the lone
    n = 4096 of the range 64..4096) would bias the fit and is dropped.
    """
    ns = np.asarray(ns, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    g = np.floor(np.log2(ns) + 1e-12).astype(int)
    octs = np.unique(g)
    counts = np.array([np.sum(g == j) for j in octs])
    if drop_sparse_tail and len(octs) > 1 and counts[-1] < 0.25 * np.median(counts[:-1]):
        octs = octs[:-1]
    xs = np.array([2.0**j for j in octs])
    ys = np.array([v[g == j].max() for j in octs])
    return xs, ys


def local_peaks(ns, values) -> tuple[np.ndarray, np.ndarray]:
    """Samples that exceed both neighbours (interior local maxima of |values|)."""
    ns = np.asarray(ns, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    idx = signal.argrelmax(v)[0]
    return ns[idx], v[idx]


def fit_rate(ns, errors, envelope: bool | str = False, floor: float = ERROR_FLOOR) -> RateFit:
    """Least-squares slope of log(error) against log(n).

    Samples at or under ``floor`` are discarded. ``envelope=True`` fits the
    per-octave maxima; ``envelope="peaks"`` fits every local maximum, which is
    steadier when the sequence oscillates only a few times per octave.
    """
    ns = np.asarray(ns, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    if ns.shape != e.shape:
        raise ValueError("ns and errors differ in length")
    keep = np.isfinite(e) & (e > floor) & (ns > 0)
    ns, e = ns[keep], e[keep]
    if envelope == "peaks":
        ns, e = local_peaks(ns, e)
    elif envelope and ns.size:
        ns, e = octave_envelope(ns, e)
    if ns.size < 4:
        raise InsufficientData(f"need at least 4 usable samples, have {ns.size}")
    lx, ly = np.log(ns), np.log(e)
    slope, intercept = np.polyfit(lx, ly, 1)
    res = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return RateFit(float(slope), float(intercept), res, (float(ns.min()), float(ns.max())), bool(envelope), int(ns.size))


# ---------------------------------------------------------------------------
# claims

LOCATIONS = (
    "interior",  # fixed x away from a and +-1
    "singular",  # x = a
    "endpoint_right",  # x = 1
    "endpoint_left",  # x = -1
    "maxnorm",
    "weighted_hat",
    "weighted_tilde",
    "weighted_boundary",
    "coeff_interior",  # |a_n(x; g)| at x != a
    "coeff_singular",  # |a_n(a; g)|
)


def _is_even_int(lam: float) -> bool:
    return lam >= 0 and lam == int(lam) and int(lam) % 2 == 0


def expected_slope(f: PhiFunction, p: JacobiParams, location: str) -> float:
    """Predicted log-log slope of the error measure at ``location``."""
    lam, al, be = f.lam, p.alpha, p.beta
    if f.kind in ("boundary_right", "boundary_left"):
        own, other = (al, be) if f.kind == "boundary_right" else (be, al)
        near = "endpoint_right" if f.kind == "boundary_right" else "endpoint_left"
        if location in ("interior", "weighted_boundary"):
            return -2 * lam - own - 1.5
        if location == near:
            return -2 * lam
        if location == "maxnorm":
            return -2 * lam + max(0.0, other - own - 1)
        raise ValueError(f"no rate for location {location!r} with an endpoint singularity")
    if location == "interior":
        return -lam - 1
    if location == "endpoint_right":
        return -lam + al - 0.5
    if location == "endpoint_left":
        return -lam + be - 0.5
    if location == "singular":
        return -lam - 1 if _is_even_int(lam) else -lam
    if location == "maxnorm":
        m = max(al, be)
        return m - 0.5 - lam if m > 0.5 else -lam
    if location == "weighted_hat":
        return -lam - 1
    if location == "weighted_tilde":
        return -lam
    if location == "coeff_interior":
        return -lam - 0.5
    if location == "coeff_singular":
        return -lam + 0.5
    raise ValueError(f"unknown location {location!r}")


@dataclass(frozen=True)
class RateClaim:
    id: str
    f_spec: PhiFunction
    params: JacobiParams
    location: str
    x: float | None = None
    expected_slope: float = 0.0
    tolerance: float = 0.1
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.location not in LOCATIONS:
            raise ValueError(f"unknown location {self.location!r}")
        if self.location in ("interior", "coeff_interior") and self.x is None:
            raise ValueError("interior claims need x")


def make_claim(
    id: str,
    f: PhiFunction,
    p: JacobiParams,
    location: str,
    x: float | None = None,
    tolerance: float = 0.1,
    tags: tuple[str, ...] = (),
) -> RateClaim:
    """Build a claim; the expected slope always comes from :func:`expected_slope`."""
    return RateClaim(id, f, p, location, x, expected_slope(f, p, location), tolerance, tags)


def _fmt(v: float) -> str:
    return f"{v:g}"


def claim_suite() -> list[RateClaim]:
    """The canonical claim table."""
    a = 0.25
    P = {
        "leg": JacobiParams(0, 0),
        "cheb": JacobiParams(-0.5, -0.5),
        "cheb2": JacobiParams(0.5, 0.5),
        "big": JacobiParams(1.5, 1.5),
    }
    out: list[RateClaim] = []
    for pk in ("leg", "cheb", "cheb2"):
        p = P[pk]
        for lam in (-1 / 3, 1 / 3, 0.5, 1.0):
            f = PhiFunction("interior_plus", a, lam)
            for x in (-0.5, 0.5):
                out.append(make_claim(f"interior/{pk}/lam={_fmt(lam)}/x={_fmt(x)}", f, p, "interior", x, tags=("interior", "fig1.4", "fig1.5")))
            out.append(make_claim(f"endpoint/{pk}/lam={_fmt(lam)}", f, p, "endpoint_right", tags=("endpoint", "fig1.5")))
            if lam > 0:
                out.append(make_claim(f"singular/{pk}/lam={_fmt(lam)}", f, p, "singular", tags=("singular", "fig1.5")))
    # a = 0 would make the Legendre error at the jump vanish by symmetry
    out.append(make_claim("singular/leg/step", PhiFunction("step", a), P["leg"], "singular", tags=("singular",)))
    out.append(
        make_claim("singular/leg/lam=2/even", PhiFunction("interior_plus", a, 2.0), P["leg"], "singular", tolerance=0.15, tags=("singular", "even"))
    )
    for pk in ("leg", "cheb", "cheb2", "big"):
        for lam in (0.5, 1.0):
            f = PhiFunction("interior_abs", a, lam)
            tol = 0.1 if max(P[pk].alpha, P[pk].beta) <= 0.5 else 0.15
            out.append(make_claim(f"maxnorm/{pk}/lam={_fmt(lam)}", f, P[pk], "maxnorm", tolerance=tol, tags=("maxnorm", "fig16")))
    for lam in (0.5, 2.0):
        f = PhiFunction("interior_plus", a, lam)
        out.append(make_claim(f"weighted_hat/leg/lam={_fmt(lam)}", f, P["leg"], "weighted_hat", tags=("weighted", "fig1.3", "fig51")))
        out.append(make_claim(f"weighted_tilde/leg/lam={_fmt(lam)}", f, P["leg"], "weighted_tilde", tags=("weighted", "fig51")))
    f1 = PhiFunction("boundary_right", lam=0.5)
    out.append(make_claim("boundary/f1/interior", f1, P["leg"], "interior", x=0.0, tolerance=0.15, tags=("boundary", "fig61")))
    out.append(make_claim("boundary/f1/x=1", f1, P["leg"], "endpoint_right", tags=("boundary", "fig61")))
    out.append(make_claim("boundary/f1/maxnorm", f1, P["leg"], "maxnorm", tags=("boundary", "fig61")))
    out.append(make_claim("boundary/f1/weighted", f1, P["leg"], "weighted_boundary", tolerance=0.15, tags=("boundary", "fig61")))
    f2 = PhiFunction("boundary_left", lam=2 / 3)
    out.append(make_claim("boundary/f2/maxnorm", f2, P["leg"], "maxnorm", tags=("boundary", "fig61")))
    for lam in (1 / 3, 0.5):
        f = PhiFunction("interior_plus", a, lam)
        out.append(make_claim(f"coeff/leg/lam={_fmt(lam)}/x=-0.5", f, P["leg"], "coeff_interior", x=-0.5, tags=("coeff",)))
        out.append(make_claim(f"coeff/leg/lam={_fmt(lam)}/x=a", f, P["leg"], "coeff_singular", tags=("coeff",)))
    return out


@dataclass(frozen=True)
class ClaimReport:
    claim_id: str
    expected_slope: float
    measured_slope: float
    residual: float
    passed: bool
    tolerance: float
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.claim_id}: measured {self.measured_slope:+.4f}, "
            f"expected {self.expected_slope:+.4f} +- {self.tolerance}"
            + (f" ({self.note})" if self.note else "")
        )


def _claim_x(c: RateClaim) -> float:
    loc = c.location
    if loc in ("interior", "coeff_interior"):
        return float(c.x)
    if loc in ("singular", "coeff_singular"):
        return c.f_spec.singular_point if c.f_spec.is_interior else float(c.x)
    if loc == "endpoint_right":
        return 1.0
    if loc == "endpoint_left":
        return -1.0
    raise ValueError(loc)


def error_measure(c: RateClaim, n_max: int, grid=None) -> np.ndarray:
    """The sequence (indexed by n = 0..n_max) that the claim is about."""
    f, p, loc = c.f_spec, c.params, c.location
    if loc.startswith("coeff"):
        return np.abs(quotient_coeffs(f, p, _claim_x(c), n_max))
    t = expansion_coeffs(f, p, n_max)
    if loc in ("interior", "singular", "endpoint_right", "endpoint_left"):
        return error_sequences(f, t, np.array([_claim_x(c)]), ("raw",))["raw"][:, 0]
    g = default_grid(f) if grid is None else grid
    return error_sequences(f, t, g, (loc,))[loc]


def verify_claim(c: RateClaim, ns=None, grid=None) -> ClaimReport:
    """Envelope-fit the claim's error sequence over ``ns`` and compare with the prediction."""
    ns = DEFAULT_NS if ns is None else np.asarray(ns, dtype=int)
    try:
        seq = error_measure(c, int(ns.max()), grid)
        fit = fit_rate(ns, seq[ns], envelope=True)
    except Exception as exc:  # reported, not raised
        return ClaimReport(c.id, c.expected_slope, math.nan, math.nan, False, c.tolerance, f"error: {exc}")
    note = ""
    if c.f_spec.outside_verified(c.params):
        note = "outside verified range"
    ok = abs(fit.slope - c.expected_slope) <= c.tolerance
    if c.expected_slope > 0:
        ok = ok and fit.slope > 0
    return ClaimReport(c.id, c.expected_slope, fit.slope, fit.residual, bool(ok), c.tolerance, note)


def thread_count() -> int:
    try:
        cap = int(os.environ.get("PHI_SPECTRAL_THREADS", "0"))
    except ValueError:
        cap = 0
    n = os.cpu_count() or 1
    return max(1, min(cap, n) if cap > 0 else n)


def run_claims(claims, ns=None) -> list[ClaimReport]:
    """Verify claims concurrently; results come back sorted by claim id."""
    claims = list(claims)
    workers = min(thread_count(), max(1, len(claims)))
    if workers == 1:
        reports = [verify_claim(c, ns) for c in claims]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(lambda c: verify_claim(c, ns), claims))
    return sorted(reports, key=lambda r: r.claim_id)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["claim_id", "expected_slope", "measured_slope", "residual", "pass"])
    for r in reports:
        w.writerow([r.claim_id, f"{r.expected_slope:.17g}", f"{r.measured_slope:.17g}", f"{r.residual:.17g}", str(r.passed).lower()])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# behaviour of the constant C(x) near a and +-1

ANCHORS = ("a_plus", "a_minus", "one_minus", "minus_one_plus")


def xi_expected_slope(f: PhiFunction, p: JacobiParams, anchor: str) -> float:
    ea, eb = p.endpoint_exponents
    if anchor in ("a_plus", "a_minus"):
        return -1.0
    if anchor == "one_minus":
        return -ea
    if anchor == "minus_one_plus":
        return -eb
    raise ValueError(f"unknown anchor {anchor!r}")


def default_xis(anchor: str, per_octave: int = 200) -> np.ndarray:
    lo, hi = (-9, -4) if anchor in ("a_plus", "a_minus") else (-14, -4)
    return 2.0 ** np.linspace(lo, hi, (hi - lo) * per_octave + 1)


def xi_sweep(f: PhiFunction, p: JacobiParams, n: int, anchor: str, xis=None, table=None) -> RateFit:
    """Fit log e(n, anchor +- xi) against log xi through the local maxima in xi."""
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}")
    xis = default_xis(anchor) if xis is None else np.asarray(xis, dtype=float)
    if np.any(xis <= 0) or np.any(xis > 0.1):
        raise ValueError("xi values must lie in (0, 0.1]")
    base = {"a_plus": f.a, "a_minus": f.a, "one_minus": 1.0, "minus_one_plus": -1.0}[anchor]
    sgn = {"a_plus": 1.0, "a_minus": -1.0, "one_minus": -1.0, "minus_one_plus": 1.0}[anchor]
    x = base + sgn * xis
    t = table if table is not None else expansion_coeffs(f, p, n)

    e = pointwise_error(f, t, n, x)
    return fit_rate(xis, e, envelope="peaks")


def no_log_ratio(f: PhiFunction, p: JacobiParams, x: float, lo: int = 256, hi: int = 4096, table=None) -> float:
    """max over octaves in [lo, hi) of e(n) n^(lam+1), divided by its value on the first octave."""
    t = table if table is not None else expansion_coeffs(f, p, hi)
    e = error_sequences(f, t, np.array([x]), ("raw",))["raw"][:, 0]
    ns = np.arange(lo, hi + 1)
    scaled = e[ns] * ns ** (f.lam + 1.0)
    _, env = octave_envelope(ns, scaled)
    return float(env.max() / env[0])


def with_tolerance(c: RateClaim, tol: float) -> RateClaim:
    return replace(c, tolerance=tol)
