"""Best uniform approximation on a fine grid (Remez exchange) and Chebyshev interpolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C

from .expansion import PhiFunction, phi_eval
from .rate_analysis import RateFit, fit_rate

__all__ = [
    "BestApprox",
    "remez_grid",
    "remez",
    "BernsteinReport",
    "bernstein_check",
    "chebyshev_interpolant",
    "BERNSTEIN_CONSTANT",
]

# Bernstein's constant (0.2801694990...); the classical estimate 1/(2 sqrt(pi)) is 0.2820948
BERNSTEIN_CONSTANT = 0.28016949902386913


def _as_callable(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, PhiFunction):
        return lambda x: phi_eval(f, x)
    return lambda x: np.asarray(f(np.asarray(x, dtype=float)), dtype=float) + 0.0 * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class BestApprox:
    degree: int
    grid: np.ndarray = field(repr=False)
    values_on_grid: np.ndarray = field(repr=False)
    error: float
    extrema: np.ndarray
    cheb_coeffs: np.ndarray = field(repr=False)
    levelled_error: float = 0.0  # |E| of the last reference solve (lower bound)
    converged: bool = True
    iterations: int = 0

    def evaluate(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.cheb_coeffs)

    @property
    def gap(self) -> float:
        """Upper minus lower bound on the grid minimax error."""
        return self.error - self.levelled_error


def remez_grid(size: int, extra=()) -> np.ndarray:
    """Chebyshev-distributed points on [-1, 1] plus any extra points (odd count, so 0 is included)."""
    size += 1 - size % 2
    g = np.cos(np.pi * np.arange(size) / (size - 1))
    g[np.abs(g) < 1e-15] = 0.0
    return np.unique(np.concatenate([g, np.asarray(extra, dtype=float), [-1.0, 1.0]]))


def _sign_runs(r: np.ndarray) -> list[tuple[int, int]]:
    s = np.sign(r)
    # zeros join the previous run
    for i in range(1, len(s)):
        if s[i] == 0:
            s[i] = s[i - 1]
    cut = np.flatnonzero(np.diff(s) != 0) + 1
    starts = np.concatenate([[0], cut])
    ends = np.concatenate([cut, [len(s)]])
    return list(zip(starts, ends))


def _exchange(r: np.ndarray, m: int) -> np.ndarray | None:
    """New reference of m alternating extrema from the residual on the grid."""
    runs = _sign_runs(r)
    peaks = np.array([lo + int(np.argmax(np.abs(r[lo:hi]))) for lo, hi in runs])
    if len(peaks) < m:
        return None
    mags = np.abs(r[peaks])
    gmax = int(np.argmax(mags))
    best, best_val = None, -1.0
    for start in range(max(0, gmax - m + 1), min(gmax, len(peaks) - m) + 1):
        v = mags[start : start + m].min()
        if v > best_val:
            best, best_val = start, v
    return peaks[best : best + m]


def remez(f, n: int, grid_size: int | None = None, grid=None, tol: float = 1e-10, max_iter: int = 100) -> BestApprox:
    """Discrete best uniform approximation of degree n.

    The polynomial is kept in the Chebyshev basis and each iteration solves the
    (n+2)x(n+2) levelled-error system by dense LU. Stops once the sup error
    exceeds the levelled error by less than ``tol`` relative, or after ``max_iter``.
    """
    if not 0 <= n <= 200:
        raise ValueError("degree must be in 0..200")
    fn = _as_callable(f)
    if grid is None:
        size = grid_size or 20 * (n + 1)
        if size < 20 * (n + 1):
            raise ValueError("grid_size must be at least 20 (n + 1)")
        extra = [f.singular_point] if isinstance(f, PhiFunction) else []
        grid = remez_grid(size, extra)
    grid = np.asarray(grid, dtype=float)
    fv = fn(grid)
    m = n + 2

    # initial reference: grid points nearest the Chebyshev extrema
    target = np.cos(np.pi * np.arange(m) / (m - 1))[::-1]
    ref = np.unique(np.searchsorted(grid, target).clip(0, len(grid) - 1))
    if len(ref) < m:
        ref = np.linspace(0, len(grid) - 1, m).round().astype(int)

    alt = (-1.0) ** np.arange(m)
    coef = np.zeros(n + 1)
    E = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        xr = grid[ref]
        A = np.empty((m, m))
        A[:, : n + 1] = C.chebvander(xr, n)
        A[:, n + 1] = alt
        sol = np.linalg.solve(A, fv[ref])
        coef, E = sol[: n + 1], sol[n + 1]
        r = fv - C.chebval(grid, coef)
        rmax = float(np.max(np.abs(r)))
        if rmax <= 1e-14 * max(1.0, float(np.max(np.abs(fv)))):
            converged, E = True, 0.0
            ref_final = ref
            break
        if rmax - abs(E) <= tol * rmax:
            converged = True
            ref_final = ref
            break
        new = _exchange(r, m)
        if new is None:
            ref_final = ref
            break
        if np.array_equal(new, ref):
            converged = rmax - abs(E) <= 1e-8 * rmax
            ref_final = ref
            break
        ref = new
    else:
        ref_final = ref
    r = fv - C.chebval(grid, coef)
    err = float(np.max(np.abs(r)))
    ext = _exchange(r, m) if err > 0 else None
    extrema = grid[ext] if ext is not None else grid[ref_final]
    return BestApprox(
        degree=n,
        grid=grid,
        values_on_grid=C.chebval(grid, coef),
        error=err,
        extrema=extrema,
        cheb_coeffs=coef,
        levelled_error=abs(float(E)),
        converged=converged,
        iterations=it,
    )


@dataclass(frozen=True)
class BernsteinReport:
    a: float
    ns: np.ndarray
    errors: np.ndarray
    scaled: np.ndarray  # E(n) n / sqrt(1 - a^2)
    limit: float  # linear extrapolation of scaled in 1/n
    fit: RateFit


def bernstein_check(a: float, n_list=(20, 40, 80, 160)) -> BernsteinReport:
    """Best-approximation errors of |x - a| against Bernstein's asymptotic law."""
    f = PhiFunction("interior_abs", a, 1.0)
    ns = np.asarray(n_list, dtype=int)
    errs = np.array([remez(f, int(n)).error for n in ns])
    scaled = errs * ns / math.sqrt(1 - a * a)
    if len(ns) >= 2:
        slope, icpt = np.polyfit(1.0 / ns, scaled, 1)
        limit = float(icpt)
    else:
        limit = float(scaled[0])
    fit = fit_rate(ns, errs) if len(ns) >= 4 else RateFit(math.nan, math.nan, math.nan, (ns.min(), ns.max()), False, len(ns))
    return BernsteinReport(a, ns, errs, scaled, limit, fit)


def chebyshev_interpolant(f, n: int, x):
    """Barycentric interpolant of f at the n + 1 points cos(j pi / n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    fn = _as_callable(f)
    xj = np.cos(np.pi * np.arange(n + 1) / n)
    fj = fn(xj)
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    x = np.asarray(x, dtype=float)
    xf = np.atleast_1d(x).astype(float)
    d = xf[:, None] - xj[None, :]
    hit = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w / d
        out = (t @ fj) / t.sum(axis=1)
    rows = hit.any(axis=1)
    if np.any(rows):
        out[rows] = fj[np.argmax(hit[rows], axis=1)]
    return float(out[0]) if x.ndim == 0 else out
