"""Gauss-Jacobi rules and quadrature for algebraically singular integrands."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import linalg, special

from .jacobi_core import JacobiParams, iter_jacobi, jacobi_eval, jacobi_norm, jacobi_norms

__all__ = [
    "QuadRule",
    "QuadratureWarning",
    "SingularIntegrand",
    "gauss_jacobi",
    "mapped_rule",
    "integrate_singular",
    "bessel_transform",
    "jacobi_transform",
    "jacobi_transform_all",
    "MAX_NODES",
    "MAX_PANELS",
]

MAX_NODES = 20000
MAX_PANELS = 200000


class QuadratureWarning(RuntimeWarning):
    """Raised (as a warning) when a quadrature result may miss its accuracy target."""


@dataclass(frozen=True)
class QuadRule:
    params: JacobiParams
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _jacobi_matrix(a: float, b: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(N, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2))
    diag[0] = (b - a) / (a + b + 2)
    if N == 1:
        return diag, np.empty(0)
    k = np.arange(1, N, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1))
    # first entry has a removable 0/0 when a + b = -1
    off2[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    return diag, np.sqrt(off2)


def _endpoint_ratios(a: float, b: float, N: int) -> np.ndarray:
    """rho_k = p_{k+1}(1) / p_k(1) for the orthonormal family, k = 0..N-1."""
    k = np.arange(N, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        norm_ratio = (k + a + 1) * (k + b + 1) * (s + 1) / ((k + 1) * (s + 3) * (k + a + b + 1))
    norm_ratio[0] = (a + 1) * (b + 1) / (a + b + 3)  # removable 0/0 when a + b = -1
    return (k + 1 + a) / (k + 1) / np.sqrt(norm_ratio)


def _orthonormal_at(a: float, b: float, N: int, t: np.ndarray):
    """r_N = p_N / p_N(1), dr_N/dt and sum_{k<N} p_k^2 at x = 1 - t.

    Reinsch's form of the recurrence: with r_k = p_k / p_k(1) and
    delta_k = r_k - r_{k-1}, delta_{k+1} = C_k delta_k - B_k t r_k. Rounding
    then grows like k eps near x = 1 instead of k^2 eps, which is what the
    endpoint weights need.
    """
    _, off = _jacobi_matrix(a, b, N + 1)
    rho = _endpoint_ratios(a, b, N)
    p0sq = 1.0 / jacobi_norm(JacobiParams(a, b), 0)
    r, dr = np.ones_like(t), np.zeros_like(t)
    delta, ddelta = np.zeros_like(t), np.zeros_like(t)
    ssum = np.zeros_like(t)
    pk1sq = p0sq
    for k in range(N):
        ssum += pk1sq * r * r
        B = 1.0 / (off[k] * rho[k])
        C = off[k - 1] / (off[k] * rho[k] * rho[k - 1]) if k > 0 else 0.0
        delta, ddelta = C * delta - B * t * r, C * ddelta - B * (r + t * dr)
        r, dr = r + delta, dr + ddelta
        pk1sq *= rho[k] * rho[k]
    return r, dr, ssum


def _polish_half(a: float, b: float, N: int, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # two Newton steps in t (dx = -dt), then Christoffel numbers 1 / sum p_k^2
    for _ in range(2):
        rn, drn, _ = _orthonormal_at(a, b, N, t)
        step = -rn / drn
        t_new = t + step
        ok = np.isfinite(t_new) & (np.abs(step) < 1e-6 * np.maximum(t, 1e-300) + 1e-10) & (t_new > 0)
        t = np.where(ok, t_new, t)
    _, _, ssum = _orthonormal_at(a, b, N, t)
    return t, 1.0 / ssum


@lru_cache(maxsize=128)
def _gauss_jacobi_cached(alpha: float, beta: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    diag, off = _jacobi_matrix(alpha, beta, N)
    if N == 1:
        x = diag.copy()
    else:
        x = linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    x = np.sort(x)

    right = x >= 0
    # right half in t = 1 - x; left half by reflection, t = 1 + x with swapped exponents
    tr, wr = _polish_half(alpha, beta, N, 1.0 - x[right])
    tl, wl = _polish_half(beta, alpha, N, 1.0 + x[~right])
    xs = np.concatenate([tl - 1.0, 1.0 - tr])
    ws = np.concatenate([wl, wr])
    order = np.argsort(xs, kind="stable")
    x, w = xs[order], ws[order]
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(p: JacobiParams, N: int) -> QuadRule:
    """N-point Gauss rule for the weight (1-x)^alpha (1+x)^beta (Golub-Welsch)."""
    if N < 1:
        raise ValueError("a Gauss rule needs at least one node")
    if N > MAX_NODES:
        raise MemoryError(f"refusing to build a {N}-node rule (cap {MAX_NODES})")
    x, w = _gauss_jacobi_cached(p.alpha, p.beta, int(N))
    return QuadRule(p, x, w)


def mapped_rule(lo: float, hi: float, left_exp: float, right_exp: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [lo, hi] for the weight (y - lo)^left_exp (hi - y)^right_exp."""
    if not hi > lo:
        raise ValueError("empty interval")
    if not (left_exp > -1 and right_exp > -1):
        raise ValueError(f"non-integrable exponents ({left_exp}, {right_exp})")
    rule = gauss_jacobi(JacobiParams(right_exp, left_exp), N)
    h = (hi - lo) / 2
    nodes = lo + h * (rule.nodes + 1)
    weights = rule.weights * h ** (left_exp + right_exp + 1)
    return nodes, weights


@dataclass(frozen=True)
class SingularIntegrand:
    """(y - lo)^left_exp (hi - y)^right_exp * smooth_part(y) on [lo, hi]."""

    lo: float
    hi: float
    left_exp: float = 0.0
    right_exp: float = 0.0
    smooth_part: Callable[[np.ndarray], np.ndarray] = lambda y: np.ones_like(y)

    def __post_init__(self):
        if not (-1.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"interval [{self.lo}, {self.hi}] must lie in [-1, 1]")
        if not (self.left_exp > -1 and self.right_exp > -1):
            raise ValueError("endpoint exponents must exceed -1")

    @property
    def interval(self) -> tuple[float, float]:
        return self.lo, self.hi


def integrate_singular(s: SingularIntegrand, N: int) -> float:
    nodes, weights = mapped_rule(s.lo, s.hi, s.left_exp, s.right_exp, N)
    vals = np.broadcast_to(np.asarray(s.smooth_part(nodes), dtype=float), nodes.shape)
    return float(weights @ vals)


_GL16 = np.polynomial.legendre.leggauss(16)


def bessel_transform(
    alpha: float,
    beta: float,
    nu: float,
    omega: float,
    psi: Callable[[np.ndarray], np.ndarray] | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
    n_end: int = 24,
) -> float:
    """int_c^b x^alpha (b - x)^beta J_nu(omega x) psi(x) dx.

    The interval is cut into panels of width pi/omega. Interior panels use
    16-point Gauss-Legendre; the first panel absorbs x^(alpha+nu) when c = 0 and
    the last absorbs (b - x)^beta.
    """
    c, b = map(float, interval)
    if not (0.0 <= c < b):
        raise ValueError("need 0 <= c < b")
    if not beta > -1:
        raise ValueError("beta must exceed -1")
    if c == 0.0 and not alpha + nu > -1:
        raise ValueError("alpha + nu must exceed -1")
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if psi is None:
        psi = np.ones_like

    origin = c == 0.0
    left_exp = alpha + nu if origin else 0.0

    def smooth(x, first, last=False):
        # everything except the factors absorbed by the panel's rule
        if first and origin:
            # J_nu(w x) x^-nu is smooth through the origin
            out = special.jv(nu, omega * x) * x ** (-nu)
        else:
            out = special.jv(nu, omega * x) * x**alpha
        out = out * psi(x)
        if not last and beta != 0.0:
            out = out * (b - x) ** beta
        return out

    if omega == 0.0:
        if nu != 0:
            return 0.0
        x, w = mapped_rule(c, b, left_exp if origin else 0.0, beta, 64)
        vals = psi(x) * (1.0 if origin else x**alpha)
        return float(w @ vals)

    width = math.pi / omega
    n_pan = max(1, math.ceil((b - c) / width))
    if n_pan > MAX_PANELS:
        warnings.warn(f"bessel_transform: {n_pan} panels exceeds cap {MAX_PANELS}", QuadratureWarning)
    edges = np.linspace(c, b, n_pan + 1)

    if n_pan == 1:
        x, w = mapped_rule(c, b, left_exp, beta, 2 * n_end)
        return float(w @ smooth(x, True, True))

    total = 0.0
    # first panel
    x, w = mapped_rule(edges[0], edges[1], left_exp, 0.0, n_end)
    total += float(w @ smooth(x, True))
    # interior panels, vectorised
    if n_pan > 2:
        lo, hi = edges[1:-2], edges[2:-1]
        h = (hi - lo)[:, None] / 2
        mid = (hi + lo)[:, None] / 2
        xs = mid + h * _GL16[0][None, :]
        vals = smooth(xs.ravel(), False).reshape(xs.shape)
        total += float(np.sum((h * _GL16[1][None, :] * vals).sum(axis=1)))
    # last panel
    x, w = mapped_rule(edges[-2], edges[-1], 0.0, beta, n_end)
    total += float(w @ smooth(x, False, True))
    return total


def jacobi_transform_all(
    p: JacobiParams,
    n_max: int,
    a: float,
    gamma: float,
    delta: float,
    psi: Callable[[np.ndarray], np.ndarray] | None = None,
    b: float = 1.0,
    n_quad: int | None = None,
) -> np.ndarray:
    """int_a^b (x - a)^gamma (1 - x)^delta P_k(x) psi(x) dx for k = 0..n_max.

    With b < 1 the (1 - x)^delta factor is smooth and folded into psi.
    """
    if not -1 < a < b <= 1:
        raise ValueError("need -1 < a < b <= 1")
    if psi is None:
        psi = np.ones_like
    right = delta if b == 1.0 else 0.0
    N = n_quad or (n_max + 1) // 2 + 64
    x, w = mapped_rule(a, b, gamma, right, N)
    vals = w * psi(x)
    if b != 1.0 and delta != 0.0:
        vals = vals * (1 - x) ** delta
    out = np.empty(n_max + 1)
    for k, pk in enumerate(iter_jacobi(p, n_max, x)):
        out[k] = vals @ pk
    return out


def jacobi_transform(
    p: JacobiParams,
    n: int,
    a: float,
    gamma: float,
    delta: float,
    psi: Callable[[np.ndarray], np.ndarray] | None = None,
    b: float = 1.0,
) -> float:
    """int_a^b (x - a)^gamma (1 - x)^delta P_n(x) psi(x) dx."""
    return float(jacobi_transform_all(p, n, a, gamma, delta, psi, b)[n])
