"""Jacobi polynomials, their norms, pointwise envelopes and Hilb-type asymptotics.

All evaluation goes through the forward three-term recurrence in double
precision, which is stable on [-1, 1] for alpha, beta > -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import special

__all__ = [
    "JacobiParams",
    "HilbTerms",
    "jacobi_eval",
    "jacobi_eval_all",
    "iter_jacobi",
    "jacobi_moments",
    "jacobi_norm",
    "jacobi_norms",
    "envelope_bound",
    "pointwise_bound",
    "bessel_j",
    "hilb_main_term",
    "interior_asymptotic",
    "HILB_C",
]

# Regime split for the Hilb remainder: theta < HILB_C / n is "near_pole".
HILB_C = 1.0


@dataclass(frozen=True)
class JacobiParams:
    """Exponents of the weight (1 - x)**alpha * (1 + x)**beta."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        a, b = float(self.alpha), float(self.beta)
        if not (a > -1.0 and b > -1.0) or not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"Jacobi parameters need alpha, beta > -1, got ({a}, {b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 - x) ** self.alpha * (1.0 + x) ** self.beta

    def norm(self, k: int) -> float:
        return jacobi_norm(self, k)

    def swapped(self) -> "JacobiParams":
        return JacobiParams(self.beta, self.alpha)

    @property
    def endpoint_exponents(self) -> tuple[float, float]:
        """Clamped exponents max(alpha/2 + 1/4, 0), max(beta/2 + 1/4, 0)."""
        return max(self.alpha / 2 + 0.25, 0.0), max(self.beta / 2 + 0.25, 0.0)

    def endpoint_weight(self, x):
        """(1-x)^max(a/2+1/4,0) (1+x)^max(b/2+1/4,0), the factor used by weighted errors."""
        ea, eb = self.endpoint_exponents
        x = np.asarray(x, dtype=float)
        return (1.0 - x) ** ea * (1.0 + x) ** eb


@lru_cache(maxsize=64)
def _recurrence(alpha: float, beta: float, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # P_{k+1} = (A_k x + B_k) P_k - C_k P_{k-1}, valid for k >= 1
    k = np.arange(1, max(n_max, 1), dtype=float)
    s = 2 * k + alpha + beta
    c1 = 2 * (k + 1) * (k + alpha + beta + 1) * s
    A = (s + 1) * (s + 2) * s / c1
    B = (s + 1) * (alpha * alpha - beta * beta) / c1
    C = 2 * (k + alpha) * (k + beta) * (s + 2) / c1
    for arr in (A, B, C):
        arr.setflags(write=False)
    return A, B, C


def _check_domain(x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0) or np.any(np.isnan(xa)):
        raise ValueError("Jacobi polynomials are evaluated on [-1, 1] only")
    return xa


def iter_jacobi(p: JacobiParams, n_max: int, x) -> Iterator[np.ndarray | float]:
    """Yield P_0(x), ..., P_{n_max}(x) one degree at a time.

    Works for scalar or array ``x``; used wherever the full table would not fit
    in memory (partial sums over fine grids, quadrature moments).
    """
    if n_max < 0:
        raise ValueError("degree must be nonnegative")
    xa = _check_domain(x)
    scalar = xa.ndim == 0
    x = float(xa) if scalar else xa
    a, b = p.alpha, p.beta
    prev = 1.0 if scalar else np.ones_like(xa)
    yield prev
    if n_max == 0:
        return
    cur = ((a + b + 2) * x + (a - b)) / 2
    yield cur
    A, B, C = _recurrence(a, b, n_max)
    for k in range(1, n_max):
        prev, cur = cur, (A[k - 1] * x + B[k - 1]) * cur - C[k - 1] * prev
        yield cur


def jacobi_eval_all(p: JacobiParams, n_max: int, x) -> np.ndarray:
    """Values P_0(x), ..., P_{n_max}(x); shape (n_max + 1,) + shape(x)."""
    return np.array(list(iter_jacobi(p, n_max, x)))


def jacobi_eval(p: JacobiParams, n: int, x):
    """P_n^{(alpha, beta)}(x) by forward recurrence."""
    val = None
    for val in iter_jacobi(p, n, x):
        pass
    return val


def jacobi_moments(p: JacobiParams, n_max: int, nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """sum_j values[j] * P_k(nodes[j]) for k = 0..n_max, in one recurrence pass."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    out = np.empty(n_max + 1)
    for k, pk in enumerate(iter_jacobi(p, n_max, nodes)):
        out[k] = values @ pk
    return out


def jacobi_norms(p: JacobiParams, n_max: int) -> np.ndarray:
    """sigma_k = int P_k^2 w for k = 0..n_max."""
    a, b = p.alpha, p.beta
    k = np.arange(n_max + 1, dtype=float)
    out = np.empty(n_max + 1)
    # k = 0: (2k+a+b+1) Gamma(k+a+b+1) -> Gamma(a+b+2), which also covers a+b = -1
    out[0] = math.exp(
        (a + b + 1) * math.log(2)
        + special.gammaln(a + 1)
        + special.gammaln(b + 1)
        - special.gammaln(a + b + 2)
    )
    if n_max >= 1:
        out[1] = math.exp(
            (a + b + 1) * math.log(2)
            + special.gammaln(a + 2)
            + special.gammaln(b + 2)
            - special.gammaln(a + b + 2)
        ) / (a + b + 3)
    if n_max >= 2:
        # gammaln at large k loses ~eps*log Gamma(k); the rational ratio keeps ~sqrt(k)*eps
        kk = k[2:]
        ratio = (kk + a) * (kk + b) * (2 * kk + a + b - 1) / (kk * (kk + a + b) * (2 * kk + a + b + 1))
        out[2:] = out[1] * np.cumprod(ratio)
    return out


def jacobi_norm(p: JacobiParams, k: int) -> float:
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return float(jacobi_norms(p, k)[k])


def envelope_bound(p: JacobiParams, n: int, x):
    """Four-piece envelope E_n(x) bounding |P_{n+d}(x)| up to a constant."""
    xa = _check_domain(x)
    m = n + 1.0
    a, b = p.alpha, p.beta
    with np.errstate(divide="ignore", invalid="ignore"):
        right_mid = m ** -0.5 * (1.0 - xa) ** (-a / 2 - 0.25)
        left_mid = m ** -0.5 * (1.0 + xa) ** (-b / 2 - 0.25)
    out = np.where(
        xa >= 1.0 - m ** -2,
        m ** a,
        np.where(xa >= 0.0, right_mid, np.where(xa >= -1.0 + m ** -2, left_mid, m ** b)),
    )
    return float(out) if out.ndim == 0 else out


def pointwise_bound(p: JacobiParams, n: int, x):
    """(n+1)^{-1/2} (1-x)^{-ea} (1+x)^{-eb}; +inf at an endpoint whose exponent is positive."""
    xa = _check_domain(x)
    ea, eb = p.endpoint_exponents
    with np.errstate(divide="ignore"):
        out = (n + 1.0) ** -0.5 * (1.0 - xa) ** (-ea) * (1.0 + xa) ** (-eb)
    return float(out) if out.ndim == 0 else out


def bessel_j(nu: float, z):
    """Bessel function of the first kind J_nu(z) for nu > -1, z >= 0."""
    za = np.asarray(z, dtype=float)
    if np.any(za < 0) or np.any(np.isnan(za)):
        raise ValueError("bessel_j needs z >= 0")
    if not nu > -1:
        raise ValueError("bessel_j needs nu > -1")
    out = np.asarray(special.jv(nu, za), dtype=float)
    tiny = (za > 0) & (za < 1e-150)
    if np.any(tiny):
        # jv loses the power law for subnormal z; the first series term is exact there
        out = np.where(tiny, np.exp(nu * np.log(np.where(tiny, za, 1.0) / 2) - special.gammaln(nu + 1)), out)
    return float(out) if out.ndim == 0 else out


def _gamma_ratio(n: int, alpha: float) -> float:
    """Gamma(n + alpha + 1) / n!, overflow-free."""
    return math.exp(special.gammaln(n + alpha + 1) - special.gammaln(n + 1))


@dataclass(frozen=True)
class HilbTerms:
    n: int
    n_tilde: float
    theta: float
    leading: float  # Gamma(n+a+1)/(sqrt(2) n! N^a) J_a(N theta)
    value: float  # leading term solved for P_n(cos theta)
    regime: str  # "interior" or "near_pole"


def hilb_main_term(p: JacobiParams, n: int, theta: float) -> HilbTerms:
    """Bessel main term of the Hilb-type formula and the implied P_n(cos theta)."""
    if not 0.0 < theta < math.pi:
        raise ValueError("theta must lie strictly inside (0, pi)")
    if n < 1:
        raise ValueError("the Hilb approximation needs n >= 1")
    a, b = p.alpha, p.beta
    nt = n + (a + b + 1) / 2
    leading = _gamma_ratio(n, a) / (math.sqrt(2.0) * nt**a) * bessel_j(a, nt * theta)
    scale = math.sqrt(theta) * math.sin(theta / 2) ** (-a - 0.5) * math.cos(theta / 2) ** (-b - 0.5)
    regime = "near_pole" if theta < HILB_C / n else "interior"
    return HilbTerms(n=n, n_tilde=nt, theta=theta, leading=leading, value=leading * scale, regime=regime)


def interior_asymptotic(p: JacobiParams, n: int, theta):
    """Cosine-form asymptotic of P_n(cos theta) away from the poles, O(n^{-3/2}) accurate."""
    if n < 1:
        raise ValueError("the asymptotic form needs n >= 1")
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th >= math.pi):
        raise ValueError("theta must lie strictly inside (0, pi)")
    a, b = p.alpha, p.beta
    nt = n + (a + b + 1) / 2
    gamma = -(2 * a + 1) * math.pi / 4
    out = (
        (n * math.pi) ** -0.5
        * np.sin(th / 2) ** (-a - 0.5)
        * np.cos(th / 2) ** (-b - 0.5)
        * np.cos(nt * th + gamma)
    )
    return float(out) if out.ndim == 0 else out
