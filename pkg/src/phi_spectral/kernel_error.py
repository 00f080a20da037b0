"""Reproducing kernel, the two-term pointwise error identity and the quotient coefficients.

The error of the degree-n truncation at x equals

    A_n a_n(x; g) P_{n+1}(x) - B_n a_{n+1}(x; g) P_n(x),

where a_k(x; g) are Jacobi coefficients (in y) of g(x, y) = (f(x) - f(y)) / (x - y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .expansion import PhiFunction, phi_eval, quad_size
from .jacobi_core import JacobiParams, iter_jacobi, jacobi_eval, jacobi_norm, jacobi_norms
from .quadrature import mapped_rule

__all__ = [
    "KernelConstants",
    "kernel_constants",
    "kernel_eval",
    "QuotientFunction",
    "quotient_coeffs",
    "quotient_coeff",
    "error_via_kernel",
    "falling",
    "psi2_eval",
    "intcase_main_term",
    "jacpoly_bracket",
    "CD_SWITCH",
]

# below this |x - y| the kernel is summed instead of using the Christoffel-Darboux quotient
CD_SWITCH = 1e-6
FD_STEP = 1e-6


@dataclass(frozen=True)
class KernelConstants:
    n: int
    A_n: float
    B_n: float
    rho_n: float


def kernel_constants(p: JacobiParams, n: int) -> KernelConstants:
    if n < 0:
        raise ValueError("n must be nonnegative")
    a, b = p.alpha, p.beta
    s = 2 * n + a + b
    if n == 0 and abs(a + b + 1) < 1e-15:
        A = 2.0 / (a + b + 2)  # removable 0/0
    else:
        A = 2 * (n + 1) * (n + a + b + 1) / ((s + 2) * (s + 1))
    B = 2 * (n + a + 1) * (n + b + 1) / ((s + 2) * (s + 3))
    rho = A / jacobi_norms(p, n)[n]
    return KernelConstants(n, A, B, rho)


def kernel_eval(p: JacobiParams, n: int, x, y):
    """K_n(x, y) = sum_{k<=n} P_k(x) P_k(y) / sigma_k."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    kc = kernel_constants(p, n)
    px = jacobi_eval(p, n, x), jacobi_eval(p, n + 1, x)
    py = jacobi_eval(p, n, y), jacobi_eval(p, n + 1, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        cd = kc.rho_n * (px[1] * py[0] - px[0] * py[1]) / (x - y)
    close = np.abs(x - y) <= CD_SWITCH
    if np.any(close):
        sig = jacobi_norms(p, n)
        xs, ys = np.atleast_1d(x[close]), np.atleast_1d(y[close])
        acc = np.zeros_like(xs)
        for k, (pxk, pyk) in enumerate(zip(iter_jacobi(p, n, xs), iter_jacobi(p, n, ys))):
            acc += pxk * pyk / sig[k]
        cd = np.array(cd, dtype=float)
        cd[close] = acc
    return float(cd) if np.ndim(cd) == 0 else cd


@dataclass(frozen=True)
class QuotientFunction:
    """g(x, y) = (f(x) - f(y)) / (x - y) for a fixed x."""

    f: PhiFunction
    x: float

    def __post_init__(self):
        if not -1 <= self.x <= 1:
            raise ValueError("x must lie in [-1, 1]")

    @property
    def regime(self) -> str:
        c = self.f.singular_point
        if self.x < c:
            return "left"
        if self.x > c:
            return "right"
        return "at"

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (phi_eval(self.f, self.x) - phi_eval(self.f, y)) / (self.x - y)


# ---------------------------------------------------------------------------
# quadrature of g * P_k * w, split into pieces that are smooth after pulling
# out algebraic endpoint factors


@dataclass
class _Seg:
    lo: float
    hi: float
    left: float
    right: float
    fn: Callable  # smooth part, not including the weight


def _components(f: PhiFunction):
    """Singular components (c, sigma, support) with s_c(y) = (sigma (y - c))^lam on support."""
    a = f.a
    k = f.kind
    if k in ("interior_plus", "step"):
        return [(a, 1.0, (a, 1.0))]
    if k == "interior_minus":
        return [(a, -1.0, (-1.0, a))]
    if k == "interior_abs":
        return [(a, -1.0, (-1.0, a)), (a, 1.0, (a, 1.0))]
    if k == "boundary_right":
        return [(1.0, -1.0, (-1.0, 1.0))]
    return [(-1.0, 1.0, (-1.0, 1.0))]


def _dist(c, sig, y):
    return sig * (np.asarray(y, dtype=float) - c)


def _pole_nodes(N: int, lo: float, hi: float, x: float) -> int:
    """Extra nodes so that 1/(x - y) is resolved when x sits close to [lo, hi]."""
    if lo <= x <= hi:
        return N
    h = (hi - lo) / 2
    d = min(abs(x - lo), abs(x - hi))
    return min(N + int(math.ceil(20.0 / math.sqrt(2 * d / h))), 8000)


def _segments(f: PhiFunction, x: float, N: int) -> list[tuple[_Seg, int]]:
    lam = f.lam
    z = f.z
    zx = float(z(x))
    segs: list[tuple[_Seg, int]] = []

    for c, sig, (L, R) in _components(f):
        dx0 = float(_dist(c, sig, x))
        inside = dx0 > 0
        sx = dx0**lam if inside else 0.0
        # c is at L when sig = +1, at R when sig = -1
        at_left = sig > 0

        # outside the support: s_c(y) = 0, D = s_c(x) / (x - y)
        outside = (-1.0, L) if at_left else (R, 1.0)
        if sx != 0.0 and outside[1] > outside[0]:
            seg = _Seg(outside[0], outside[1], 0.0, 0.0, lambda y, sx=sx: zx * sx / (x - y))
            segs.append((seg, _pole_nodes(N, *outside, x)))

        if x == c:
            # D = d(y)^(lam - 1) * sigma on the support
            if not lam > 0:
                raise ValueError("the quotient at the singular point needs lambda > 0")
            seg = _Seg(L, R, lam - 1 if at_left else 0.0, 0.0 if at_left else lam - 1, lambda y, s=sig: zx * s + 0 * y)
            segs.append((seg, N))
        elif not inside:
            # x beyond c: D = d(y)^lam / (y - x)
            seg = _Seg(L, R, lam if at_left else 0.0, 0.0 if at_left else lam, lambda y: zx / (y - x))
            segs.append((seg, _pole_nodes(N, L, R, x)))
        else:
            m = 0.5 * (c + x)
            dx = dx0
            near = (L, m) if at_left else (m, R)
            far = (m, R) if at_left else (L, m)
            # near c: s_c(x)/(x - y) - d(y)^lam/(x - y); x is beyond the near piece
            if sx != 0.0:
                segs.append((_Seg(*near, 0.0, 0.0, lambda y, sx=sx: zx * sx / (x - y)), _pole_nodes(N, *near, x)))
            segs.append(
                (
                    _Seg(*near, lam if at_left else 0.0, 0.0 if at_left else lam, lambda y: -zx / (x - y)),
                    _pole_nodes(N, *near, x),
                )
            )

            def q(y, c=c, sig=sig, dx=dx):
                # sigma d(x)^(lam-1) (1 - r^lam)/(1 - r), r = d(y)/d(x)
                u = 1.0 - _dist(c, sig, y) / dx
                with np.errstate(divide="ignore", invalid="ignore"):
                    val = -np.expm1(lam * np.log1p(-u)) / u
                val = np.where(np.abs(u) < 1e-14, lam, val)
                return zx * sig * dx ** (lam - 1) * val

            segs.append((_Seg(*far, 0.0, 0.0, q), N))

    # s(y) (z(x) - z(y)) / (x - y) over the support of f
    if z.name != "one":
        def dz(y):
            y = np.asarray(y, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = (zx - z(y)) / (x - y)
            close = np.abs(x - y) < 1e-8
            if np.any(close):
                d = np.where(close, (float(z(x + FD_STEP)) - float(z(x - FD_STEP))) / (2 * FD_STEP), d)
            return d

        for c, sig, (L, R) in _components(f):
            seg = _Seg(L, R, lam if sig > 0 else 0.0, 0.0 if sig > 0 else lam, dz)
            segs.append((seg, N))
    return segs


def quotient_coeffs(f: PhiFunction, p: JacobiParams, x: float, n_max: int, n_quad: int | None = None) -> np.ndarray:
    """a_k(x; g) for k = 0..n_max."""
    N = n_quad or quad_size(n_max + 1)
    nodes, vals = [], []
    for seg, Ns in _segments(f, float(x), N):
        le, re = seg.left, seg.right
        # fold the weight exponents into the rule at +-1
        if seg.lo == -1.0:
            le += p.beta
        if seg.hi == 1.0:
            re += p.alpha
        yn, w = mapped_rule(seg.lo, seg.hi, le, re, Ns)
        v = np.asarray(seg.fn(yn), dtype=float) * w
        if seg.lo > -1.0:
            v = v * (1 + yn) ** p.beta
        if seg.hi < 1.0:
            v = v * (1 - yn) ** p.alpha
        nodes.append(yn)
        vals.append(np.broadcast_to(v, yn.shape))
    y = np.concatenate(nodes)
    v = np.concatenate(vals)
    out = np.empty(n_max + 1)
    for k, pk in enumerate(iter_jacobi(p, n_max, y)):
        out[k] = v @ pk
    return out / jacobi_norms(p, n_max)


def quotient_coeff(q: QuotientFunction, p: JacobiParams, n: int) -> float:
    """a_n(x; g) for the quotient of f at the point q.x."""
    if q.regime == "at" and not q.f.lam > 0:
        raise ValueError("a_n(a; g) exists only for lambda > 0")
    return float(quotient_coeffs(q.f, p, q.x, n)[n])


def _step_error_at_a(f: PhiFunction, p: JacobiParams, n: int) -> float:
    # g is not integrable here; use e = int K_n(a, y) (f(a) - f(y)) w(y) dy directly
    x = f.singular_point
    fa = float(phi_eval(f, x))
    N = quad_size(n) + 8
    sig = jacobi_norms(p, n)
    px = [float(v) for v in iter_jacobi(p, n, x)]
    total = 0.0
    for lo, hi in ((-1.0, x), (x, 1.0)):
        yn, w = mapped_rule(lo, hi, p.beta if lo == -1 else 0.0, p.alpha if hi == 1 else 0.0, N)
        v = w * (fa - phi_eval(f, yn))
        if lo > -1:
            v = v * (1 + yn) ** p.beta
        if hi < 1:
            v = v * (1 - yn) ** p.alpha
        kern = np.zeros_like(yn)
        for k, pyk in enumerate(iter_jacobi(p, n, yn)):
            kern += px[k] * pyk / sig[k]
        total += float(v @ kern)
    return total


def error_via_kernel(f: PhiFunction, p: JacobiParams, n: int, x: float) -> float:
    """Signed error f(x) - S_n[f](x) from the two-term kernel identity."""
    if f.lam == 0 and x == f.singular_point:
        return _step_error_at_a(f, p, n)
    kc = kernel_constants(p, n)
    an = quotient_coeffs(f, p, x, n + 1)
    return float(kc.A_n * an[n] * jacobi_eval(p, n + 1, x) - kc.B_n * an[n + 1] * jacobi_eval(p, n, x))


# ---------------------------------------------------------------------------
# auxiliary function behind the monotonicity argument


def falling(lam: float, k: int) -> float:
    """Falling factorial lam (lam - 1) ... (lam - k + 1)."""
    out = 1.0
    for j in range(k):
        out *= lam - j
    return out


def _m_of(lam: float) -> int:
    return int(lam) - 1 if lam == int(lam) else int(math.floor(lam))


def psi2_eval(a: float, lam: float, x: float, y):
    """(m+1)! (y-a)^(m+1-lam) h(x, y) / (x-y)^(m+2), h the Taylor remainder of (x-a)^lam about y.

    m = floor(lam) (lam - 1 for integer lam). Finite at y = a and continuous at y = x.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not a < x < 1:
        raise ValueError("need a < x < 1")
    ya = np.asarray(y, dtype=float)
    if np.any(ya < a) or np.any(ya > 1):
        raise ValueError("y must lie in [a, 1]")
    m = _m_of(lam)
    fm1 = math.factorial(m + 1)
    dxa = x - a
    out = np.empty_like(ya, dtype=float)
    flat_y = ya.reshape(-1)
    flat = out.reshape(-1)
    for i, yy in enumerate(flat_y):
        d = yy - a
        t = x - yy
        if d > 0 and abs(t) <= 0.5 * d:
            # Taylor tail: sum_{j>=0} (lam)_{m+2+j}/(m+2+j)! d^(lam-m-2-j) t^j
            s = 0.0
            coef = falling(lam, m + 2) / math.factorial(m + 2)
            r = t / d
            term = coef
            for j in range(80):
                s += term
                kk = m + 2 + j
                term *= (lam - kk) / (kk + 1) * r
                if abs(term) < 1e-18 * abs(s):
                    break
            flat[i] = fm1 * d ** (m + 1 - lam) * s * d ** (lam - m - 2)
        else:
            acc = d ** (m + 1 - lam) * dxa**lam if d > 0 else 0.0
            for k in range(m + 2):
                acc -= falling(lam, k) / math.factorial(k) * (d ** (m + 1 - k) if m + 1 - k > 0 else 1.0) * t**k
            flat[i] = fm1 * acc / t ** (m + 2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# leading behaviour at the singular point for integer lambda


def intcase_main_term(f: PhiFunction, p: JacobiParams, n: int) -> float:
    """Leading term of a_n(a; g) for integer lambda >= 1 (interior_plus), from lam integrations by parts."""
    lam = f.lam
    if f.kind != "interior_plus" or lam != int(lam) or lam < 1:
        raise ValueError("defined for interior_plus with a positive integer lambda")
    L = int(lam)
    if n < L:
        raise ValueError("need n >= lambda")
    a = f.a
    shifted = JacobiParams(p.alpha + L, p.beta + L)
    num = (
        math.factorial(L - 1)
        * (1 - a) ** (p.alpha + L)
        * (1 + a) ** (p.beta + L)
        * jacobi_eval(shifted, n - L, a)
        * float(f.z(a))
    )
    return num / (2**L * falling(n, L) * jacobi_norm(p, n))


def jacpoly_bracket(p: JacobiParams, lam: int, n: int, a: float) -> float:
    """P_{n-lam}^{(a+lam,b+lam)}(a) P_{n+1}(a) - P_{n+1-lam}^{(a+lam,b+lam)}(a) P_n(a)."""
    sh = JacobiParams(p.alpha + lam, p.beta + lam)
    return float(
        jacobi_eval(sh, n - lam, a) * jacobi_eval(p, n + 1, a) - jacobi_eval(sh, n + 1 - lam, a) * jacobi_eval(p, n, a)
    )
