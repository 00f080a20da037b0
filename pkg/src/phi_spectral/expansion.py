"""Phi-functions, their Jacobi coefficients, partial sums and error functionals."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .jacobi_core import JacobiParams, iter_jacobi, jacobi_norms
from .quadrature import QuadratureWarning, mapped_rule

__all__ = [
    "KINDS",
    "INTERIOR_KINDS",
    "BOUNDARY_KINDS",
    "ERROR_FLOOR",
    "SmoothFactor",
    "make_z",
    "PhiFunction",
    "Piece",
    "phi_eval",
    "CoefficientTable",
    "expansion_coeffs",
    "quad_size",
    "truncated_eval",
    "iter_partial_sums",
    "partial_sums",
    "pointwise_error",
    "weighted_error_hat",
    "weighted_error_tilde",
    "weighted_error_boundary",
    "max_error",
    "error_sequences",
    "default_grid",
    "ErrorCurve",
]

KINDS = ("interior_plus", "interior_minus", "interior_abs", "step", "boundary_right", "boundary_left")
INTERIOR_KINDS = ("interior_plus", "interior_minus", "interior_abs", "step")
BOUNDARY_KINDS = ("boundary_right", "boundary_left")

# errors under this are roundoff and never enter a rate fit
ERROR_FLOOR = 1e-12


@dataclass(frozen=True)
class SmoothFactor:
    """Named smooth factor z(x); ``name`` round-trips through the CLI."""

    name: str
    fn: Callable = field(compare=False, repr=False)

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def make_z(spec: str | Callable | SmoothFactor | None = "one") -> SmoothFactor:
    """Built-in smooth factors: ``one``, ``exp``, ``cos``, ``poly:c0,c1,...``.

    A bare callable is wrapped as-is.
    """
    if spec is None:
        spec = "one"
    if isinstance(spec, SmoothFactor):
        return spec
    if callable(spec):
        return SmoothFactor(getattr(spec, "__name__", "custom"), spec)
    s = spec.strip().lower()
    if s in ("one", "1", "const"):
        return SmoothFactor("one", lambda x: np.ones_like(x))
    if s == "exp":
        return SmoothFactor("exp", np.exp)
    if s == "cos":
        return SmoothFactor("cos", np.cos)
    if s.startswith("poly:"):
        try:
            coefs = [float(c) for c in s[5:].split(",") if c.strip()]
        except ValueError as exc:
            raise ValueError(f"bad polynomial spec {spec!r}") from exc
        if not coefs:
            raise ValueError("poly: needs at least one coefficient")
        poly = np.polynomial.Polynomial(coefs)
        return SmoothFactor(s, lambda x: poly(x) + 0.0 * x)
    raise ValueError(f"unknown z {spec!r}; use one, exp, cos or poly:c0,c1,...")


@dataclass(frozen=True)
class Piece:
    """One integration piece: f(y) w(y) = (y-lo)^left (hi-y)^right smooth(y)."""

    lo: float
    hi: float
    left: float
    right: float
    smooth: Callable = field(compare=False, repr=False)


@dataclass(frozen=True)
class PhiFunction:
    """A smooth factor times one algebraic singularity.

    kinds: ``interior_plus`` (x-a)_+^lam z, ``interior_minus`` (a-x)_+^lam z,
    ``interior_abs`` |x-a|^lam z, ``step`` the lam=0 case of interior_plus,
    ``boundary_right`` (1-x)^lam z and ``boundary_left`` (1+x)^lam z.
    """

    kind: str
    a: float = 0.0
    lam: float = 0.5
    z: SmoothFactor = field(default_factory=lambda: make_z("one"))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "z", make_z(self.z))
        lam = 0.0 if self.kind == "step" else float(self.lam)
        if self.kind == "step" and self.lam not in (0, 0.0, None):
            # the step is the lam = 0 member of the family
            lam = 0.0
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "a", float(self.a))
        if not lam > -1:
            raise ValueError(f"lambda must exceed -1, got {lam}")
        if self.kind in INTERIOR_KINDS and not -1 < self.a < 1:
            raise ValueError(f"singular point a must lie in (-1, 1), got {self.a}")
        if self.kind == "interior_abs" and lam >= 0 and lam == int(lam) and int(lam) % 2 == 0:
            raise ValueError("interior_abs needs lambda that is not an even integer")
        if abs(float(self.z(self.singular_point))) == 0.0:
            raise ValueError("z must not vanish at the singular point")

    @property
    def is_interior(self) -> bool:
        return self.kind in INTERIOR_KINDS

    @property
    def singular_point(self) -> float:
        if self.kind == "boundary_right":
            return 1.0
        if self.kind == "boundary_left":
            return -1.0
        return self.a

    def mirrored(self) -> "PhiFunction":
        """f(-x) as a PhiFunction (z is composed with x -> -x)."""
        z = self.z
        zm = SmoothFactor(f"{z.name}(-x)", lambda x, z=z: z(-x))
        swap = {
            "interior_plus": "interior_minus",
            "interior_minus": "interior_plus",
            "interior_abs": "interior_abs",
            "step": None,
            "boundary_right": "boundary_left",
            "boundary_left": "boundary_right",
        }[self.kind]
        if swap is None:
            # H(-x - a) is a left step; express it as interior_minus with lam = 0
            return PhiFunction("interior_minus", -self.a, 0.0, zm)
        return PhiFunction(swap, -self.a, self.lam, zm)

    def check_params(self, p: JacobiParams) -> None:
        if self.kind == "boundary_right" and not self.lam + p.alpha > -1:
            raise ValueError("boundary_right needs lambda + alpha > -1")
        if self.kind == "boundary_left" and not self.lam + p.beta > -1:
            raise ValueError("boundary_left needs lambda + beta > -1")

    def outside_verified(self, p: JacobiParams) -> bool:
        """True for the endpoint cases with lambda + exponent <= -1/2 (pointwise divergence possible)."""
        if self.kind == "boundary_right":
            return self.lam + p.alpha <= -0.5
        if self.kind == "boundary_left":
            return self.lam + p.beta <= -0.5
        return False

    def __call__(self, x):
        return phi_eval(self, x)

    def pieces(self, p: JacobiParams) -> list[Piece]:
        """Split f * weight into pieces with the algebraic factors pulled out."""
        self.check_params(p)
        al, be, lam, a, z = p.alpha, p.beta, self.lam, self.a, self.z
        right_piece = Piece(a, 1.0, lam, al, lambda y: z(y) * (1 + y) ** be)
        left_piece = Piece(-1.0, a, be, lam, lambda y: z(y) * (1 - y) ** al)
        if self.kind in ("interior_plus", "step"):
            return [right_piece]
        if self.kind == "interior_minus":
            return [left_piece]
        if self.kind == "interior_abs":
            return [left_piece, right_piece]
        if self.kind == "boundary_right":
            return [Piece(-1.0, 1.0, be, al + lam, z)]
        return [Piece(-1.0, 1.0, be + lam, al, z)]


def phi_eval(f: PhiFunction, x):
    """Pointwise value, with the convention f(a) = 0 (lam > 0), z(a)/2 (lam = 0), +inf (lam < 0)."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1) or np.any(np.isnan(xa)):
        raise ValueError("phi_eval is defined on [-1, 1]")
    lam, a = f.lam, f.a
    zx = f.z(xa)
    with np.errstate(divide="ignore", invalid="ignore"):
        if f.kind in ("interior_plus", "step"):
            d = xa - a
            val = np.where(d > 0, np.abs(d) ** lam, 0.0)
        elif f.kind == "interior_minus":
            d = a - xa
            val = np.where(d > 0, np.abs(d) ** lam, 0.0)
        elif f.kind == "interior_abs":
            d = np.abs(xa - a)
            val = d**lam
        elif f.kind == "boundary_right":
            d = 1.0 - xa
            val = d**lam
        else:
            d = 1.0 + xa
            val = d**lam
        val = val * zx
    at = d == 0
    if np.any(at):
        if lam > 0:
            sval = 0.0
        elif lam == 0:
            sval = 0.5 if f.is_interior and f.kind != "interior_abs" else 1.0
        else:
            sval = math.inf
        val = np.where(at, sval * (zx if math.isfinite(sval) else 1.0), val)
    return float(val) if np.ndim(val) == 0 else val


def quad_size(n_max: int) -> int:
    """Node count for degree-n projections: ceil(n/2) + 64."""
    return -(-n_max // 2) + 64


@dataclass(frozen=True)
class CoefficientTable:
    params: JacobiParams
    coeffs: np.ndarray = field(repr=False)
    quad_nodes: int = 0
    label: str = ""

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "CoefficientTable") -> "CoefficientTable":
        if self.params != other.params or self.n_max != other.n_max:
            raise ValueError("tables must share parameters and length")
        return CoefficientTable(
            self.params,
            self.coeffs + other.coeffs,
            max(self.quad_nodes, other.quad_nodes),
            f"{self.label}+{other.label}",
        )

    def to_csv(self) -> str:
        rows = ["k,coeff"] + [f"{k},{c:.17g}" for k, c in enumerate(self.coeffs)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, params: JacobiParams) -> "CoefficientTable":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "k,coeff":
            raise ValueError("expected header 'k,coeff'")
        vals = []
        for i, ln in enumerate(lines[1:]):
            k, c = ln.split(",")
            if int(k) != i:
                raise ValueError("rows must be k = 0, 1, 2, ...")
            vals.append(float(c))
        return cls(params, np.array(vals))


def _raw_coeffs(f: PhiFunction, p: JacobiParams, n_max: int, N: int) -> np.ndarray:
    sig = jacobi_norms(p, n_max)
    nodes, vals = [], []
    for pc in f.pieces(p):
        x, w = mapped_rule(pc.lo, pc.hi, pc.left, pc.right, N)
        nodes.append(x)
        vals.append(w * np.broadcast_to(pc.smooth(x), x.shape))
    x = np.concatenate(nodes)
    v = np.concatenate(vals)
    out = np.empty(n_max + 1)
    for k, pk in enumerate(iter_jacobi(p, n_max, x)):
        out[k] = v @ pk
    return out / sig


def expansion_coeffs(
    f: PhiFunction,
    p: JacobiParams,
    n_max: int,
    n_quad: int | None = None,
    check: bool = False,
) -> CoefficientTable:
    """Jacobi coefficients a_0..a_{n_max} of f.

    Each piece of the integral is done with a mapped Gauss-Jacobi rule whose
    weight carries both the singular factor and the adjacent weight exponent,
    so no node ever sits on a singularity. ``check`` repeats with twice the
    nodes and warns on a disagreement above 1e-10 (relative to max |a_k|).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    N = n_quad or quad_size(n_max)
    c = _raw_coeffs(f, p, n_max, N)
    if check:
        c2 = _raw_coeffs(f, p, n_max, 2 * N)
        scale = max(np.max(np.abs(c2)), 1e-300)
        gap = np.max(np.abs(c - c2)) / scale
        if gap > 1e-10:
            warnings.warn(f"coefficient quadrature disagreement {gap:.2e}", QuadratureWarning)
    return CoefficientTable(p, c, N, f"{f.kind}(a={f.a},lam={f.lam})")


def iter_partial_sums(t: CoefficientTable, x, n_max: int | None = None) -> Iterator[np.ndarray]:
    """Yield S_0(x), S_1(x), ..., S_{n_max}(x) using one recurrence pass."""
    n_max = t.n_max if n_max is None else n_max
    if n_max > t.n_max:
        raise ValueError(f"degree {n_max} exceeds table size {t.n_max}")
    s = None
    for k, pk in enumerate(iter_jacobi(t.params, n_max, x)):
        s = t.coeffs[k] * pk if s is None else s + t.coeffs[k] * pk
        yield s


def partial_sums(t: CoefficientTable, x, n_max: int | None = None) -> np.ndarray:
    """All partial sums; shape (n_max + 1,) + shape(x)."""
    return np.array(list(iter_partial_sums(t, x, n_max)))


def truncated_eval(t: CoefficientTable, n: int, x):
    """S_n[f](x) = sum_{k<=n} a_k P_k(x)."""
    if not 0 <= n <= t.n_max:
        raise ValueError(f"degree {n} outside 0..{t.n_max}")
    s = None
    for s in iter_partial_sums(t, x, n):
        pass
    return s


def pointwise_error(f: PhiFunction, t: CoefficientTable, n: int, x):
    """|f(x) - S_n[f](x)|."""
    fx = phi_eval(f, x)
    return np.abs(fx - truncated_eval(t, n, x))


def _hat_factor(f: PhiFunction, p: JacobiParams, x):
    if not f.is_interior:
        raise ValueError("the (x - a)-weighted error is defined for interior kinds only")
    return p.endpoint_weight(x) * np.abs(np.asarray(x, dtype=float) - f.a)


def _boundary_factor(f: PhiFunction, p: JacobiParams, x):
    x = np.asarray(x, dtype=float)
    if f.kind == "boundary_right":
        return p.endpoint_weight(x) * (1 - x)
    if f.kind == "boundary_left":
        return p.endpoint_weight(x) * (1 + x)
    raise ValueError("the endpoint-weighted error is defined for boundary kinds only")


def weighted_error_hat(f: PhiFunction, t: CoefficientTable, n: int, x):
    """Endpoint weight times |x - a| times the pointwise error."""
    return _hat_factor(f, t.params, x) * pointwise_error(f, t, n, x)


def weighted_error_tilde(f: PhiFunction, t: CoefficientTable, n: int, x):
    return t.params.endpoint_weight(x) * pointwise_error(f, t, n, x)


def weighted_error_boundary(f: PhiFunction, t: CoefficientTable, n: int, x):
    """Endpoint weight times (1 -/+ x) times the error, for endpoint singularities."""
    return _boundary_factor(f, t.params, x) * pointwise_error(f, t, n, x)


def max_error(f: PhiFunction, t: CoefficientTable, n: int, grid=None) -> float:
    grid = default_grid(f) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    return float(np.max(pointwise_error(f, t, n, grid)))


FLAVORS = ("raw", "weighted_hat", "weighted_tilde", "weighted_boundary", "maxnorm")


def _flavor_factor(flavor: str, f: PhiFunction, p: JacobiParams, x):
    if flavor in ("raw", "maxnorm"):
        return None
    if flavor == "weighted_hat":
        return _hat_factor(f, p, x)
    if flavor == "weighted_tilde":
        return p.endpoint_weight(x)
    if flavor == "weighted_boundary":
        return _boundary_factor(f, p, x)
    raise ValueError(f"unknown flavor {flavor!r}")


def error_sequences(
    f: PhiFunction,
    t: CoefficientTable,
    x,
    flavors: Sequence[str] = ("maxnorm",),
    n_max: int | None = None,
) -> dict[str, np.ndarray]:
    """Sup over ``x`` of each flavor of error, for every n = 0..n_max in one pass.

    The ``raw`` flavor returns the full (n, x) error table instead of a sup.
    """
    x = np.asarray(x, dtype=float)
    fx = phi_eval(f, x)
    if not np.all(np.isfinite(fx)):
        raise ValueError("grid contains a point where f is infinite")
    factors = {fl: _flavor_factor(fl, f, t.params, x) for fl in flavors}
    n_max = t.n_max if n_max is None else n_max
    out = {fl: [] for fl in flavors}
    for s in iter_partial_sums(t, x, n_max):
        e = np.abs(fx - s)
        for fl in flavors:
            if fl == "raw":
                out[fl].append(e)
            else:
                fac = factors[fl]
                out[fl].append(np.max(e if fac is None else fac * e))
    return {fl: np.array(v) for fl, v in out.items()}


def default_grid(f: PhiFunction | None = None, n_cheb: int = 2001, cluster: int = 400) -> np.ndarray:
    """Chebyshev points plus {a, +-(1 - 10^-k)} and log-clustered points near a and +-1.

    The clusters resolve the O(1/n) boundary layer at a and the O(1/n^2)
    layers at the endpoints, where the sup of the error sits.
    """
    pts = [np.cos(np.pi * np.arange(n_cheb) / (n_cheb - 1))]
    ks = np.arange(2, 9)
    pts += [1 - 10.0 ** -ks, -1 + 10.0 ** -ks]
    off_end = np.logspace(-10, -1, cluster)
    pts += [1 - off_end, -1 + off_end]
    if f is not None and f.is_interior:
        off = np.logspace(-7, -1, cluster)
        pts += [np.array([f.a]), f.a + off, f.a - off]
    g = np.unique(np.clip(np.concatenate(pts), -1, 1))
    return g


@dataclass
class ErrorCurve:
    """Sampled errors as (n, x, value) triples; x is NaN for sup-type flavors."""

    flavor: str
    samples: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")

    def add(self, n: int, x: float, value: float) -> None:
        if self.flavor in ("raw", "maxnorm") and value < 0:
            raise ValueError("absolute errors are nonnegative")
        self.samples.append((int(n), float(x), float(value)))

    def extend(self, items: Iterable[tuple[int, float, float]]) -> None:
        for n, x, v in items:
            self.add(n, x, v)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.samples:
            return np.empty(0, int), np.empty(0), np.empty(0)
        n, x, v = zip(*self.samples)
        return np.array(n), np.array(x), np.array(v)
