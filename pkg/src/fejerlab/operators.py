"""Expression algebra for nonexpansive maps with averagedness certificates.

Operator expressions are immutable trees.  Each node compiles, at
construction, a vector closure (ndarray -> ndarray) and, when the tree is
one-dimensional and closed-form, a plain-float closure used by the fast
scalar iteration path in :mod:`fejerlab.dynamics`.

Averagedness bookkeeping is structural and deliberately conservative: when no
calculus rule applies the certificate degrades to nonexpansive or unknown
rather than guessing, and every produced certificate is expected to survive
:func:`verify_averaged` empirically.
"""

from __future__ import annotations

import dataclasses
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError
from .geometry import (
    AffineSubspace,
    Ball,
    Box,
    ConvexSet,
    Halfspace,
    Hyperplane,
    LinearSubspace,
    Orthant,
    Point,
    Ray,
    as_vector,
    full_space,
)
from .report import FAIL, PASS, DiagnosticsReport

__all__ = [
    "OperatorExpr",
    "Identity",
    "Negation",
    "Translation",
    "Linear",
    "AffineMap",
    "Projector",
    "Reflector",
    "ConvexCombination",
    "Composition",
    "DouglasRachford",
    "ScalarPiecewiseLinear",
    "AveragednessCertificate",
    "apply",
    "certify",
    "verify_nonexpansive",
    "verify_averaged",
    "fixed_set_description",
    "random_scalar_piecewise_linear",
]

_SPECTRAL_ITERS = 1000
_SPECTRAL_SEED = 0
_NONEXPANSIVE_SLACK = 1e-12


def _merge_dims(*dims):
    out = None
    for d in dims:
        if d is None:
            continue
        if out is None:
            out = d
        elif out != d:
            raise DimensionMismatchError(
                f"operator subtrees disagree on dimension: {out} vs {d}"
            )
    return out


def _scalar_projector(C: ConvexSet):
    """Plain-float projector for supported 1-D sets, else None."""
    if C.dim != 1:
        return None
    if isinstance(C, Point):
        p = float(C.coords[0])
        return lambda t: p
    if isinstance(C, Ball):
        lo = float(C.center[0]) - C.radius
        hi = float(C.center[0]) + C.radius
        return lambda t: lo if t < lo else (hi if t > hi else t)
    if isinstance(C, Box):
        lo, hi = float(C.lower[0]), float(C.upper[0])
        return lambda t: lo if t < lo else (hi if t > hi else t)
    if isinstance(C, Halfspace):
        a = float(C.normal[0])
        bound = C.offset / a
        if a > 0:
            return lambda t: t if t <= bound else bound
        return lambda t: t if t >= bound else bound
    if isinstance(C, Hyperplane):
        const = C.offset / float(C.normal[0])
        return lambda t: const
    if isinstance(C, AffineSubspace):
        if C.basis.shape[0] == 0:
            const = float(C.base[0])
            return lambda t: const
        return lambda t: t
    if isinstance(C, LinearSubspace):
        if C.basis.shape[0] == 0:
            return lambda t: 0.0
        return lambda t: t
    if isinstance(C, Ray):
        b = float(C.base[0])
        if float(C.direction[0]) > 0:
            return lambda t: t if t >= b else b
        return lambda t: t if t <= b else b
    if isinstance(C, Orthant):
        if float(C.signs[0]) > 0:
            return lambda t: t if t >= 0.0 else 0.0
        return lambda t: t if t <= 0.0 else 0.0
    return None


class OperatorExpr:
    """Base class for nonexpansive-map expression nodes."""

    @property
    def dim(self) -> int | None:
        """Ambient dimension, or None for dimension-free nodes."""
        return self._dim

    def apply(self, x) -> np.ndarray:
        """Evaluate the expression at ``x``."""
        return self._fn(as_vector(x, self.dim))

    def scalar_function(self):
        """Plain-float evaluator when the tree is closed-form on the line."""
        return self._sfn

    def _install(self, dim, fn, sfn) -> None:
        object.__setattr__(self, "_dim", dim)
        object.__setattr__(self, "_fn", fn)
        object.__setattr__(self, "_sfn", sfn)

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Identity(OperatorExpr):
    def __post_init__(self):
        self._install(None, lambda x: x.copy(), lambda t: t)


@dataclass(frozen=True, eq=False)
class Negation(OperatorExpr):
    def __post_init__(self):
        self._install(None, lambda x: -x, lambda t: -t)


@dataclass(frozen=True, eq=False)
class Translation(OperatorExpr):
    shift: np.ndarray

    def __post_init__(self):
        b = as_vector(self.shift).copy()
        b.setflags(write=False)
        object.__setattr__(self, "shift", b)
        sfn = None
        if b.size == 1:
            b0 = float(b[0])
            sfn = lambda t: t + b0
        self._install(b.size, lambda x: x + b, sfn)


@dataclass(frozen=True, eq=False)
class Linear(OperatorExpr):
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("Linear expects a square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite matrix entries")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        sfn = None
        if m.shape[0] == 1:
            a = float(m[0, 0])
            sfn = lambda t: a * t
        self._install(m.shape[0], lambda x: m @ x, sfn)


@dataclass(frozen=True, eq=False)
class AffineMap(OperatorExpr):
    """x -> matrix @ x + shift."""

    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("AffineMap expects a square matrix")
        b = as_vector(self.shift, m.shape[0]).copy()
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite matrix entries")
        m = m.copy()
        m.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "shift", b)
        sfn = None
        if m.shape[0] == 1:
            a, b0 = float(m[0, 0]), float(b[0])
            sfn = lambda t: a * t + b0
        self._install(m.shape[0], lambda x: m @ x + b, sfn)


@dataclass(frozen=True, eq=False)
class Projector(OperatorExpr):
    target: ConvexSet

    def __post_init__(self):
        proj = self.target._project
        self._install(self.target.dim, proj, _scalar_projector(self.target))


@dataclass(frozen=True, eq=False)
class Reflector(OperatorExpr):
    target: ConvexSet

    def __post_init__(self):
        proj = self.target._project
        sp = _scalar_projector(self.target)
        sfn = (lambda t: 2.0 * sp(t) - t) if sp is not None else None
        self._install(self.target.dim, lambda x: 2.0 * proj(x) - x, sfn)


@dataclass(frozen=True, eq=False)
class ConvexCombination(OperatorExpr):
    """(1 - alpha) * left + alpha * right, alpha in (0, 1)."""

    alpha: float
    left: OperatorExpr
    right: OperatorExpr

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        object.__setattr__(self, "alpha", a)
        dim = _merge_dims(self.left.dim, self.right.dim)
        lf, rf = self.left._fn, self.right._fn
        ls, rs = self.left._sfn, self.right._sfn
        sfn = None
        if ls is not None and rs is not None and dim in (None, 1):
            sfn = lambda t: (1.0 - a) * ls(t) + a * rs(t)
        self._install(dim, lambda x: (1.0 - a) * lf(x) + a * rf(x), sfn)


@dataclass(frozen=True, eq=False)
class Composition(OperatorExpr):
    """x -> outer(inner(x))."""

    outer: OperatorExpr
    inner: OperatorExpr

    def __post_init__(self):
        dim = _merge_dims(self.outer.dim, self.inner.dim)
        of, inf_ = self.outer._fn, self.inner._fn
        os_, is_ = self.outer._sfn, self.inner._sfn
        sfn = None
        if os_ is not None and is_ is not None and dim in (None, 1):
            sfn = lambda t: os_(is_(t))
        self._install(dim, lambda x: of(inf_(x)), sfn)


@dataclass(frozen=True, eq=False)
class DouglasRachford(OperatorExpr):
    """x -> (x + R_second(R_first(x))) / 2."""

    first: ConvexSet
    second: ConvexSet

    def __post_init__(self):
        dim = _merge_dims(self.first.dim, self.second.dim)
        pa, pb = self.first._project, self.second._project

        def fn(x):
            ra = 2.0 * pa(x) - x
            rb = 2.0 * pb(ra) - ra
            return 0.5 * (x + rb)

        spa, spb = _scalar_projector(self.first), _scalar_projector(self.second)
        sfn = None
        if spa is not None and spb is not None:

            def sfn(t):
                ra = 2.0 * spa(t) - t
                rb = 2.0 * spb(ra) - ra
                return 0.5 * (t + rb)

        self._install(dim, fn, sfn)


@dataclass(frozen=True, eq=False)
class ScalarPiecewiseLinear(OperatorExpr):
    """Continuous piecewise-linear map on the line with slopes in [-1, 1].

    ``slopes`` has one more entry than ``breakpoints``: slopes[0] applies left
    of the first breakpoint, slopes[i] between breakpoints i-1 and i, and the
    last entry beyond the final breakpoint.  ``anchor_value`` is the value at
    the first breakpoint.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    anchor_value: float = 0.0

    def __post_init__(self):
        xs = as_vector(self.breakpoints).copy()
        sl = as_vector(self.slopes).copy()
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if sl.size != xs.size + 1:
            raise ValueError("need exactly len(breakpoints) + 1 slopes")
        if np.max(np.abs(sl)) > 1.0:
            raise ValueError("slopes must lie in [-1, 1]")
        xs.setflags(write=False)
        sl.setflags(write=False)
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "slopes", sl)
        object.__setattr__(self, "anchor_value", float(self.anchor_value))
        ys = np.concatenate(
            [[self.anchor_value], self.anchor_value + np.cumsum(sl[1:-1] * np.diff(xs))]
        )
        xs_l, ys_l, sl_l = xs.tolist(), ys.tolist(), sl.tolist()

        def sfn(t):
            j = bisect_right(xs_l, t)
            if j == 0:
                return ys_l[0] + sl_l[0] * (t - xs_l[0])
            return ys_l[j - 1] + sl_l[j] * (t - xs_l[j - 1])

        self._install(1, lambda x: np.array([sfn(float(x[0]))]), sfn)

    def value_at(self, t: float) -> float:
        return self._sfn(float(t))


def apply(T: OperatorExpr, x) -> np.ndarray:
    """Evaluate the operator expression at ``x``."""
    return T.apply(x)


# ---------------------------------------------------------------------------
# Averagedness certificates
# ---------------------------------------------------------------------------

UNKNOWN = "unknown"
NONEXPANSIVE = "nonexpansive"
AVERAGED = "averaged"
FIRMLY_NONEXPANSIVE = "firmly_nonexpansive"


@dataclass(frozen=True)
class AveragednessCertificate:
    """Structural guarantee tracked for an operator expression.

    Firmly nonexpansive is identified with averaged at alpha = 1/2; the
    constructor normalizes accordingly.
    """

    kind: str
    alpha: float | None = None

    @classmethod
    def unknown(cls):
        return cls(UNKNOWN)

    @classmethod
    def nonexpansive(cls):
        return cls(NONEXPANSIVE)

    @classmethod
    def averaged(cls, alpha: float):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError("averagedness constant must lie in (0, 1)")
        kind = FIRMLY_NONEXPANSIVE if alpha == 0.5 else AVERAGED
        return cls(kind, alpha)

    @classmethod
    def firmly_nonexpansive(cls):
        return cls(FIRMLY_NONEXPANSIVE, 0.5)

    @property
    def is_nonexpansive(self) -> bool:
        return self.kind != UNKNOWN

    @property
    def is_averaged(self) -> bool:
        return self.kind in (AVERAGED, FIRMLY_NONEXPANSIVE)

    @property
    def is_firmly_nonexpansive(self) -> bool:
        return self.kind == FIRMLY_NONEXPANSIVE


def _spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value by fixed-budget power iteration on mat^T mat."""
    gram = mat.T @ mat
    rng = np.random.default_rng(_SPECTRAL_SEED)
    v = rng.standard_normal(mat.shape[1])
    n = float(np.linalg.norm(v))
    if n == 0.0:
        return 0.0
    v /= n
    for _ in range(_SPECTRAL_ITERS):
        w = gram @ v
        n = float(np.linalg.norm(w))
        if n == 0.0:
            return 0.0
        v = w / n
    return float(np.sqrt(v @ (gram @ v)))


def _linear_certificate(mat: np.ndarray) -> AveragednessCertificate:
    d = mat.shape[0]
    if np.max(np.abs(mat.T @ mat - np.eye(d))) <= _NONEXPANSIVE_SLACK:
        return AveragednessCertificate.nonexpansive()
    if _spectral_norm(mat) <= 1.0 + _NONEXPANSIVE_SLACK:
        return AveragednessCertificate.nonexpansive()
    return AveragednessCertificate.unknown()


def certify(T: OperatorExpr) -> AveragednessCertificate:
    """Structural averagedness calculus; degrades rather than guesses."""
    if isinstance(T, (Identity, Projector, DouglasRachford)):
        return AveragednessCertificate.firmly_nonexpansive()
    if isinstance(T, (Negation, Translation, Reflector, ScalarPiecewiseLinear)):
        return AveragednessCertificate.nonexpansive()
    if isinstance(T, (Linear, AffineMap)):
        return _linear_certificate(T.matrix)
    if isinstance(T, ConvexCombination):
        a = T.alpha
        cl, cr = certify(T.left), certify(T.right)
        if isinstance(T.left, Identity) and cr.is_nonexpansive:
            return AveragednessCertificate.averaged(
                a * (cr.alpha if cr.is_averaged else 1.0)
            )
        if isinstance(T.right, Identity) and cl.is_nonexpansive:
            return AveragednessCertificate.averaged(
                (1.0 - a) * (cl.alpha if cl.is_averaged else 1.0)
            )
        if cl.is_averaged and cr.is_averaged:
            return AveragednessCertificate.averaged(
                (1.0 - a) * cl.alpha + a * cr.alpha
            )
        if cl.is_nonexpansive and cr.is_nonexpansive:
            return AveragednessCertificate.nonexpansive()
        return AveragednessCertificate.unknown()
    if isinstance(T, Composition):
        co, ci = certify(T.outer), certify(T.inner)
        if co.is_averaged and ci.is_averaged:
            a1, a2 = co.alpha, ci.alpha
            return AveragednessCertificate.averaged(
                (a1 + a2 - 2.0 * a1 * a2) / (1.0 - a1 * a2)
            )
        if co.is_nonexpansive and ci.is_nonexpansive:
            return AveragednessCertificate.nonexpansive()
        return AveragednessCertificate.unknown()
    return AveragednessCertificate.unknown()


# ---------------------------------------------------------------------------
# Empirical verifiers
# ---------------------------------------------------------------------------


def _resolve_dim(T: OperatorExpr, dim: int | None) -> int:
    d = T.dim if T.dim is not None else dim
    if d is None:
        raise ValueError("operator is dimension-free; pass dim= explicitly")
    return d


def verify_nonexpansive(
    T: OperatorExpr,
    trials: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
    dim: int | None = None,
    box: float = 10.0,
) -> DiagnosticsReport:
    """Sample random pairs and test ||Tx - Ty|| <= ||x - y|| + tol."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = _resolve_dim(T, dim)
    rng = np.random.default_rng(seed)
    fn = T._fn
    worst = -np.inf
    worst_pair = None
    for i in range(trials):
        x = rng.uniform(-box, box, d)
        y = rng.uniform(-box, box, d)
        viol = float(np.linalg.norm(fn(x) - fn(y)) - np.linalg.norm(x - y))
        if viol > worst:
            worst, worst_pair = viol, (i, x, y)
    params = {"trials": trials, "tol": tol, "dim": d, "box": box}
    meta = {"worst_violation": worst}
    if worst <= tol:
        return DiagnosticsReport(
            "verify_nonexpansive", PASS, params=params, seed=seed, metadata=meta
        )
    i, x, y = worst_pair
    witness = {"trial": i, "x": x, "y": y, "violation": worst}
    return DiagnosticsReport(
        "verify_nonexpansive", FAIL, witness, params=params, seed=seed, metadata=meta
    )


def verify_averaged(
    T: OperatorExpr,
    alpha: float,
    trials: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
    dim: int | None = None,
    box: float = 10.0,
) -> DiagnosticsReport:
    """Test the averagedness inequality

    ||Tx - Ty||^2 + (1-a)/a ||(Id-T)x - (Id-T)y||^2 <= ||x - y||^2 + tol

    on random pairs.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = _resolve_dim(T, dim)
    rng = np.random.default_rng(seed)
    fn = T._fn
    coef = (1.0 - alpha) / alpha
    worst = -np.inf
    worst_pair = None
    for i in range(trials):
        x = rng.uniform(-box, box, d)
        y = rng.uniform(-box, box, d)
        tx, ty = fn(x), fn(y)
        lhs = np.sum((tx - ty) ** 2) + coef * np.sum(((x - tx) - (y - ty)) ** 2)
        viol = float(lhs - np.sum((x - y) ** 2))
        if viol > worst:
            worst, worst_pair = viol, (i, x, y)
    params = {"alpha": alpha, "trials": trials, "tol": tol, "dim": d, "box": box}
    meta = {"worst_violation": worst}
    if worst <= tol:
        return DiagnosticsReport(
            "verify_averaged", PASS, params=params, seed=seed, metadata=meta
        )
    i, x, y = worst_pair
    witness = {"trial": i, "x": x, "y": y, "violation": worst}
    return DiagnosticsReport(
        "verify_averaged", FAIL, witness, params=params, seed=seed, metadata=meta
    )


# ---------------------------------------------------------------------------
# Generalized fixed sets
# ---------------------------------------------------------------------------


def two_ball_gap_vector(A: Ball, B: Ball) -> np.ndarray:
    """Minimal-norm translation v with A and B + v intersecting.

    Zero when the balls already meet; otherwise the vector of norm
    ||cA - cB|| - rA - rB along the line of centers, pulling B toward A.
    """
    d = A.center - B.center
    dist = float(np.linalg.norm(d))
    gap = dist - A.radius - B.radius
    if gap <= 0.0 or dist == 0.0:
        return np.zeros(A.dim)
    return d * (gap / dist)


def fixed_set_description(T: OperatorExpr, v) -> ConvexSet | None:
    """Closed form for Fix(v + T) = {x : x = v + Tx} where one is known.

    Returns None when no rule applies or the data is inconsistent.
    """
    v = as_vector(v, T.dim)
    vnorm = float(np.linalg.norm(v))
    if isinstance(T, Projector) and vnorm <= 1e-12:
        return T.target
    if (
        isinstance(T, ConvexCombination)
        and isinstance(T.left, Identity)
        and isinstance(T.right, (Reflector, Projector))
        and vnorm <= 1e-12
    ):
        return T.right.target
    if isinstance(T, Translation):
        if float(np.linalg.norm(v + T.shift)) <= 1e-12:
            return full_space(T.dim)
        return None
    if isinstance(T, (Linear, AffineMap)):
        L = T.matrix
        b = T.shift if isinstance(T, AffineMap) else np.zeros(L.shape[0])
        M = np.eye(L.shape[0]) - L
        rhs = b + v
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        residual = float(np.linalg.norm(M @ sol - rhs))
        if residual > 1e-8 * (1.0 + float(np.linalg.norm(rhs))):
            return None
        null = scipy.linalg.null_space(M)
        return AffineSubspace(sol, null.T)
    if (
        isinstance(T, DouglasRachford)
        and isinstance(T.first, Ball)
        and isinstance(T.second, Ball)
    ):
        A, B = T.first, T.second
        g = two_ball_gap_vector(A, B)
        if float(np.linalg.norm(v - g)) > 1e-6 * (1.0 + float(np.linalg.norm(g))):
            return None
        d = A.center - B.center
        dist = float(np.linalg.norm(d))
        if dist < A.radius + B.radius - 1e-12 or dist == 0.0:
            # overlapping balls: the fixed set is a lens, no variant fits
            return None
        u_hat = d / dist
        tangency = A.center - A.radius * u_hat
        return Ray(tangency, -u_hat)
    return None


# ---------------------------------------------------------------------------
# Random test family
# ---------------------------------------------------------------------------


def random_scalar_piecewise_linear(
    rng: np.random.Generator,
    max_breakpoints: int = 6,
    span: float = 12.0,
    slope_levels: int = 20,
    anchor_span: float = 4.0,
    max_tail_drift: float = 1.0,
) -> ScalarPiecewiseLinear:
    """Random nonexpansive scalar map for iteration experiments.

    Slopes are drawn from the grid {k/slope_levels : |k| <= slope_levels}, so
    contraction factors are either exactly 1 or bounded away from 1; this
    keeps orbit convergence rates observable at desk scale.  Slope-one tail
    pieces whose drift exceeds ``max_tail_drift`` are flattened to the next
    grid slope: unbounded orbits then grow at most linearly with unit rate,
    so 1e5-step runs stay within the range where 1e-9 tail diagnostics are
    resolvable in float64.
    """
    k = int(rng.integers(1, max_breakpoints + 1))
    xs = np.unique(rng.uniform(-span, span, k))
    slopes = rng.integers(-slope_levels, slope_levels + 1, xs.size + 1) / slope_levels
    anchor = float(rng.uniform(-anchor_span, anchor_span))
    ys = np.concatenate(
        [[anchor], anchor + np.cumsum(slopes[1:-1] * np.diff(xs))]
    )
    capped_slope = (slope_levels - 1) / slope_levels
    if slopes[0] == 1.0 and abs(ys[0] - xs[0]) > max_tail_drift:
        slopes[0] = capped_slope
    if slopes[-1] == 1.0 and abs(ys[-1] - xs[-1]) > max_tail_drift:
        slopes[-1] = capped_slope
    return ScalarPiecewiseLinear(xs, slopes, anchor)
