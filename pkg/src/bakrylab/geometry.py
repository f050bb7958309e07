"""Model spacetimes ``-dt^2 + a^2 h`` and their weighted (N-Bakry-Emery) curvature.

Warped products with a time-only weight use closed-form curvature.  Twisted
products (warp depending on the fiber coordinate ``y``) and spatially varying
weights go through a finite-difference Christoffel/Ricci pipeline evaluated on
a local stencil grid around the query point.

Conventions
-----------
* Coordinates are ``(t, y^1, ..., y^{n-1})``; expressions may depend on ``t``
  and on the first fiber coordinate ``y = y^1``.
* Constant curvature fibers use the conformally flat chart
  ``h = delta / (1 + k |y|^2 / 4)^2`` which has sectional curvature ``k``.
* Tangent vectors passed to :func:`ric_general` are components in the
  orthonormal frame ``(d_t, e_1, ..., e_{n-1})`` with ``e_i = d_i / |d_i|``.
* The slice mean curvature is ``H = (n-1) a_t / a``, positive on expanding
  slices, and ``H_f = H - d_t f``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

from .expr import Expr, as_expr

__all__ = [
    "DomainError",
    "Regime",
    "SyntheticDimension",
    "WeightFunction",
    "ConstantCurvatureFiber",
    "TabulatedFiber",
    "SpacetimeModel",
    "TcdGrid",
    "TcdReport",
    "ric_time_time",
    "ric_general",
    "ric_tensor",
    "ric_frame",
    "ric_mixed",
    "slice_mean_curvatures",
    "check_tcd",
    "bisect_fiber_curvature",
    "cauchy_schwarz_gap",
    "cauchy_schwarz_residual",
]

DEFAULT_FD_STEP = 1e-3
DEFAULT_TCD_TOLERANCE = 1e-9
DEFAULT_RAPIDITY_CAP = 5.0


class DomainError(ValueError):
    """Query outside the region where the model (or its stencil) is defined."""


class Regime(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"


@dataclass(frozen=True)
class SyntheticDimension:
    """The synthetic dimension N, either a finite real or the distinct N = inf regime."""

    regime: Regime
    value: float | None = None

    def __post_init__(self):
        if self.regime is Regime.FINITE:
            if self.value is None or not math.isfinite(self.value):
                raise ValueError("finite synthetic dimension needs a finite value")
            object.__setattr__(self, "value", float(self.value))
        elif self.value is not None:
            raise ValueError("the infinite regime carries no value")

    @classmethod
    def finite(cls, value: float) -> "SyntheticDimension":
        return cls(Regime.FINITE, value)

    @classmethod
    def infinite(cls) -> "SyntheticDimension":
        return cls(Regime.INFINITE)

    @classmethod
    def coerce(cls, value) -> "SyntheticDimension":
        if isinstance(value, SyntheticDimension):
            return value
        if isinstance(value, str):
            if value.strip().lower() in ("inf", "infinity", "infinite", "oo"):
                return cls.infinite()
            value = float(value)
        if value is None or (isinstance(value, float) and math.isinf(value)):
            return cls.infinite()
        return cls.finite(value)

    @property
    def is_infinite(self) -> bool:
        return self.regime is Regime.INFINITE

    def validate(self, n: int) -> "SyntheticDimension":
        """Reject N in (1, n]; returns self for chaining."""
        if self.regime is Regime.FINITE and 1.0 < self.value <= n:
            raise ValueError(f"N = {self.value} lies in (1, {n}], which is not admissible")
        return self

    def exceeds(self, n: int) -> bool:
        """True in the finite N > n regime."""
        return self.regime is Regime.FINITE and self.value > n

    def at_most_one_or_infinite(self) -> bool:
        return self.is_infinite or self.value <= 1.0

    def inv_gap(self, n: int) -> float:
        """1/(N - n); exactly zero in the infinite regime."""
        if self.is_infinite:
            return 0.0
        return 1.0 / (self.value - n)

    def raychaudhuri_coefficient(self, n: int) -> float:
        """(1 - N)/((n - 1)(n - N)), the f'^2 coefficient in the H_f equation.

        Its N -> inf limit is 1/(n - 1), which the infinite regime uses.
        """
        if self.is_infinite:
            return 1.0 / (n - 1)
        return (1.0 - self.value) / ((n - 1) * (n - self.value))

    def label(self) -> str:
        return "inf" if self.is_infinite else repr(self.value)

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class WeightFunction:
    """Weight f(t, y).

    Built either as ``psi(t) + phi(y)`` via :meth:`separable` or from a
    joint expression.  ``convex_from`` is a declared certificate that
    ``t -> f(t, y)`` is convex on ``[convex_from, inf)``; it is never verified.
    """

    expr: Expr
    temporal: Expr | None = None
    spatial: Expr | None = None
    convex_from: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "expr", as_expr(self.expr))

    @classmethod
    def separable(cls, temporal=0.0, spatial=0.0, convex_from=None) -> "WeightFunction":
        psi, phi = as_expr(temporal), as_expr(spatial)
        if psi.depends_on("y"):
            raise ValueError("temporal part must not depend on y")
        if phi.depends_on("t"):
            raise ValueError("spatial part must not depend on t")
        return cls(psi + phi, psi, phi, convex_from)

    @classmethod
    def joint(cls, expr, convex_from=None) -> "WeightFunction":
        return cls(as_expr(expr), None, None, convex_from)

    @property
    def homogeneous(self) -> bool:
        return not self.expr.depends_on("y")

    @cached_property
    def f_t(self) -> Expr:
        return self.expr.diff("t")

    @cached_property
    def f_tt(self) -> Expr:
        return self.f_t.diff("t")

    @cached_property
    def f_y(self) -> Expr:
        return self.expr.diff("y")

    @cached_property
    def f_ty(self) -> Expr:
        return self.f_t.diff("y")


@dataclass(frozen=True)
class ConstantCurvatureFiber:
    curvature: float = 0.0

    def unit_ricci(self, n: int) -> float:
        return (n - 2) * self.curvature


@dataclass(frozen=True)
class TabulatedFiber:
    """Fiber known only through a lower bound of Ric_h on h-unit vectors.

    Closed-form warped curvature then yields lower bounds for spatial
    directions, so TCD verdicts are conservative.  No chart is available,
    so the finite-difference pipeline rejects it.
    """

    ricci_lower_bound: float

    def unit_ricci(self, n: int) -> float:
        return self.ricci_lower_bound


Fiber = Union[ConstantCurvatureFiber, TabulatedFiber]


@dataclass(frozen=True)
class SpacetimeModel:
    """Metric ``-dt^2 + a(t, y)^2 h`` with weight f on an n-dimensional spacetime."""

    n: int
    warp: Expr
    fiber: Fiber = field(default_factory=ConstantCurvatureFiber)
    weight: WeightFunction = field(default_factory=lambda: WeightFunction.separable(0.0))
    domain: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("spacetime dimension n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "warp", as_expr(self.warp))
        if not isinstance(self.weight, WeightFunction):
            object.__setattr__(self, "weight", WeightFunction.joint(self.weight))

    @property
    def is_warped(self) -> bool:
        return not self.warp.depends_on("y")

    @property
    def closed_form(self) -> bool:
        """Whether curvature in every direction has a closed form here."""
        return self.is_warped and self.weight.homogeneous

    @cached_property
    def warp_t(self) -> Expr:
        return self.warp.diff("t")

    @cached_property
    def warp_tt(self) -> Expr:
        return self.warp_t.diff("t")

    def with_fiber(self, fiber: Fiber) -> "SpacetimeModel":
        return SpacetimeModel(self.n, self.warp, fiber, self.weight, self.domain)

    def check_point(self, t, y, reach: float = 0.0) -> None:
        if self.domain is not None:
            (t0, t1), (y0, y1) = self.domain
            y = _first(y)
            if not (t0 <= t - reach and t + reach <= t1 and y0 <= y - reach and y + reach <= y1):
                raise DomainError(
                    f"point (t={t}, y={y}) with stencil reach {reach} leaves domain {self.domain}"
                )

    def _warp_data(self, t, y):
        y1 = _first(y)
        a = self.warp(t, y1)
        if np.any(~np.isfinite(a)) or np.any(a <= 0):
            raise DomainError(f"warp must be positive and finite, got a={a} at t={t}, y={y1}")
        a_t = self.warp_t(t, y1)
        a_tt = self.warp_tt(t, y1)
        return a, a_t, a_tt

    def _weight_t(self, t, y):
        y1 = _first(y)
        w = self.weight
        f_t = w.f_t(t, y1)
        f_tt = w.f_tt(t, y1)
        if np.any(~np.isfinite(f_t)) or np.any(~np.isfinite(f_tt)):
            raise DomainError(f"weight derivatives not finite at t={t}, y={y1}")
        return f_t, f_tt

    # -- coordinate metric for the finite-difference pipeline ----------------
    def metric(self, points: np.ndarray) -> np.ndarray:
        """Coordinate metric at points of shape (P, n); returns (P, n, n)."""
        if isinstance(self.fiber, TabulatedFiber):
            raise DomainError("tabulated fibers have no chart; finite differences unavailable")
        pts = np.asarray(points, dtype=float)
        n = self.n
        t = pts[:, 0]
        ys = pts[:, 1:]
        a = self.warp(t, ys[:, 0])
        if np.any(~np.isfinite(a)) or np.any(a <= 0):
            raise DomainError("warp must be positive on the stencil")
        k = self.fiber.curvature
        denom = 1.0 + 0.25 * k * np.sum(ys * ys, axis=1)
        if n > 2 and np.any(denom <= 0):
            raise DomainError("stencil leaves the fiber chart")
        conf = 1.0 / denom**2 if n > 2 else np.ones_like(t)
        g = np.zeros((len(t), n, n))
        g[:, 0, 0] = -1.0
        idx = np.arange(1, n)
        g[:, idx, idx] = (a * a * conf)[:, None]
        return g


def _first(y) -> float:
    if np.ndim(y) == 0:
        return float(y)
    return float(np.asarray(y, dtype=float).ravel()[0])


def _point(model: SpacetimeModel, t: float, y) -> np.ndarray:
    p = np.zeros(model.n)
    p[0] = t
    if np.ndim(y) == 0:
        p[1] = float(y)
    else:
        ys = np.asarray(y, dtype=float).ravel()
        if len(ys) > model.n - 1:
            raise ValueError(f"fiber point has {len(ys)} coordinates, expected <= {model.n - 1}")
        p[1 : 1 + len(ys)] = ys
    return p


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def ric_time_time(model: SpacetimeModel, N: SyntheticDimension, t, y=0.0):
    """Ric^N_f(d_t, d_t) = -(n-1) a''/a + f'' - f'^2/(N-n).

    Exact for warped and twisted products alike since the t-lines are
    geodesics and Gamma^c_tt = 0.  Vectorized over ``t``.
    """
    N = SyntheticDimension.coerce(N).validate(model.n)
    a, _, a_tt = model._warp_data(t, y)
    f_t, f_tt = model._weight_t(t, y)
    return -(model.n - 1) * a_tt / a + f_tt - f_t * f_t * N.inv_gap(model.n)


def _warped_frame_coefficients(model: SpacetimeModel, N: SyntheticDimension, t):
    """(A, C): Ric^N_f on d_t and on any unit fiber direction, closed form."""
    n = model.n
    a, a_t, a_tt = model._warp_data(t, 0.0)
    f_t, f_tt = model._weight_t(t, 0.0)
    hub = a_t / a
    A = -(n - 1) * a_tt / a + f_tt - f_t * f_t * N.inv_gap(n)
    C = a_tt / a + (n - 2) * hub * hub + model.fiber.unit_ricci(n) / (a * a) - hub * f_t
    return A, C


def slice_mean_curvatures(model: SpacetimeModel, t, y=0.0):
    """Mean curvature H and f-mean curvature H_f of the constant-t slice."""
    a, a_t, _ = model._warp_data(t, y)
    f_t, _ = model._weight_t(t, y)
    H = (model.n - 1) * a_t / a
    return H, H - f_t


# ---------------------------------------------------------------------------
# finite-difference pipeline
# ---------------------------------------------------------------------------

_D1_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_D1_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def _christoffel(model: SpacetimeModel, pts: np.ndarray, h: float) -> np.ndarray:
    """Gamma^a_{bc} at each point, fourth-order centered metric derivatives."""
    n = model.n
    P = len(pts)
    eye = np.eye(n)
    # stencil[p, e, k, :] = pts[p] + offset_k * h * e_e
    stencil = pts[:, None, None, :] + (_D1_OFFSETS[None, None, :, None] * h) * eye[None, :, None, :]
    g_st = model.metric(stencil.reshape(-1, n)).reshape(P, n, len(_D1_OFFSETS), n, n)
    dg = np.einsum("k,pekbc->pebc", _D1_WEIGHTS, g_st) / h
    ginv = np.linalg.inv(model.metric(pts))
    return 0.5 * (
        np.einsum("pad,pbdc->pabc", ginv, dg)
        + np.einsum("pad,pcdb->pabc", ginv, dg)
        - np.einsum("pad,pdbc->pabc", ginv, dg)
    )


def ric_tensor(model: SpacetimeModel, N: SyntheticDimension, t: float, y=0.0, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Coordinate components of Ric^N_f at (t, y) by finite differences.

    Christoffel symbols use fourth-order centered first derivatives of the
    metric; their derivatives and the second derivatives of f use
    second-order centered stencils, so the result is O(h^2).
    """
    N = SyntheticDimension.coerce(N).validate(model.n)
    n = model.n
    model.check_point(t, y, reach=3 * h)
    p = _point(model, t, y)
    eye = np.eye(n)
    pts = np.vstack([p[None, :], p + h * eye, p - h * eye])
    gam = _christoffel(model, pts, h)
    g0, gp, gm = gam[0], gam[1 : n + 1], gam[n + 1 :]
    dgam = (gp - gm) / (2 * h)  # dgam[e, a, b, c] = d_e Gamma^a_{bc}
    ric = (
        np.einsum("aabd->bd", dgam)
        - np.einsum("daab->bd", dgam)
        + np.einsum("aae,ebd->bd", g0, g0)
        - np.einsum("ade,eab->bd", g0, g0)
    )

    f = model.weight.expr
    def fval(q):
        return f(q[..., 0], q[..., 1])

    f0 = fval(p)
    grad = np.array([
        np.dot(_D1_WEIGHTS, fval(p + np.outer(_D1_OFFSETS * h, eye[e]))) / h for e in range(n)
    ])
    hess = np.empty((n, n))
    for a in range(n):
        hess[a, a] = (fval(p + h * eye[a]) - 2 * f0 + fval(p - h * eye[a])) / (h * h)
        for b in range(a + 1, n):
            pp = fval(p + h * (eye[a] + eye[b]))
            pm = fval(p + h * (eye[a] - eye[b]))
            mp = fval(p - h * (eye[a] - eye[b]))
            mm = fval(p - h * (eye[a] + eye[b]))
            hess[a, b] = hess[b, a] = (pp - pm - mp + mm) / (4 * h * h)
    hess_f = hess - np.einsum("cab,c->ab", g0, grad)
    return ric + hess_f - np.outer(grad, grad) * N.inv_gap(n)


def ric_frame(model: SpacetimeModel, N: SyntheticDimension, t: float, y=0.0, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Ric^N_f in the orthonormal frame (d_t, e_1, ..., e_{n-1})."""
    R = ric_tensor(model, N, t, y, h)
    g = model.metric(_point(model, t, y)[None, :])[0]
    scale = 1.0 / np.sqrt(np.abs(np.diag(g)))
    return R * np.outer(scale, scale)


def ric_mixed(model: SpacetimeModel, N: SyntheticDimension, t: float, y=0.0, h: float = DEFAULT_FD_STEP) -> float:
    """Coordinate component Ric^N_f(d_t, d_y) (first fiber coordinate)."""
    return float(ric_tensor(model, N, t, y, h)[0, 1])


def ric_general(model: SpacetimeModel, N, X: Sequence[float], t: float, y=0.0, *,
                method: str = "auto", h: float = DEFAULT_FD_STEP, unit_tol: float = 1e-9) -> float:
    """Ric^N_f(X, X) for a unit timelike X given in the orthonormal frame.

    ``method`` is ``"closed"`` (warped product, time-only weight),
    ``"fd"`` (finite differences) or ``"auto"``.
    """
    N = SyntheticDimension.coerce(N).validate(model.n)
    X = np.asarray(X, dtype=float)
    if X.shape != (model.n,):
        raise ValueError(f"X must have {model.n} frame components")
    norm = -X[0] ** 2 + np.dot(X[1:], X[1:])
    if abs(norm + 1.0) > unit_tol * max(1.0, X[0] ** 2):
        raise ValueError(f"X is not unit timelike: g(X, X) = {norm}")
    if method == "auto":
        method = "closed" if model.closed_form else "fd"
    if method == "closed":
        if not model.closed_form:
            raise ValueError("closed form needs a warped product with a time-only weight")
        A, C = _warped_frame_coefficients(model, N, t)
        return float(X[0] ** 2 * A + np.dot(X[1:], X[1:]) * C)
    if method == "fd":
        R = ric_frame(model, N, t, y, h)
        return float(X @ R @ X)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# TCD sampling
# ---------------------------------------------------------------------------

LambdaLike = Union[float, Expr, str, Callable]


def _lambda_fn(lam: LambdaLike):
    if callable(lam) and not isinstance(lam, Expr):
        return lam, getattr(lam, "__name__", "callable")
    e = as_expr(lam) if not isinstance(lam, (int, float)) else as_expr(float(lam))
    return (lambda t, y: e(t, y)), str(e)


@dataclass(frozen=True)
class TcdGrid:
    t_values: tuple[float, ...]
    y_values: tuple[float, ...] = (0.0,)
    chi_max: float = DEFAULT_RAPIDITY_CAP
    chi_points: int = 51
    h: float = DEFAULT_FD_STEP

    @classmethod
    def linspace(cls, t0: float, t1: float, num: int, **kw) -> "TcdGrid":
        return cls(tuple(np.linspace(t0, t1, num).tolist()), **kw)

    @property
    def chis(self) -> np.ndarray:
        return np.linspace(0.0, self.chi_max, self.chi_points)


@dataclass(frozen=True)
class TcdReport:
    """Outcome of a sampled TCD(lambda, N) check.

    ``null_coefficient`` is the minimum over sampled points and directions of
    ``Ric(d_t + E, d_t + E)``, the chi -> inf limit of ``Ric(X, X)/cosh^2``.
    When it is negative the margin is unbounded below and ``worst_margin`` is
    ``-inf``.  Satisfaction is a sampling certificate, not a proof.
    """

    lam: str
    N: SyntheticDimension
    satisfied: bool
    worst_margin: float
    worst_point: tuple[float, float, float]
    null_coefficient: float
    tolerance: float
    method: str
    certificate: str = "sampling-based; not a proof"

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N.label(),
            "satisfied": self.satisfied,
            "worst_margin": self.worst_margin,
            "worst_point": {"t": self.worst_point[0], "y": self.worst_point[1], "chi": self.worst_point[2]},
            "null_coefficient": self.null_coefficient,
            "tolerance": self.tolerance,
            "method": self.method,
            "certificate": self.certificate,
        }


def _fiber_directions(m: int) -> list[np.ndarray]:
    dirs = []
    eye = np.eye(m)
    for i in range(m):
        dirs += [eye[i], -eye[i]]
        for j in range(i + 1, m):
            for s in (1.0, -1.0):
                dirs.append((eye[i] + s * eye[j]) / math.sqrt(2))
    return dirs


def check_tcd(model: SpacetimeModel, N, lam: LambdaLike, grid: TcdGrid, *,
              tolerance: float = DEFAULT_TCD_TOLERANCE, method: str = "auto") -> TcdReport:
    """Sample Ric^N_f(X, X) - lambda over unit timelike X = cosh(chi) d_t + sinh(chi) E."""
    N = SyntheticDimension.coerce(N).validate(model.n)
    lam_fn, lam_label = _lambda_fn(lam)
    chis = grid.chis
    ch2 = np.cosh(chis) ** 2
    sh2 = np.sinh(chis) ** 2
    csh = np.cosh(chis) * np.sinh(chis)
    if method == "auto":
        method = "closed" if model.closed_form else "fd"

    worst = math.inf
    worst_pt = (math.nan, math.nan, math.nan)
    null_min = math.inf
    null_pt = (math.nan, math.nan, math.inf)

    if method == "closed":
        if not model.closed_form:
            raise ValueError("closed form needs a warped product with a time-only weight")
        t = np.asarray(grid.t_values, dtype=float)
        A, C = _warped_frame_coefficients(model, N, t)
        A = np.broadcast_to(A, t.shape)
        C = np.broadcast_to(C, t.shape)
        for yv in grid.y_values:
            lam_v = np.broadcast_to(np.asarray(lam_fn(t, yv), dtype=float), t.shape)
            margin = A[:, None] * ch2[None, :] + C[:, None] * sh2[None, :] - lam_v[:, None]
            i, j = np.unravel_index(np.argmin(margin), margin.shape)
            if margin[i, j] < worst:
                worst = float(margin[i, j])
                worst_pt = (float(t[i]), float(yv), float(chis[j]))
            null = A + C
            k = int(np.argmin(null))
            if null[k] < null_min:
                null_min = float(null[k])
                null_pt = (float(t[k]), float(yv), math.inf)
    elif method == "fd":
        dirs = _fiber_directions(model.n - 1)
        for tv in grid.t_values:
            for yv in grid.y_values:
                R = ric_frame(model, N, tv, yv, grid.h)
                lam_v = float(lam_fn(tv, yv))
                A = R[0, 0]
                for E in dirs:
                    B = float(R[0, 1:] @ E)
                    C = float(E @ R[1:, 1:] @ E)
                    margin = A * ch2 + 2 * B * csh + C * sh2 - lam_v
                    j = int(np.argmin(margin))
                    if margin[j] < worst:
                        worst = float(margin[j])
                        worst_pt = (float(tv), float(yv), float(chis[j]))
                    null = A + 2 * B + C
                    if null < null_min:
                        null_min = float(null)
                        null_pt = (float(tv), float(yv), math.inf)
    else:
        raise ValueError(f"unknown method {method!r}")

    if null_min < -tolerance:
        worst, worst_pt = -math.inf, null_pt
    return TcdReport(
        lam=lam_label,
        N=N,
        satisfied=bool(worst >= -tolerance),
        worst_margin=worst,
        worst_point=worst_pt,
        null_coefficient=null_min,
        tolerance=tolerance,
        method=method,
    )


@dataclass(frozen=True)
class CurvatureThreshold:
    lower: float  # largest sampled curvature found failing
    upper: float  # smallest sampled curvature found satisfying
    report: TcdReport  # report at ``upper``

    @property
    def threshold(self) -> float:
        return self.upper


def bisect_fiber_curvature(model: SpacetimeModel, N, lam: LambdaLike, grid: TcdGrid,
                           lo: float, hi: float, *, tol: float = 1e-3,
                           tolerance: float = DEFAULT_TCD_TOLERANCE) -> CurvatureThreshold:
    """Locate the fiber curvature above which TCD(lambda, N) holds on the grid."""
    def probe(k):
        return check_tcd(model.with_fiber(ConstantCurvatureFiber(k)), N, lam, grid, tolerance=tolerance)

    hi_report = probe(hi)
    if not hi_report.satisfied:
        raise ValueError(f"TCD fails at the upper bracket curvature {hi}")
    if probe(lo).satisfied:
        raise ValueError(f"TCD already holds at the lower bracket curvature {lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        rep = probe(mid)
        if rep.satisfied:
            hi, hi_report = mid, rep
        else:
            lo = mid
    return CurvatureThreshold(lo, hi, hi_report)


# ---------------------------------------------------------------------------
# Cauchy-Schwarz step behind the N > n focusing bound
# ---------------------------------------------------------------------------

def cauchy_schwarz_gap(H, f_prime, n: int, N: float):
    """H^2/(n-1) + f'^2/(N-n) - (H - f')^2/(N-1), nonnegative for N > n."""
    if not np.all(np.asarray(N) > n):
        raise ValueError("the inequality needs N > n")
    return H * H / (n - 1) + f_prime * f_prime / (N - n) - (H - f_prime) ** 2 / (N - 1)


def cauchy_schwarz_residual(H, f_prime, n: int, N: float):
    """H + (n-1) f'/(N-n); zero exactly on the equality case."""
    if not np.all(np.asarray(N) > n):
        raise ValueError("the inequality needs N > n")
    return H + (n - 1) * f_prime / (N - n)
