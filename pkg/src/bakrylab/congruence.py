"""Weight profiles along a timelike geodesic and the weighted Raychaudhuri equation.

The normalized f-mean curvature ``x = H_f/(n-1)`` obeys

    x' = -(Ric^N_f + |sigma|^2)/(n-1) - x^2 - 2 x f'/(n-1) - c_N f'^2,
    c_N = (1-N)/((n-1)^2 (n-N))      (c_inf = 1/(n-1)^2),

and the reparametrization ``s(t) = int_0^t exp(-2 f/(n-1))`` tracks future
f-completeness.  Blow-up (focusing) is tracked by switching to ``w = 1/x``
near the pole, where the equation is regular.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .expr import Expr, as_expr
from .geometry import SpacetimeModel, SyntheticDimension

__all__ = [
    "FProfile",
    "CongruenceState",
    "BlowupRecord",
    "Trajectory",
    "FCompleteness",
    "QuadratureError",
    "s_of_t",
    "s_infinity",
    "is_future_f_complete",
    "raychaudhuri_rhs",
    "integrate",
    "integrate_in_s",
    "riccati_upper_bound",
]

S_ABS_TOL = 1e-10
REL_FLOOR = 64 * np.finfo(float).eps  # absolute 1e-10 is below resolution once s is large
DEFAULT_RTOL = 1e-10
DIVERGENCE_THRESHOLD = 1e6
FAILURE_DIVERGENCE = 1e3
_CHECK_POINTS = tuple(np.linspace(0.0, 4.0, 9).tolist())


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_estimate: float):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")


def _fd_derivative(fn: Callable[[float], float], t: float, h: float = 1e-3) -> float:
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


@dataclass(frozen=True)
class FProfile:
    """f restricted to a geodesic, t -> (f, f', f'').

    ``convex_from`` is an optional declared certificate that f is convex on
    ``[convex_from, inf)``; it enables closed tail bounds for ``s``.
    The derivative triple is cross-checked by finite differences on
    construction (relative error below 1e-6, scaled by max(1, |f'|)).
    """

    f: Callable[[float], float]
    df: Callable[[float], float]
    ddf: Callable[[float], float]
    provenance: str = "analytic"
    convex_from: float | None = None
    check_points: Sequence[float] = _CHECK_POINTS
    source: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        for t in self.check_points:
            for lo, hi, name in ((self.f, self.df, "f'"), (self.df, self.ddf, "f''")):
                approx = _fd_derivative(lo, t)
                exact = hi(t)
                if not math.isfinite(exact):
                    raise ValueError(f"{name} is not finite at t={t}")
                if abs(approx - exact) > 1e-6 * max(1.0, abs(exact)):
                    raise ValueError(
                        f"{name} inconsistent with its antiderivative at t={t}: "
                        f"finite difference {approx!r} vs supplied {exact!r}"
                    )

    @classmethod
    def analytic(cls, f, df, ddf, convex_from=None, **kw) -> "FProfile":
        return cls(f, df, ddf, "analytic", convex_from, **kw)

    @classmethod
    def from_expr(cls, expr, convex_from=None, **kw) -> "FProfile":
        e = as_expr(expr)
        if e.depends_on("y"):
            raise ValueError("a geodesic profile depends on t only")
        d1 = e.diff("t")
        d2 = d1.diff("t")
        return cls(_scalar(e), _scalar(d1), _scalar(d2), "analytic", convex_from, source=(str(e),), **kw)

    @classmethod
    def constant(cls, k: float = 0.0) -> "FProfile":
        return cls.from_expr(float(k))

    @classmethod
    def from_model(cls, model: SpacetimeModel, y=0.0, t0: float = 0.0, **kw) -> "FProfile":
        """Weight along the t-line through fiber point ``y``, starting at ``t0``."""
        w = model.weight
        y1 = float(np.ravel(y)[0]) if np.ndim(y) else float(y)
        e, d1, d2 = w.expr, w.f_t, w.f_tt
        convex_from = None if w.convex_from is None else max(0.0, w.convex_from - t0)
        return cls(
            lambda t: float(e(t0 + t, y1)),
            lambda t: float(d1(t0 + t, y1)),
            lambda t: float(d2(t0 + t, y1)),
            "model",
            convex_from,
            source=(model, y1, t0),
            **kw,
        )

    def shifted(self, c: float) -> "FProfile":
        """Profile of f + c."""
        f = self.f
        return FProfile(lambda t: f(t) + c, self.df, self.ddf, self.provenance,
                        self.convex_from, self.check_points, self.source)

    def density(self, t, n: int):
        """ds/dt = exp(-2 f/(n-1))."""
        return math.exp(-2.0 * self.f(t) / (n - 1))

    def tail_bound(self, T: float, n: int) -> float | None:
        """Upper bound of int_T^inf exp(-2f/(n-1)), or None without a certificate.

        With f convex on [T, inf) and f'(T) > 0, f' >= f'(T) there and the
        integral is at most exp(-2f(T)/(n-1)) (n-1) / (2 f'(T)).
        """
        if self.convex_from is None or T < self.convex_from:
            return None
        slope = self.df(T)
        if slope <= 0:
            return None
        return self.density(T, n) * (n - 1) / (2.0 * slope)


def _scalar(e: Expr):
    if e.is_const:
        v = float(e.value)
        return lambda t: v
    return lambda t: float(e(t))


@dataclass(frozen=True)
class CongruenceState:
    t: float
    s: float
    x: float
    shear_sq: float = 0.0

    def __post_init__(self):
        if self.shear_sq < 0:
            raise ValueError("shear_sq must be nonnegative")


@dataclass(frozen=True)
class BlowupRecord:
    detected: bool
    t_blowup: float | None
    x_at_cutoff: float
    method: str  # "richardson-extrapolated" or "threshold-crossing"
    s_blowup: float | None = None

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "t_blowup": self.t_blowup,
            "s_blowup": self.s_blowup,
            "x_at_cutoff": self.x_at_cutoff,
            "method": self.method,
        }


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    s: np.ndarray
    x: np.ndarray
    shear_sq: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    n: int

    @property
    def H_f(self) -> np.ndarray:
        return (self.n - 1) * self.x

    def states(self) -> list[CongruenceState]:
        return [CongruenceState(*row) for row in zip(self.t, self.s, self.x, self.shear_sq)]

    COLUMNS = ("t", "s", "x", "H_f", "shear_sq", "f", "f_prime")

    def rows(self):
        for row in zip(self.t, self.s, self.x, self.H_f, self.shear_sq, self.f, self.f_prime):
            yield row

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([format(float(v), ".17g") for v in row])


# ---------------------------------------------------------------------------
# s-reparametrization
# ---------------------------------------------------------------------------

def _quad_density(profile: FProfile, n: int, a: float, b: float, epsabs: float):
    val, err = quad(lambda u: profile.density(u, n), a, b, epsabs=epsabs, epsrel=REL_FLOOR, limit=200)
    return val, err


def s_of_t(profile: FProfile, n: int, t: float, t_start: float = 0.0) -> float:
    """int_{t_start}^t exp(-2 f/(n-1)) by adaptive Gauss-Kronrod quadrature.

    The error target is 1e-10 absolute, relaxed to a few ulps of the result
    when the integral is too large for that to be representable.
    """
    if t < t_start:
        raise ValueError("only future evolution is supported (t >= t_start)")
    if t == t_start:
        return 0.0
    pieces = max(1, int(math.ceil((t - t_start) / 8.0)))
    edges = np.linspace(t_start, t, pieces + 1)
    total, err_total = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _quad_density(profile, n, float(a), float(b), S_ABS_TOL / pieces)
        total += val
        err_total += err
    if not err_total <= max(S_ABS_TOL, REL_FLOOR * abs(total)):
        raise QuadratureError(f"s({t}) did not converge", err_total)
    return total


@dataclass(frozen=True)
class SInfinity:
    lower: float
    upper: float
    cut: float


def s_infinity(profile: FProfile, n: int, *, target_tail: float = 1e-12, t_cap: float = 200.0) -> SInfinity | None:
    """Certified enclosure of s(inf) from the convexity tail certificate, or None."""
    if profile.convex_from is None:
        return None
    T = max(profile.convex_from, 0.0)
    while T <= t_cap:
        tail = profile.tail_bound(T, n)
        if tail is not None and tail <= target_tail:
            s_T = s_of_t(profile, n, T)
            return SInfinity(s_T - S_ABS_TOL, s_T + tail + S_ABS_TOL, T)
        T = T + 1.0 if T < 10 else T * 1.25
    return None


class FCompleteness(enum.Enum):
    COMPLETE_UP_TO_HORIZON = "complete-up-to-horizon"
    INCOMPLETE_CERTIFIED = "incomplete-certified"
    UNDETERMINED = "undetermined"


def is_future_f_complete(profile: FProfile, n: int, horizon: float, threshold: float) -> FCompleteness:
    """Tri-state f-completeness verdict.

    Numerics can never certify surjectivity of s onto [0, inf); the best
    positive answer is that s reaches ``threshold`` by ``horizon``.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if s_infinity(profile, n) is not None:
        return FCompleteness.INCOMPLETE_CERTIFIED
    t, s = 0.0, 0.0
    while t < horizon:
        t_next = min(horizon, t + 8.0)
        s += s_of_t(profile, n, t_next, t)
        t = t_next
        if s >= threshold:
            return FCompleteness.COMPLETE_UP_TO_HORIZON
    return FCompleteness.UNDETERMINED


# ---------------------------------------------------------------------------
# the weighted Raychaudhuri equation
# ---------------------------------------------------------------------------

def _coefficient(n: int, N: SyntheticDimension) -> float:
    return N.raychaudhuri_coefficient(n) / (n - 1)


def raychaudhuri_rhs(state: CongruenceState, ric_along: float, profile: FProfile, n: int, N) -> float:
    """x' for the normalized f-mean curvature."""
    N = SyntheticDimension.coerce(N).validate(n)
    fp = profile.df(state.t)
    x = state.x
    return (-(ric_along + state.shear_sq) / (n - 1) - x * x - 2.0 * x * fp / (n - 1)
            - _coefficient(n, N) * fp * fp)


def riccati_upper_bound(profile: FProfile, n: int, delta: float, t, s):
    """Comparison bound valid for TCD(0, N) with N <= 1 or N = inf and x(0) <= -delta."""
    e0 = math.exp(-2.0 * profile.f(0.0) / (n - 1))
    ft = np.array([profile.f(float(v)) for v in np.atleast_1d(t)])
    return -np.exp(-2.0 * ft / (n - 1)) / (e0 / delta - np.atleast_1d(s))


def _as_fn(value) -> Callable[[float], float]:
    if value is None:
        return lambda t: 0.0
    if isinstance(value, (int, float)):
        v = float(value)
        return lambda t: v
    if isinstance(value, (str, Expr)):
        e = as_expr(value)
        return _scalar(e)
    return value


def _hermite_root(t0, t1, w0, w1, d0, d1) -> float:
    """Root in [t0, t1] of the cubic Hermite interpolant of (w, w')."""
    h = t1 - t0

    def cubic(u):
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        return h00 * w0 + h10 * h * d0 + h01 * w1 + h11 * h * d1

    lo, hi = 0.0, 1.0
    flo = cubic(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = cubic(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return t0 + h * 0.5 * (lo + hi)


def _w_phase_rk4(rhs, t0: float, w0: float, s0: float, h: float, t_end: float):
    """Fixed-step RK4 on (w, s); returns the root crossing (t, s) or the stop state."""
    t, w, s = t0, w0, s0
    y = np.array([w, s])
    k_prev = rhs(t, y)
    steps = 0
    while t < t_end and steps < 100000:
        k1 = k_prev
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        k_new = rhs(t + h, y_new)
        steps += 1
        if y[0] != 0 and (y_new[0] == 0 or (y_new[0] > 0) != (y[0] > 0)):
            tr = _hermite_root(t, t + h, y[0], y_new[0], k1[0], k_new[0])
            u = (tr - t) / h
            sr = y[1] + u * (y_new[1] - y[1])  # s is smooth and slowly varying here
            return tr, sr, True, (t + h, y_new)
        if abs(y_new[0]) > 4 * abs(w0):
            return t + h, y_new[1], False, (t + h, y_new)
        t, y, k_prev = t + h, y_new, k_new
    return t, y[1], False, (t, y)


def integrate(initial: CongruenceState, profile: FProfile, ric_along, n: int, N, t_max: float, *,
              shear_sq=None, rtol: float = DEFAULT_RTOL, divergence: float = DIVERGENCE_THRESHOLD,
              max_phases: int = 20) -> tuple[Trajectory, BlowupRecord]:
    """Integrate x and s forward from ``initial`` until ``t_max`` or focusing.

    The x-phase uses the DOP853 embedded Runge-Kutta pair.  Once |x| exceeds
    ``divergence`` the solver switches to w = 1/x and locates the root of w
    by Richardson extrapolation of two fixed-step RK4 passes with cubic
    Hermite root location.
    """
    N = SyntheticDimension.coerce(N).validate(n)
    if t_max <= initial.t:
        raise ValueError("t_max must exceed the initial time")
    ric = _as_fn(ric_along)
    shear = _as_fn(shear_sq if shear_sq is not None else initial.shear_sq)
    cN = _coefficient(n, N)
    k = 1.0 / (n - 1)

    def rhs_x(t, z):
        x = z[0]
        fp = profile.df(t)
        dx = -(ric(t) + shear(t)) * k - x * x - 2.0 * x * fp * k - cN * fp * fp
        return np.array([dx, profile.density(t, n)])

    def rhs_w(t, z):
        w = z[0]
        fp = profile.df(t)
        dw = 1.0 + 2.0 * w * fp * k + w * w * ((ric(t) + shear(t)) * k + cN * fp * fp)
        return np.array([dw, profile.density(t, n)])

    def blowup_event(t, z):
        return abs(z[0]) - divergence

    blowup_event.terminal = True

    ts, ss, xs = [initial.t], [initial.s], [initial.x]
    t, x, s = initial.t, initial.x, initial.s
    record = BlowupRecord(False, None, x, "none")

    for _ in range(max_phases):
        sol = solve_ivp(rhs_x, (t, t_max), [x, s], method="DOP853", rtol=rtol,
                        atol=rtol * 1e-2, events=blowup_event)
        ts.extend(sol.t[1:].tolist())
        xs.extend(sol.y[0, 1:].tolist())
        ss.extend(sol.y[1, 1:].tolist())
        t, x, s = float(sol.t[-1]), float(sol.y[0, -1]), float(sol.y[1, -1])
        if sol.status == -1:
            record = BlowupRecord(abs(x) > FAILURE_DIVERGENCE, t if abs(x) > FAILURE_DIVERGENCE else None,
                                  x, "threshold-crossing", s)
            break
        if sol.status == 0:
            record = BlowupRecord(False, None, x, "none")
            break
        # switch to the reciprocal variable
        w0 = 1.0 / x
        span = min(4 * abs(w0), t_max - t)
        h = max(abs(w0) / 64.0, 1e-300)
        roots = []
        state_after = None
        for step in (h, h / 2):
            tr, sr, found, after = _w_phase_rk4(rhs_w, t, w0, s, step, t + span)
            roots.append((tr, sr, found))
            state_after = after
        (t1, s1, ok1), (t2, s2, ok2) = roots
        if ok1 and ok2:
            t_star = t2 + (t2 - t1) / 15.0
            s_star = s2 + (s2 - s1) / 15.0
            record = BlowupRecord(True, float(t_star), x, "richardson-extrapolated", float(s_star))
            break
        # w turned back (or ran out of time): resume the x-phase
        t_back, z_back = state_after
        if t_back >= t_max or z_back[0] == 0:
            record = BlowupRecord(False, None, x, "none")
            break
        t, x, s = float(t_back), float(1.0 / z_back[0]), float(z_back[1])
        ts.append(t)
        xs.append(x)
        ss.append(s)
    else:
        record = BlowupRecord(abs(x) > FAILURE_DIVERGENCE, None, x, "threshold-crossing", s)

    t_arr = np.asarray(ts)
    traj = Trajectory(
        t=t_arr,
        s=np.asarray(ss),
        x=np.asarray(xs),
        shear_sq=np.array([shear(v) for v in ts]),
        f=np.array([profile.f(v) for v in ts]),
        f_prime=np.array([profile.df(v) for v in ts]),
        n=n,
    )
    return traj, record


def integrate_in_s(y0: float, profile: FProfile, ric_along, n: int, N, s_max: float, *,
                   shear_sq=None, rtol: float = DEFAULT_RTOL):
    """Integrate y = exp(2f/(n-1)) x in the parameter s, carrying t(s).

    dy/ds = -exp(4f/(n-1)) ((Ric + |sigma|^2)/(n-1) + c_N f'^2) - y^2,
    dt/ds = exp(2f/(n-1)).  Returns the scipy solution with dense output;
    states are (y, t) and the starting time is t = 0.
    """
    N = SyntheticDimension.coerce(N).validate(n)
    ric = _as_fn(ric_along)
    shear = _as_fn(shear_sq)
    cN = _coefficient(n, N)
    k = 1.0 / (n - 1)

    def rhs(s, z):
        y, t = z
        fp = profile.df(t)
        e2 = math.exp(2.0 * profile.f(t) * k)
        dy = -e2 * e2 * ((ric(t) + shear(t)) * k + cN * fp * fp) - y * y
        return [dy, e2]

    return solve_ivp(rhs, (0.0, s_max), [y0, 0.0], method="DOP853", rtol=rtol,
                     atol=rtol * 1e-2, dense_output=True)
