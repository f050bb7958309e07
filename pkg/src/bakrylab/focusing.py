"""Closed-form focusing-time bounds and hypothesis checkers for the crunch theorems.

Bounds carry an explicit parameterization flag: the de Sitter type bounds
obtained in the reparametrized variable ``s`` live on a different clock than
the proper-time bounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .congruence import (
    BlowupRecord,
    CongruenceState,
    FCompleteness,
    FProfile,
    integrate,
    is_future_f_complete,
    s_infinity,
    s_of_t,
)
from .expr import as_expr, exp
from .geometry import (
    DomainError,
    SpacetimeModel,
    SyntheticDimension,
    TcdGrid,
    check_tcd,
    ric_time_time,
    slice_mean_curvatures,
)

__all__ = [
    "Inapplicable",
    "FocusingRegime",
    "Parameterization",
    "FocusingHypotheses",
    "FocusingVerdict",
    "Check",
    "tp_nonneg",
    "tp_finite_N",
    "tp_desitter_conformal",
    "tp_desitter_finite_N",
    "tp_desitter_N",
    "corollary_bounds",
    "SingularityTheorem",
    "TheoremReport",
    "theorem_checker",
]

BOUND_SLACK = 1e-6
ROOT_TOL = 1e-10


class Inapplicable(ValueError):
    """A focusing bound does not apply; the message names the failed hypothesis."""


class FocusingRegime(enum.Enum):
    NONNEG_TCD = "nonneg"                  # lambda = 0
    DESITTER_CONFORMAL = "desitter-conformal"  # lambda = -(n-1) exp(-4f/(n-1))
    DESITTER_CONSTANT = "desitter-constant"    # lambda = -(n-1)
    DESITTER_N = "desitter-N"                  # lambda = -(N-1)


class Parameterization(enum.Enum):
    PROPER_TIME = "proper-time"
    S_PARAMETER = "s-parameter"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margin": self.margin, "note": self.note}


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def _require_delta(delta: float) -> None:
    if not delta > 0 or not math.isfinite(delta):
        raise ValueError(f"delta must be positive and finite, got {delta}")


def tp_nonneg(profile: FProfile, n: int, delta: float, *, horizon: float = 1e4) -> float:
    """Proper time t_p with s(t_p) = exp(-2 f(0)/(n-1)) / delta.

    Brackets monotonically, then polishes with Newton steps using
    ds/dt = exp(-2f/(n-1)), falling back to bisection when a step leaves
    the bracket.  Raises :class:`Inapplicable` when s saturates below the
    target (certified by a tail bound) or does not reach it by ``horizon``.
    """
    _require_delta(delta)
    target = math.exp(-2.0 * profile.f(0.0) / (n - 1)) / delta
    sinf = s_infinity(profile, n)
    if sinf is not None and sinf.upper < target:
        raise Inapplicable(
            f"s(inf) <= {sinf.upper:.12g} < required {target:.12g}: geodesic is not future f-complete"
        )
    lo, s_lo = 0.0, 0.0
    hi = min(max(1.0, 1.0 / delta), horizon)
    s_hi = s_of_t(profile, n, hi)
    while s_hi < target:
        if hi >= horizon:
            raise Inapplicable(f"s({horizon:g}) = {s_hi:.12g} does not reach the required {target:.12g}")
        lo, s_lo = hi, s_hi
        hi = min(2.0 * hi, horizon)
        s_hi = s_lo + s_of_t(profile, n, hi, lo)
    t, s_t = lo, s_lo
    for _ in range(200):
        if hi - lo <= ROOT_TOL:
            break
        step = (target - s_t) / profile.density(t, n)
        cand = t + step
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        s_c = s_t + s_of_t(profile, n, cand, t) if cand >= t else s_t - s_of_t(profile, n, t, cand)
        if s_c < target:
            lo = cand
        else:
            hi = cand
        if abs(cand - t) <= ROOT_TOL:
            t, s_t = cand, s_c
            break
        t, s_t = cand, s_c
    return float(t)


def tp_finite_N(n: int, N_value: float, delta: float) -> float:
    """(N-1)/delta, the focusing bound for N > n without control of f.

    With delta measured on x = H_f/(n-1) this is conservative by a factor
    n-1 relative to the bound on H_f itself.
    """
    _require_delta(delta)
    if not N_value > n:
        raise ValueError(f"N = {N_value} must exceed n = {n}")
    return (N_value - 1.0) / delta


def tp_desitter_conformal(delta: float) -> float:
    """arctanh(1/(1+delta)), in the s-parameter."""
    _require_delta(delta)
    return math.atanh(1.0 / (1.0 + delta))


def tp_desitter_finite_N(n: int, N_value: float, delta: float) -> float:
    """arctanh((N-1)/((n-1)(1+delta))) in proper time, for N > n.

    The arctanh argument reaches 1 once N - 1 >= (n-1)(1+delta); the bound
    is then undefined and :class:`Inapplicable` is raised.
    """
    _require_delta(delta)
    if not N_value > n:
        raise ValueError(f"N = {N_value} must exceed n = {n}")
    arg = (N_value - 1.0) / ((n - 1) * (1.0 + delta))
    if arg >= 1.0:
        raise Inapplicable(
            f"arctanh argument (N-1)/((n-1)(1+delta)) = {arg:.6g} >= 1; no finite focusing time follows"
        )
    return math.atanh(arg)


def tp_desitter_N(delta: float) -> float:
    """arctanh(1/(1+delta)) in proper time, for TCD(-(N-1), N) with H_f(0) <= -(1+delta)(N-1)."""
    _require_delta(delta)
    return math.atanh(1.0 / (1.0 + delta))


# ---------------------------------------------------------------------------
# hypotheses and verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FocusingHypotheses:
    regime: FocusingRegime
    n: int
    N: SyntheticDimension
    delta: float
    f0: float = 0.0
    k: float | None = None
    B: float | None = None
    grad_f_future_causal: bool = False
    x0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "N", SyntheticDimension.coerce(self.N).validate(self.n))
        _require_delta(self.delta)


@dataclass(frozen=True)
class FocusingVerdict:
    applicable: bool
    reason: str
    t_p_predicted: float | None
    parameterization: Parameterization
    threshold: float | None = None
    proper_time_bound: float | None = None
    observed_blowup: BlowupRecord | None = None
    bound_respected: bool | None = None
    checks: tuple[Check, ...] = ()

    def __post_init__(self):
        if self.applicable and not (self.t_p_predicted is not None and 0 < self.t_p_predicted < math.inf):
            raise ValueError("an applicable verdict needs a positive finite t_p")

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "t_p_predicted": self.t_p_predicted,
            "parameterization": self.parameterization.value,
            "threshold": self.threshold,
            "proper_time_bound": self.proper_time_bound,
            "observed_blowup": None if self.observed_blowup is None else self.observed_blowup.to_dict(),
            "bound_respected": self.bound_respected,
            "checks": [c.to_dict() for c in self.checks],
        }


def _verdict_from_threshold(hyp: FocusingHypotheses, threshold: float, t_p, param, reason, ptb, extra=()):
    checks = list(extra)
    if hyp.x0 is not None:
        ok = hyp.x0 <= threshold
        checks.append(Check("initial x(0) <= threshold", ok, threshold - hyp.x0))
        if not ok:
            return FocusingVerdict(False, f"x(0) = {hyp.x0:.12g} exceeds threshold {threshold:.12g}",
                                   None, param, threshold, None, checks=tuple(checks))
    return FocusingVerdict(True, reason, t_p, param, threshold, ptb, checks=tuple(checks))


def corollary_bounds(hyp: FocusingHypotheses) -> FocusingVerdict:
    """Focusing bound from closed-form data only (no profile).

    * ``NONNEG_TCD``: with ``k`` (f <= k) and N <= 1 or inf, s(t) >= exp(-2k/(n-1)) t
      gives t_p <= exp(2(k - f0)/(n-1))/delta; for N > n, (N-1)/delta.
    * ``DESITTER_CONFORMAL``: threshold -(1+delta) exp(-2 f0/(n-1)), bound in s.
    * ``DESITTER_CONSTANT``: for N <= 1 or inf, shift f by k and use the conformal
      bound (threshold -(1+delta) exp(2(k - f0)/(n-1))), or the future-causal
      route with threshold -(1+delta); for N > n, the finite-N de Sitter bound.
    * ``DESITTER_N`` (N > n): threshold -(1+delta)(N-1)/(n-1), proper time.
    """
    n, N, d = hyp.n, hyp.N, hyp.delta
    low_N = N.at_most_one_or_infinite()
    R = hyp.regime
    PT, SP = Parameterization.PROPER_TIME, Parameterization.S_PARAMETER

    if R is FocusingRegime.NONNEG_TCD:
        if N.exceeds(n):
            return _verdict_from_threshold(hyp, -d, tp_finite_N(n, N.value, d), PT,
                                           "N > n: no control of f needed", tp_finite_N(n, N.value, d))
        if hyp.k is None:
            return FocusingVerdict(False, "needs an upper bound k of f (or a profile for the s-integral)",
                                   None, PT, -d)
        if hyp.k < hyp.f0:
            return FocusingVerdict(False, f"f0 = {hyp.f0} exceeds the upper bound k = {hyp.k}", None, PT, -d)
        tp = math.exp(2.0 * (hyp.k - hyp.f0) / (n - 1)) / d
        return _verdict_from_threshold(hyp, -d, tp, PT, "f <= k makes s grow at least linearly", tp)

    if R is FocusingRegime.DESITTER_CONFORMAL:
        if not low_N:
            return FocusingVerdict(False, "conformal de Sitter bound needs N <= 1 or N = inf", None, SP)
        thr = -(1.0 + d) * math.exp(-2.0 * hyp.f0 / (n - 1))
        return _verdict_from_threshold(hyp, thr, tp_desitter_conformal(d), SP,
                                       "comparison with y' = 1 - y^2 in s", None)

    if R is FocusingRegime.DESITTER_CONSTANT:
        if N.exceeds(n):
            try:
                tp = tp_desitter_finite_N(n, N.value, d)
            except Inapplicable as exc:
                return FocusingVerdict(False, str(exc), None, PT, -(1.0 + d))
            return _verdict_from_threshold(hyp, -(1.0 + d), tp, PT, "N > n de Sitter comparison", tp)
        tp = tp_desitter_conformal(d)
        if hyp.grad_f_future_causal:
            # f is nonincreasing, so k := f0 bounds it and the shift is exact
            return _verdict_from_threshold(hyp, -(1.0 + d), tp, SP,
                                           "future-causal gradient: f <= f(0) along the geodesic", tp,
                                           (Check("grad f future-causal", True),))
        if hyp.k is None:
            return FocusingVerdict(False, "needs f <= k or a future-causal gradient of f", None, SP)
        thr = -(1.0 + d) * math.exp(2.0 * (hyp.k - hyp.f0) / (n - 1))
        if hyp.k < hyp.f0:
            return FocusingVerdict(False, f"f0 = {hyp.f0} exceeds the upper bound k = {hyp.k}",
                                   None, SP, thr)
        # s-bar(t) = int exp(-2(f-k)/(n-1)) >= t, so the s-bar bound is also a proper-time bound
        return _verdict_from_threshold(hyp, thr, tp, SP, "weight shifted by k", tp,
                                       (Check("f <= k", True, hyp.k - hyp.f0),))

    if R is FocusingRegime.DESITTER_N:
        if not N.exceeds(n):
            return FocusingVerdict(False, "lambda = -(N-1) regime needs N > n", None, PT)
        thr = -(1.0 + d) * (N.value - 1.0) / (n - 1)
        tp = tp_desitter_N(d)
        return _verdict_from_threshold(hyp, thr, tp, PT, "comparison with z' = 1 - z^2, z = H_f/(N-1)", tp)

    raise AssertionError(R)


# ---------------------------------------------------------------------------
# theorem checker
# ---------------------------------------------------------------------------

class SingularityTheorem(enum.Enum):
    NONNEG = "T1_4"               # TCD(0, N), H_f < 0
    DESITTER_FINITE_N = "T1_6a"   # N > n, TCD(-(n-1), N), H_f < -(n-1)
    DESITTER_CONFORMAL = "T1_6b"  # N <= 1 or inf, TCD(-(n-1) e^{-4f/(n-1)}, N)
    DESITTER_BOUNDED_F = "T1_7"   # N <= 1 or inf, TCD(-(n-1), N), f <= k or causal grad f


@dataclass(frozen=True)
class PointResult:
    y: float
    H_f: float
    x0: float
    f0: float
    delta: float | None
    verdict: FocusingVerdict

    def to_dict(self) -> dict:
        return {"y": self.y, "H_f": self.H_f, "x0": self.x0, "f0": self.f0, "delta": self.delta,
                "verdict": self.verdict.to_dict()}


@dataclass(frozen=True)
class TheoremReport:
    theorem: SingularityTheorem
    N: SyntheticDimension
    global_checks: tuple[Check, ...]
    points: tuple[PointResult, ...]
    aggregate: FocusingVerdict
    uniform_delta: float | None
    assumptions: tuple[str, ...] = (
        "initial slice compact in the configured coordinate box (declared, not verified)",
    )

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "N": self.N.label(),
            "global_checks": [c.to_dict() for c in self.global_checks],
            "points": [p.to_dict() for p in self.points],
            "aggregate": self.aggregate.to_dict(),
            "uniform_delta": self.uniform_delta,
            "assumptions": list(self.assumptions),
        }


def _inapplicable(reason, param=Parameterization.PROPER_TIME, checks=()):
    return FocusingVerdict(False, reason, None, param, checks=tuple(checks))


def _observe(model, N, surface_t, y, profile, x0, verdict):
    """Integrate the congruence and compare the blow-up to the predicted bound."""
    n = model.n
    t_p, param = verdict.t_p_predicted, verdict.parameterization
    if verdict.proper_time_bound is not None:
        t_p, param = verdict.proper_time_bound, Parameterization.PROPER_TIME
    # an s-parameter bound is converted to proper time by inverting s(t)
    t_limit = t_p if param is Parameterization.PROPER_TIME else _invert_s(profile, n, t_p)
    if t_limit is None:
        return None, False
    last = [float(ric_time_time(model, N, surface_t, y))]

    def ric(t):
        # RK stages may probe just past a model's own crunch (a -> 0); hold the last value there
        try:
            last[0] = float(ric_time_time(model, N, surface_t + t, y))
        except DomainError:
            pass
        return last[0]

    traj, rec = integrate(CongruenceState(0.0, 0.0, x0), profile, ric, n, N, 1.25 * t_limit + 0.5)
    if not rec.detected:
        return rec, False
    observed = rec.t_blowup if param is Parameterization.PROPER_TIME else rec.s_blowup
    return rec, bool(observed <= t_p + BOUND_SLACK)


def _invert_s(profile: FProfile, n: int, s_target: float, horizon: float = 1e4):
    try:
        return tp_nonneg(profile.shifted(0.0), n, math.exp(-2.0 * profile.f(0.0) / (n - 1)) / s_target,
                         horizon=horizon)
    except Inapplicable:
        return None


def theorem_checker(model: SpacetimeModel, theorem: SingularityTheorem | str, surface_t: float,
                    y_points: Sequence[float], N, *, tcd_window: float = 3.0, tcd_points: int = 61,
                    k: float | None = None, horizon: float = 100.0,
                    tolerance: float = 1e-9, observe: bool = True) -> TheoremReport:
    """Check a crunch theorem's hypotheses on sampled base points and test its focusing bound.

    TCD is sampled on ``[surface_t, surface_t + tcd_window] x y_points``.  Per
    base point the strict mean-curvature inequality is checked, the lemma's
    t_p is computed, and (if ``observe``) the congruence is integrated to
    compare the observed blow-up with t_p.  The aggregate uses the uniform
    delta := min over points.
    """
    theorem = SingularityTheorem(theorem)
    n = model.n
    N = SyntheticDimension.coerce(N).validate(n)
    grid = TcdGrid.linspace(surface_t, surface_t + tcd_window, tcd_points, y_values=tuple(y_points))
    checks: list[Check] = []
    param = Parameterization.PROPER_TIME
    w = model.weight

    f_surface = np.array([w.expr(surface_t, y) for y in y_points])
    B = float(np.min(f_surface))

    if theorem is SingularityTheorem.NONNEG:
        lam = 0.0
    elif theorem is SingularityTheorem.DESITTER_CONFORMAL:
        lam = as_expr(-(n - 1.0)) * exp(as_expr(-4.0 / (n - 1)) * w.expr)
        param = Parameterization.S_PARAMETER
    else:
        lam = -(n - 1.0)

    if theorem is SingularityTheorem.DESITTER_FINITE_N and not N.exceeds(n):
        checks.append(Check("N > n", False))
    if theorem in (SingularityTheorem.DESITTER_CONFORMAL, SingularityTheorem.DESITTER_BOUNDED_F) \
            and not N.at_most_one_or_infinite():
        checks.append(Check("N <= 1 or N = inf", False))
    if checks:
        agg = _inapplicable(checks[0].name + " fails", param, checks)
        return TheoremReport(theorem, N, tuple(checks), (), agg, None)

    tcd = check_tcd(model, N, lam, grid, tolerance=tolerance)
    checks.append(Check(f"TCD({tcd.lam}, {N.label()})", tcd.satisfied, tcd.worst_margin, tcd.certificate))

    causal_route = False
    if theorem is SingularityTheorem.DESITTER_BOUNDED_F:
        # future-causal grad f: f_t <= 0 and -f_t^2 + |D f|^2 <= 0 on the sampled future
        tt = np.asarray(grid.t_values)
        causal = True
        for y in y_points:
            a = model.warp(tt, y)
            ft = w.f_t(tt, y)
            fy = w.f_y(tt, y)
            if np.any(ft > tolerance) or np.any(-ft * ft + (fy / a) ** 2 > tolerance):
                causal = False
        if k is None and not causal:
            k = float(max(np.max(w.expr(np.asarray(grid.t_values), y)) for y in y_points))
            checks.append(Check("f <= k (sampled)", True, k, "k taken as the sampled maximum; not a proof"))
        elif k is not None:
            checks.append(Check("f <= k (declared)", True, k))
        causal_route = causal and k is None
        checks.append(Check("grad f future-causal (sampled)", causal))

    points: list[PointResult] = []
    deltas: list[float] = []
    first_failure = None if tcd.satisfied else checks[-1 if theorem is not SingularityTheorem.DESITTER_BOUNDED_F else 0].name

    for y in y_points:
        H, H_f = (float(v) for v in slice_mean_curvatures(model, surface_t, y))
        x0 = H_f / (n - 1)
        f0 = float(w.expr(surface_t, y))
        profile = FProfile.from_model(model, y, surface_t)
        pchecks: list[Check] = []
        delta = None
        verdict = None

        if theorem is SingularityTheorem.NONNEG:
            ok = H_f < 0
            pchecks.append(Check("H_f < 0", ok, -H_f))
            if ok:
                delta = -x0
                if N.exceeds(n):
                    tp = tp_finite_N(n, N.value, delta)
                    verdict = FocusingVerdict(True, "N > n bound", tp, param, -delta, tp)
                else:
                    target = math.exp(-2.0 * f0 / (n - 1)) / delta
                    comp = is_future_f_complete(profile, n, horizon, target)
                    pchecks.append(Check("future f-complete", comp is FCompleteness.COMPLETE_UP_TO_HORIZON,
                                         None, comp.value))
                    if comp is FCompleteness.COMPLETE_UP_TO_HORIZON:
                        tp = tp_nonneg(profile, n, delta, horizon=horizon)
                        verdict = FocusingVerdict(True, "s reaches the target", tp, param, -delta, tp)
                    else:
                        verdict = _inapplicable(f"future f-completeness: {comp.value}", param)
        elif theorem is SingularityTheorem.DESITTER_FINITE_N:
            ok = H_f < -(n - 1)
            pchecks.append(Check("H_f < -(n-1)", ok, -(n - 1) - H_f))
            if ok:
                delta = -x0 - 1.0
                verdict = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONSTANT, n, N, delta,
                                                              f0=f0, x0=x0))
        elif theorem is SingularityTheorem.DESITTER_CONFORMAL:
            bound = -(n - 1) * math.exp(-2.0 * B / (n - 1))
            ok = H_f < bound
            pchecks.append(Check("H_f < -(n-1) exp(-2B/(n-1))", ok, bound - H_f))
            if ok:
                delta = -x0 * math.exp(2.0 * f0 / (n - 1)) - 1.0
                verdict = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONFORMAL, n, N, delta,
                                                              f0=f0, x0=x0))
                reach = s_of_t(profile, n, horizon)
                okc = reach >= verdict.t_p_predicted
                pchecks.append(Check("s reaches t_p within the horizon", okc, reach - verdict.t_p_predicted))
                if not okc:
                    verdict = _inapplicable("s does not reach the focusing parameter", param)
        else:  # DESITTER_BOUNDED_F
            if causal_route:
                ok = H_f < -(n - 1)
                pchecks.append(Check("H_f < -(n-1)", ok, -(n - 1) - H_f))
                if ok:
                    delta = -x0 - 1.0
            else:
                bound = -(n - 1) * math.exp(2.0 * (k - B) / (n - 1))
                ok = H_f < bound
                pchecks.append(Check("H_f < -(n-1) exp(2(k-B)/(n-1))", ok, bound - H_f))
                if ok:
                    delta = -x0 * math.exp(-2.0 * (k - f0) / (n - 1)) - 1.0
            if delta is not None:
                verdict = corollary_bounds(FocusingHypotheses(
                    FocusingRegime.DESITTER_CONSTANT, n, N, delta, f0=f0,
                    k=None if causal_route else k, grad_f_future_causal=causal_route, x0=x0))
                param = verdict.parameterization

        if verdict is None:
            verdict = _inapplicable(pchecks[-1].name + " fails", param, pchecks)
        elif not tcd.satisfied:
            verdict = _inapplicable(f"{first_failure} fails", verdict.parameterization,
                                    tuple(pchecks) + verdict.checks)
        else:
            rec, respected = (None, None)
            if verdict.applicable and observe:
                rec, respected = _observe(model, N, surface_t, y, profile, x0, verdict)
            verdict = FocusingVerdict(verdict.applicable, verdict.reason, verdict.t_p_predicted,
                                      verdict.parameterization, verdict.threshold, verdict.proper_time_bound,
                                      rec, respected, tuple(pchecks) + verdict.checks)
        if delta is not None:
            deltas.append(delta)
        points.append(PointResult(float(y), H_f, x0, f0, delta, verdict))

    failed = [p for p in points if not p.verdict.applicable]
    if not tcd.satisfied:
        agg = _inapplicable(f"{first_failure} fails", param, checks)
        uniform = min(deltas) if deltas else None
    elif failed:
        agg = _inapplicable(f"at y = {failed[0].y}: {failed[0].verdict.reason}", param, checks)
        uniform = None
    else:
        uniform = min(deltas)
        tps = [p.verdict.t_p_predicted for p in points if p.delta == uniform]
        # the point with the smallest delta carries the largest (uniform) bound
        tp_uniform = max(tps)
        respected = [p.verdict.bound_respected for p in points]
        agg = FocusingVerdict(True, "all sampled points satisfy the hypotheses", tp_uniform,
                              points[0].verdict.parameterization, None, None, None,
                              None if any(r is None for r in respected) else all(respected), tuple(checks))
    return TheoremReport(theorem, N, tuple(checks), tuple(points), agg, uniform)
