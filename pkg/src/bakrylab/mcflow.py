"""Scalar (lambda, f)-mean-curvature-flow evolution on a periodic 1-D slice, and rigidity checks.

The speed ``phi = H_f - lambda`` obeys

    d phi / dr = phi_yy - f_y phi_y + c phi

with geometric inputs (shear, Ric^N_f, f') frozen and ``c`` recomputed from
``H_f = phi + lambda`` at every step.  Stepping is explicit Euler with
second-order centered stencils.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    SpacetimeModel,
    SyntheticDimension,
    cauchy_schwarz_gap,
    ric_mixed,
    ric_time_time,
    slice_mean_curvatures,
)

__all__ = [
    "PeriodicGrid",
    "FlowInputs",
    "FlowState",
    "FlowTrajectory",
    "StabilityError",
    "coeff_c",
    "coeff_c_forms",
    "flow_rhs",
    "evolve",
    "LambdaCase",
    "RigidityReport",
    "rigidity_decomposition",
    "rigidity_from_model",
]

RIGIDITY_TOL = 1e-10


class StabilityError(ValueError):
    """Time step violates the explicit scheme's stability or monotonicity conditions."""


@dataclass(frozen=True)
class PeriodicGrid:
    m: int
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("periodic grid needs at least 3 nodes")

    @property
    def dy(self) -> float:
        return self.length / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m) * self.dy

    def d1(self, u: np.ndarray) -> np.ndarray:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * self.dy)

    def d2(self, u: np.ndarray) -> np.ndarray:
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / self.dy**2


def _per_point(value, m: int) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (m,)).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FlowInputs:
    """Geometric coefficients on the grid, frozen during the evolution."""

    n: int
    N: SyntheticDimension
    lam: float
    shear_sq: np.ndarray
    ric_Nf: np.ndarray
    f_prime: np.ndarray

    @classmethod
    def build(cls, grid: PeriodicGrid, n: int, N, lam: float = 0.0, shear_sq=0.0, ric_Nf=0.0, f_prime=0.0):
        N = SyntheticDimension.coerce(N).validate(n)
        shear = _per_point(shear_sq, grid.m)
        if np.any(shear < 0):
            raise ValueError("shear_sq must be nonnegative")
        return cls(n, N, float(lam), shear, _per_point(ric_Nf, grid.m), _per_point(f_prime, grid.m))


def coeff_c_forms(H_f, f_prime, shear_sq, ric_Nf, n: int, N) -> tuple:
    """The three algebraically equivalent expressions for the zeroth-order coefficient.

    1. ``-|sigma|^2 - H^2/(n-1) - Ric_f``, with ``H = H_f + f'`` and ``Ric_f = Ric^N_f + f'^2/(N-n)``;
    2. ``-|sigma|^2 - (H_f + f')^2/(n-1) - Ric^N_f + f'^2/(n-N)``;
    3. ``-|sigma|^2 - (H_f^2 + 2 f' H_f)/(n-1) - Ric^N_f - (1-N) f'^2/((n-1)(n-N))``.
    """
    N = SyntheticDimension.coerce(N)
    H_f, fp, sh, ric = (np.asarray(v, dtype=float) for v in (H_f, f_prime, shear_sq, ric_Nf))
    k = 1.0 / (n - 1)
    gap = N.inv_gap(n)  # 1/(N-n), exactly 0 when N is infinite
    H = H_f + fp
    c1 = -sh - H * H * k - (ric + fp * fp * gap)
    c2 = -sh - (H_f + fp) ** 2 * k - ric - fp * fp * gap
    c3 = -sh - (H_f * H_f + 2.0 * fp * H_f) * k - ric - N.raychaudhuri_coefficient(n) * fp * fp
    return c1, c2, c3


def coeff_c(H_f, f_prime, shear_sq, ric_Nf, n: int, N) -> np.ndarray:
    """Zeroth-order coefficient in the N-weighted form (third of :func:`coeff_c_forms`)."""
    return coeff_c_forms(H_f, f_prime, shear_sq, ric_Nf, n, N)[2]


@dataclass(frozen=True)
class FlowState:
    grid: PeriodicGrid
    phi: np.ndarray
    f_slice: np.ndarray
    coeff_c: np.ndarray
    r: float = 0.0

    @classmethod
    def initial(cls, grid: PeriodicGrid, phi, f_slice, inputs: FlowInputs) -> "FlowState":
        phi = _per_point(phi, grid.m)
        c = coeff_c(phi + inputs.lam, inputs.f_prime, inputs.shear_sq, inputs.ric_Nf, inputs.n, inputs.N)
        return cls(grid, phi, _per_point(f_slice, grid.m), c, 0.0)


def flow_rhs(state: FlowState, shear_sq, ric_Nf, f_prime, n: int, N, H_f) -> np.ndarray:
    """phi_yy - f_y phi_y + c phi, with c evaluated from ``H_f``."""
    g = state.grid
    c = coeff_c(H_f, f_prime, shear_sq, ric_Nf, n, N)
    phi = state.phi
    return g.d2(phi) - g.d1(state.f_slice) * g.d1(phi) + c * phi


@dataclass(frozen=True)
class FlowTrajectory:
    grid: PeriodicGrid
    r: np.ndarray
    phi: np.ndarray          # (steps + 1, m)
    u: np.ndarray | None     # gauged variable exp(-a r) phi
    gauge_a: float | None
    coeff_c_max: np.ndarray  # per-step max of c
    monotone: bool           # center weight stayed nonnegative at every step

    @property
    def final(self) -> np.ndarray:
        return self.phi[-1]

    def zero_set_sizes(self, tol: float = 0.0) -> np.ndarray:
        return np.sum(np.abs(self.phi) <= tol, axis=1)

    def gauge_residual(self) -> float:
        if self.u is None:
            return math.nan
        recon = np.exp(self.gauge_a * self.r)[:, None] * self.u
        return float(np.max(np.abs(recon - self.phi)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r"] + [f"node_{i}" for i in range(self.grid.m)])
            for r, row in zip(self.r, self.phi):
                w.writerow([format(float(r), ".17g")] + [format(float(v), ".17g") for v in row])


def _check_stability(grid: PeriodicGrid, dr: float, f_slice: np.ndarray, c: np.ndarray) -> None:
    dy = grid.dy
    if not dr > 0:
        raise StabilityError("dr must be positive")
    if dr > 0.5 * dy * dy:
        raise StabilityError(f"dr = {dr:g} exceeds the explicit limit dy^2/2 = {0.5 * dy * dy:g}")
    drift = float(np.max(np.abs(grid.d1(f_slice)))) * dy / 2.0
    if drift > 1.0:
        raise StabilityError(f"drift |f_y| dy/2 = {drift:g} > 1: neighbour weights turn negative")
    center = 1.0 - 2.0 * dr / dy**2 + dr * float(np.min(c))
    if center < 0:
        raise StabilityError(f"center weight {center:g} < 0: reduce dr")


def evolve(state: FlowState, inputs: FlowInputs, r_max: float, dr: float, *, gauge: bool = True) -> FlowTrajectory:
    """Explicit Euler evolution of phi up to ``r_max``.

    Rejects steps that break ``dr <= dy^2/2`` or the monotonicity of the
    stencil.  With ``gauge`` the variable ``u = exp(-a r) phi`` is carried
    alongside, ``a = max c + 1`` fixed from the initial data.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    g = state.grid
    _check_stability(g, dr, state.f_slice, state.coeff_c)
    steps = int(math.ceil(r_max / dr - 1e-12))
    fy = g.d1(state.f_slice)
    n, N, lam = inputs.n, inputs.N, inputs.lam

    phi = state.phi.copy()
    a = float(np.max(state.coeff_c)) + 1.0 if gauge else None
    u = math.exp(-a * state.r) * phi if gauge else None
    decay = math.exp(-a * dr) if gauge else None
    rs = [state.r]
    phis = [phi.copy()]
    us = [u.copy()] if gauge else None
    cmax = []
    monotone = True
    r = state.r
    for k in range(steps):
        c = coeff_c(phi + lam, inputs.f_prime, inputs.shear_sq, inputs.ric_Nf, n, N)
        cmax.append(float(np.max(c)))
        if 1.0 - 2.0 * dr / g.dy**2 + dr * float(np.min(c)) < 0:
            monotone = False
        L = g.d2(phi) - fy * g.d1(phi) + c * phi
        phi = phi + dr * L
        if gauge:
            Lu = g.d2(u) - fy * g.d1(u) + c * u
            u = decay * (u + dr * Lu)
        r = state.r + (k + 1) * dr
        rs.append(r)
        phis.append(phi.copy())
        if gauge:
            us.append(u.copy())
    c = coeff_c(phi + lam, inputs.f_prime, inputs.shear_sq, inputs.ric_Nf, n, N)
    cmax.append(float(np.max(c)))
    return FlowTrajectory(g, np.asarray(rs), np.asarray(phis), None if not gauge else np.asarray(us),
                          a, np.asarray(cmax), monotone)


# ---------------------------------------------------------------------------
# rigidity
# ---------------------------------------------------------------------------

class LambdaCase(enum.Enum):
    ZERO = "zero"
    MINUS_N_MINUS_1 = "minus_n_minus_1"  # lambda = -(n-1)
    MINUS_BIG_N_MINUS_1 = "minus_N_minus_1"  # lambda = -(N-1), N > n


@dataclass(frozen=True)
class RigidityReport:
    lambda_case: LambdaCase
    in_equality_branch: bool
    terms: dict
    rigid: bool
    splitting: str
    tolerance: float
    extra_conditions: dict = field(default_factory=dict)

    @property
    def max_term(self) -> float:
        vals = list(self.terms.values()) + list(self.extra_conditions.values())
        return max(abs(v) for v in vals) if vals else 0.0

    def to_dict(self) -> dict:
        return {
            "lambda_case": self.lambda_case.value,
            "in_equality_branch": self.in_equality_branch,
            "terms": dict(self.terms),
            "extra_conditions": dict(self.extra_conditions),
            "rigid": self.rigid,
            "splitting": self.splitting,
            "tolerance": self.tolerance,
            "max_term": self.max_term,
        }


def rigidity_decomposition(H_f: float, f_prime: float, shear_sq: float, ric_Nf: float, n: int, N,
                           lambda_case: LambdaCase | str, *, tolerance: float = RIGIDITY_TOL,
                           H: float | None = None) -> RigidityReport:
    """Split the equality branch of the focusing inequality into terms that must each vanish.

    ``H`` defaults to ``H_f + f'``.  The ``H_f`` residual against the
    threshold is always reported; a nonzero residual marks the data as
    outside the equality branch.
    """
    case = LambdaCase(lambda_case)
    N = SyntheticDimension.coerce(N).validate(n)
    H = H_f + f_prime if H is None else H
    fp, sh, ric = float(f_prime), float(shear_sq), float(ric_Nf)
    terms: dict[str, float] = {}
    extra: dict[str, float] = {}

    if case is LambdaCase.ZERO:
        terms["H_f"] = H_f
        terms["ric_Nf"] = ric
        terms["shear_sq"] = sh
        if N.exceeds(n):
            terms["H^2/(n-1)"] = H * H / (n - 1)
            terms["f'^2/(N-n)"] = fp * fp * N.inv_gap(n)
        elif N.is_infinite or N.value != 1.0:
            terms["(1-N) f'^2/((n-1)(n-N))"] = N.raychaudhuri_coefficient(n) * fp * fp
        if N.is_infinite or N.value != 1.0:
            splitting = "product -dt^2 + h, f constant"
        else:
            splitting = "twisted product -dt^2 + exp(2f/(n-1)) h_hat (N = 1; warped when f separates)"
        residual = H_f
    elif case is LambdaCase.MINUS_N_MINUS_1:
        if not (N.at_most_one_or_infinite() or N.exceeds(n)):
            raise ValueError("inadmissible N")
        terms["H_f + (n-1)"] = H_f + (n - 1)
        terms["delta^2 = ric_Nf + (n-1)"] = ric + (n - 1)
        terms["shear_sq"] = sh
        terms["2 f'"] = 2.0 * fp
        terms["(1-N) f'^2/((n-1)(n-N))"] = N.raychaudhuri_coefficient(n) * fp * fp
        extra["H + (n-1)"] = H + (n - 1)
        splitting = "warped product -dt^2 + exp(-2t) h, f constant"
        residual = H_f + (n - 1)
    else:
        if not N.exceeds(n):
            raise ValueError("lambda = -(N-1) case needs N > n")
        Nv = N.value
        terms["H_f + (N-1)"] = H_f + (Nv - 1)
        terms["ric_Nf + (N-1)"] = ric + (Nv - 1)
        terms["shear_sq"] = sh
        terms["cauchy_schwarz_gap"] = float(cauchy_schwarz_gap(H, fp, n, Nv))
        extra["f' - (N-n)"] = fp - (Nv - n)
        extra["H + (n-1)"] = H + (n - 1)
        splitting = "warped product -dt^2 + exp(-2t) h, f = (N-n) t + f_S"
        residual = H_f + (Nv - 1)

    in_branch = abs(residual) <= tolerance
    rigid = all(abs(v) <= tolerance for v in terms.values()) and all(abs(v) <= tolerance for v in extra.values())
    return RigidityReport(case, in_branch, terms, rigid, splitting if rigid else "none", tolerance, extra)


def rigidity_from_model(model: SpacetimeModel, N, lambda_case: LambdaCase | str, t: float, y: float = 0.0, *,
                        tolerance: float = RIGIDITY_TOL, h: float = 1e-3) -> RigidityReport:
    """Rigidity decomposition on the slice through (t, y) of a warped or twisted product.

    Slices of these products are umbilic, so the shear vanishes.  In the
    N = 1, lambda = 0 branch the mixed curvature slot is added as an extra
    condition (it must vanish for the twisted product to be warped).
    """
    N = SyntheticDimension.coerce(N).validate(model.n)
    H, H_f = (float(v) for v in slice_mean_curvatures(model, t, y))
    fp = float(model.weight.f_t(t, y))
    ric = float(ric_time_time(model, N, t, y))
    rep = rigidity_decomposition(H_f, fp, 0.0, ric, model.n, N, lambda_case, tolerance=tolerance, H=H)
    if rep.lambda_case is LambdaCase.ZERO and not N.is_infinite and N.value == 1.0 and not model.closed_form:
        extra = dict(rep.extra_conditions)
        extra["ric_1f(d_t, d_y)"] = float(ric_mixed(model, N, t, y, h))
        rigid = rep.rigid and abs(extra["ric_1f(d_t, d_y)"]) <= tolerance
        rep = replace(rep, extra_conditions=extra, rigid=rigid, splitting=rep.splitting if rigid else "none")
    return rep
