"""Execute a parsed scenario and write its artifacts.

``report.json`` is a pure function of the config and the tool version
(sorted keys, canonical floats); wall-clock time goes to ``timing.json``.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .congruence import CongruenceState, FProfile, integrate, is_future_f_complete, s_infinity
from .expr import Expr
from .focusing import (
    FocusingHypotheses,
    FocusingRegime,
    Inapplicable,
    corollary_bounds,
    theorem_checker,
    tp_nonneg,
)
from .geometry import (
    SyntheticDimension,
    TcdGrid,
    bisect_fiber_curvature,
    check_tcd,
    ric_time_time,
    slice_mean_curvatures,
)
from .mcflow import FlowInputs, FlowState, PeriodicGrid, evolve, rigidity_from_model
from .scenario import ScenarioConfig

__all__ = ["RunReport", "run", "to_json"]

_dir_locks: dict[str, threading.Lock] = {}
_dir_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    key = str(path.resolve())
    with _dir_locks_guard:
        return _dir_locks.setdefault(key, threading.Lock())


def _clean(obj):
    """Make values JSON-safe and deterministic: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, SyntheticDimension):
        return obj.label()
    if isinstance(obj, Expr):
        return str(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


@dataclass
class RunReport:
    scenario: str
    check: str
    config_hash: str
    tool_version: str
    verdicts: list[dict]
    artifacts: list[str] = field(default_factory=list)
    wall_clock: float = 0.0
    output_dir: str = ""

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        """Deterministic content; wall-clock time is deliberately absent."""
        return {
            "scenario": self.scenario,
            "check": self.check,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "passed": self.passed,
            "verdicts": self.verdicts,
            "artifacts": sorted(self.artifacts),
        }


def _verdict(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _expect(flag: str, value: bool) -> bool:
    return flag == "any" or (flag == "yes") == bool(value)


def _fn_t(value, model, N, surface_t, y):
    """Callable of proper time along the geodesic for 'model' or an expression."""
    if isinstance(value, str) and value == "model":
        return lambda t: float(ric_time_time(model, N, surface_t + t, y))
    return lambda t: float(value(surface_t + t, y))


# ---------------------------------------------------------------------------
# per-check handlers: (config, model, params, outdir, tolerance) -> (verdicts, artifacts)
# ---------------------------------------------------------------------------

def _run_tcd(cfg, model, p, out, tol):
    tol = p["tolerance"] if tol is None else tol
    grid = TcdGrid.linspace(p["t_min"], p["t_max"], p["t_points"], y_values=p["y_values"],
                            chi_max=p["chi_max"], chi_points=p["chi_points"], h=p["h"])
    rep = check_tcd(model, p["N"], p["lambda"], grid, tolerance=tol, method=p["method"])
    exp = p["expect"]
    ok = exp == "any" or (exp == "satisfied") == rep.satisfied
    return [_verdict("tcd", ok, expected=exp, report=rep.to_dict())], []


def _run_integrate(cfg, model, p, out, tol):
    n, N, t0, y = model.n, p["N"], p["surface_t"], p["y"]
    profile = FProfile.from_model(model, y, t0)
    traj, rec = integrate(CongruenceState(0.0, 0.0, p["x0"]), profile, _fn_t(p["ric"], model, N, t0, y),
                          n, N, p["t_max"], shear_sq=_fn_t(p["shear_sq"], model, N, t0, y), rtol=p["rtol"])
    traj.to_csv(out / "trajectory.csv")
    ok = _expect(p["expect_blowup"], rec.detected)
    detail: dict[str, Any] = {"blowup": rec.to_dict(), "expect_blowup": p["expect_blowup"]}
    if p["expected_t_blowup"] is not None:
        ref = p["expected_t_blowup"]
        rel = math.inf if rec.t_blowup is None else abs(rec.t_blowup - ref) / abs(ref)
        detail.update(expected_t_blowup=ref, relative_error=rel, rel_tol=p["rel_tol"])
        ok = ok and rel <= p["rel_tol"]
    return [_verdict("integrate", ok, **detail)], ["trajectory.csv"]


_REGIMES = {
    "nonneg": FocusingRegime.NONNEG_TCD,
    "finite-N": FocusingRegime.NONNEG_TCD,
    "desitter-conformal": FocusingRegime.DESITTER_CONFORMAL,
    "desitter-finite-N": FocusingRegime.DESITTER_CONSTANT,
    "desitter-N": FocusingRegime.DESITTER_N,
}


def _run_lemma_bound(cfg, model, p, out, tol):
    n, N, d, t0, y = model.n, p["N"], p["delta"], p["surface_t"], p["y"]
    profile = FProfile.from_model(model, y, t0)
    f0 = profile.f(0.0)
    bound = p["bound"]
    artifacts = []
    if bound == "nonneg" and not N.exceeds(n):
        x0 = -d
        try:
            tp = tp_nonneg(profile, n, d, horizon=p["horizon"])
            info = {"applicable": True, "t_p_predicted": tp, "parameterization": "proper-time",
                    "proper_time_bound": tp, "reason": "s reaches the target"}
        except Inapplicable as exc:
            info = {"applicable": False, "t_p_predicted": None, "parameterization": "proper-time",
                    "proper_time_bound": None, "reason": str(exc)}
    else:
        hyp = FocusingHypotheses(_REGIMES[bound], n, N, d, f0=f0)
        v = corollary_bounds(hyp)
        x0 = v.threshold if v.threshold is not None else -(1.0 + d)
        info = {"applicable": v.applicable, "t_p_predicted": v.t_p_predicted,
                "parameterization": v.parameterization.value, "proper_time_bound": v.proper_time_bound,
                "reason": v.reason}
    info["x0"] = x0
    ok = _expect(p["expect_applicable"], info["applicable"])
    if info["applicable"] and p["observe"]:
        param = info["parameterization"]
        if info["proper_time_bound"] is not None:
            t_lim, param = info["proper_time_bound"], "proper-time"
        else:
            t_lim = None
            try:
                t_lim = tp_nonneg(profile, n, math.exp(-2.0 * f0 / (n - 1)) / info["t_p_predicted"],
                                  horizon=p["horizon"])
            except Inapplicable:
                pass
        if t_lim is not None:
            traj, rec = integrate(CongruenceState(0.0, 0.0, x0), profile, _fn_t("model", model, N, t0, y),
                                  n, N, 1.25 * t_lim + 0.5)
            traj.to_csv(out / "trajectory.csv")
            artifacts.append("trajectory.csv")
            bound_val = t_lim if param == "proper-time" else info["t_p_predicted"]
            observed = rec.t_blowup if param == "proper-time" else rec.s_blowup
            respected = (not rec.detected) or observed <= bound_val + 1e-6
            info.update(observed_blowup=rec.to_dict(), bound_respected=respected)
            ok = ok and respected
    return [_verdict("lemma-bound", ok, bound=bound, expect_applicable=p["expect_applicable"], **info)], artifacts


def _run_theorem(cfg, model, p, out, tol):
    rep = theorem_checker(model, p["theorem"], p["surface_t"], p["y_values"], p["N"],
                          tcd_window=p["tcd_window"], tcd_points=p["tcd_points"], k=p["k"],
                          horizon=p["horizon"], tolerance=1e-9 if tol is None else tol, observe=p["observe"])
    agg = rep.aggregate
    ok = _expect(p["expect_applicable"], agg.applicable)
    if agg.applicable and agg.bound_respected is False:
        ok = False
    return [_verdict("theorem", ok, expect_applicable=p["expect_applicable"], report=rep.to_dict())], []


def _run_mcflow(cfg, model, p, out, tol):
    n, N, t0 = model.n, p["N"], p["surface_t"]
    grid = PeriodicGrid(p["m"], p["length"])
    ys = grid.nodes
    w = model.weight
    f_slice = np.broadcast_to(w.expr(t0, ys), ys.shape)
    fp = w.f_t(t0, ys) if p["f_prime"] == "model" else p["f_prime"](t0, ys)
    if p["ric"] == "model":
        ric = np.array([float(ric_time_time(model, N, t0, y)) for y in ys])
    else:
        ric = p["ric"](t0, ys)
    inputs = FlowInputs.build(grid, n, N, p["lambda"], p["shear_sq"](t0, ys), ric, fp)
    phi0 = np.broadcast_to(np.asarray(p["phi0"](t0, ys), dtype=float), ys.shape)
    state = FlowState.initial(grid, phi0, f_slice, inputs)
    dr = p["dr_fraction"] * grid.dy**2
    traj = evolve(state, inputs, p["steps"] * dr, dr)
    traj.to_csv(out / "flow.csv")
    final = traj.final
    nonpos0 = bool(np.all(phi0 <= 0))
    if not nonpos0:
        outcome = "initial data not <= 0; dichotomy not applicable"
        holds = None
    elif np.all(phi0 == 0):
        holds = bool(np.all(traj.phi == 0))
        outcome = "phi identically zero" if holds else "zero data moved"
    else:
        holds = bool(np.all(final < 0))
        outcome = "strictly negative everywhere" if holds else "some node not strictly negative"
    ok = p["expect"] == "any" or bool(holds)
    detail = {
        "outcome": outcome,
        "max_phi_final": float(np.max(final)),
        "max_phi_over_run": float(np.max(traj.phi)),
        "zero_set_sizes": traj.zero_set_sizes().tolist(),
        "gauge_a": traj.gauge_a,
        "gauge_residual": traj.gauge_residual(),
        "monotone_scheme": traj.monotone,
        "dr": dr,
        "steps": p["steps"],
    }
    return [_verdict("mcflow", ok, expect=p["expect"], **detail)], ["flow.csv"]


def _run_rigidity(cfg, model, p, out, tol):
    rep = rigidity_from_model(model, p["N"], p["lambda_case"], p["t"], p["y"], tolerance=p["tolerance"])
    exp = p["expect"]
    ok = exp == "any" or (exp == "rigid") == rep.rigid
    return [_verdict("rigidity", ok, expect=exp, report=rep.to_dict())], []


def _run_static_exponential_weight(cfg, model, p, out, tol):
    tol = p["tolerance"] if tol is None else tol
    n = model.n
    verdicts = []
    grid = TcdGrid.linspace(p["t_min"], p["t_max"], p["t_points"])
    for N in p["N_values"]:
        rep = check_tcd(model, N, 0.0, grid, tolerance=tol)
        verdicts.append(_verdict(f"tcd(0, {N.label()})", rep.satisfied, report=rep.to_dict()))
    ts = np.asarray(grid.t_values)
    H, H_f = slice_mean_curvatures(model, ts, 0.0)
    err = float(np.max(np.abs(np.asarray(H_f) + np.exp(ts))))
    verdicts.append(_verdict("H_f = -exp(t) on slices", err <= 1e-12 and bool(np.all(np.asarray(H_f) < 0)),
                             max_abs_error=err))
    profile = FProfile.from_model(model, 0.0, 0.0)
    sinf = s_infinity(profile, n)
    verdicts.append(_verdict(
        "s(inf) certified finite", sinf is not None,
        lower=None if sinf is None else sinf.lower, upper=None if sinf is None else sinf.upper,
        cut=None if sinf is None else sinf.cut,
    ))
    comp = is_future_f_complete(profile, n, p["horizon"], 10.0)
    verdicts.append(_verdict("f-completeness incomplete-certified", comp.value == "incomplete-certified",
                             status=comp.value))
    for N in p["N_values"]:
        rep = theorem_checker(model, "T1_4", 0.0, (0.0,), N, tcd_window=p["t_max"], tcd_points=p["t_points"],
                              horizon=p["horizon"], tolerance=tol)
        verdicts.append(_verdict(f"T1_4 inapplicable (N = {N.label()})", not rep.aggregate.applicable,
                                 reason=rep.aggregate.reason))
    return verdicts, []


def _run_oscillating_weight(cfg, model, p, out, tol):
    tol = p["tolerance"] if tol is None else tol
    N = SyntheticDimension.finite(1.0)
    grid = TcdGrid(tuple(np.linspace(0.0, 2.0 * math.pi, p["t_points"]).tolist()),
                   chi_max=p["chi_max"], chi_points=p["chi_points"])
    ts = np.asarray(grid.t_values)
    _, H_f = slice_mean_curvatures(model, ts, 0.0)
    err = float(np.max(np.abs(H_f)))
    verdicts = [_verdict("H_f = 0 on slices", err <= 1e-12, max_abs=err)]
    thr = bisect_fiber_curvature(model, N, 0.0, grid, p["lo"], p["hi"], tol=p["bisect_tol"])
    above = check_tcd(model.with_fiber(type(model.fiber)(thr.upper)), N, 0.0, grid, tolerance=tol)
    below = check_tcd(model.with_fiber(type(model.fiber)(thr.lower)), N, 0.0, grid, tolerance=tol)
    width = thr.upper - thr.lower
    verdicts.append(_verdict(
        "TCD(0,1) threshold bracketed", width <= p["bisect_tol"] and above.satisfied and not below.satisfied,
        lower=thr.lower, upper=thr.upper, width=width,
        satisfied_above=above.satisfied, satisfied_below=below.satisfied,
    ))
    return verdicts, []


HANDLERS = {
    "tcd": _run_tcd,
    "integrate": _run_integrate,
    "lemma-bound": _run_lemma_bound,
    "theorem": _run_theorem,
    "mcflow": _run_mcflow,
    "rigidity": _run_rigidity,
    "example-1-5": _run_static_exponential_weight,
    "example-1-8": _run_oscillating_weight,
}


def run(config: ScenarioConfig, *, out: str | Path | None = None, tolerance: float | None = None) -> RunReport:
    """Run ``config`` and write ``report.json``, ``timing.json`` and any CSV artifacts.

    ``out`` overrides the config's output directory.  Numerical failures are
    recorded as failed verdicts rather than raised.
    """
    outdir = Path(out) if out is not None else Path(config.output)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    artifacts: list[str] = []
    try:
        model = config.model.build()
        verdicts, artifacts = HANDLERS[config.check](config, model, config.params, outdir, tolerance)
    except Exception as exc:  # numeric failures become verdicts
        verdicts = [_verdict(config.check, False, error=f"{type(exc).__name__}: {exc}")]
    wall = time.perf_counter() - start
    report = RunReport(config.name, config.check, config.config_hash, __version__, _clean(verdicts),
                       ["scenario.scn"] + list(artifacts), wall, str(outdir))
    with _lock_for(outdir):
        (outdir / "scenario.scn").write_text(config.canonical_text(), encoding="utf-8", newline="\n")
        (outdir / "report.json").write_text(to_json(report.to_dict()), encoding="utf-8", newline="\n")
        (outdir / "timing.json").write_text(to_json({"wall_clock_seconds": wall}), encoding="utf-8", newline="\n")
    return report
