import math

import numpy as np
import pytest

from bakrylab.congruence import FProfile, s_of_t
from bakrylab.focusing import (
    FocusingHypotheses,
    FocusingRegime,
    Inapplicable,
    Parameterization,
    SingularityTheorem,
    corollary_bounds,
    theorem_checker,
    tp_desitter_conformal,
    tp_desitter_finite_N,
    tp_desitter_N,
    tp_finite_N,
    tp_nonneg,
)
from bakrylab.geometry import ConstantCurvatureFiber, SpacetimeModel, WeightFunction


def shrinking_sinh(T0, n=4):
    """Warp sinh(T0 - t) over a flat fiber: Ric_tt = -(n-1) and the slices crunch at t = T0."""
    return SpacetimeModel(n, f"(exp({T0} - t) - exp(t - {T0}))/2")


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "expr, n, delta, expected",
    [
        ("0", 4, 0.5, 2.0),
        ("3", 4, 0.5, 2.0),  # the target rescales with the density, so a constant shift cancels
        ("1.5*t", 4, 2.0, math.log(2.0)),  # s = 1 - e^{-t} must reach 1/2
        ("-t", 3, 1.0, math.log(2.0)),  # s = e^t - 1 must reach 1
    ],
)
def test_tp_nonneg_closed_forms(expr, n, delta, expected):
    assert tp_nonneg(FProfile.from_expr(expr), n, delta) == pytest.approx(expected, abs=1e-9)


def test_tp_nonneg_solves_its_defining_equation():
    prof = FProfile.from_expr("sin(2*t)/3 + 0.1*t")
    tp = tp_nonneg(prof, 5, 0.7)
    assert s_of_t(prof, 5, tp) == pytest.approx(math.exp(-2 * prof.f(0) / 4) / 0.7, abs=1e-9)


@pytest.mark.parametrize("c", [-2.0, 0.3, 4.0])
def test_tp_nonneg_shift_invariance(c):
    prof = FProfile.from_expr("sin(t) + 0.2*t")
    assert tp_nonneg(prof.shifted(c), 4, 0.8) == pytest.approx(tp_nonneg(prof, 4, 0.8), abs=1e-9)


def test_tp_nonneg_monotone_in_delta():
    prof = FProfile.from_expr("cos(t)/2")
    tps = [tp_nonneg(prof, 4, d) for d in (0.2, 0.5, 1.0, 3.0)]
    assert all(a > b for a, b in zip(tps, tps[1:]))


def test_tp_nonneg_inapplicable_when_s_saturates():
    with pytest.raises(Inapplicable, match="not future f-complete"):
        tp_nonneg(FProfile.from_expr("exp(t)", convex_from=0.0), 4, 1.0)  # target e^{-2/3} > E1(2/3)
    # without a certificate the horizon is what gives out
    with pytest.raises(Inapplicable, match="does not reach"):
        tp_nonneg(FProfile.from_expr("1.5*t"), 4, 0.5, horizon=50.0)


@pytest.mark.parametrize(
    "fn, args, expected",
    [
        (tp_finite_N, (4, 6.0, 0.5), 10.0),
        (tp_desitter_conformal, (1.0,), math.atanh(0.5)),
        (tp_desitter_N, (3.0,), math.atanh(0.25)),
        (tp_desitter_finite_N, (4, 4.5, 1.0), math.atanh(3.5 / 6.0)),
    ],
)
def test_closed_form_bounds(fn, args, expected):
    assert fn(*args) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("fn", [tp_desitter_conformal, tp_desitter_N, lambda d: tp_finite_N(4, 5.0, d)])
def test_bounds_decrease_in_delta(fn):
    vals = [fn(d) for d in np.linspace(0.1, 5, 20)]
    assert np.all(np.diff(vals) < 0)


def test_finite_N_de_sitter_bound_undefined_at_large_N():
    with pytest.raises(Inapplicable, match="arctanh argument"):
        tp_desitter_finite_N(4, 7.0, 1.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_delta_must_be_positive(bad):
    with pytest.raises(ValueError):
        tp_desitter_conformal(bad)


def test_finite_N_requires_N_above_n():
    with pytest.raises(ValueError):
        tp_finite_N(4, 3.0, 1.0)


# ---------------------------------------------------------------------------
# corollary bounds from closed-form data
# ---------------------------------------------------------------------------

def test_corollary_nonneg_with_upper_bound():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.NONNEG_TCD, 4, 1.0, 0.5, f0=0.0, k=1.5))
    assert v.applicable and v.t_p_predicted == pytest.approx(2 * math.e)
    assert v.parameterization is Parameterization.PROPER_TIME


def test_corollary_nonneg_large_N_ignores_f():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.NONNEG_TCD, 4, 7.0, 2.0))
    assert v.applicable and v.t_p_predicted == 3.0


def test_corollary_nonneg_needs_k():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.NONNEG_TCD, 4, "inf", 0.5))
    assert not v.applicable and v.t_p_predicted is None


def test_corollary_conformal_is_an_s_bound():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONFORMAL, 4, "inf", 1.0, f0=0.75))
    assert v.parameterization is Parameterization.S_PARAMETER
    assert v.threshold == pytest.approx(-2 * math.exp(-0.5))
    assert v.proper_time_bound is None


def test_corollary_conformal_rejects_large_N():
    assert not corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONFORMAL, 4, 6.0, 1.0)).applicable


def test_corollary_constant_via_k_also_bounds_proper_time():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONSTANT, 4, 1.0, 1.0, f0=0.0, k=0.3))
    assert v.applicable and v.proper_time_bound == v.t_p_predicted == pytest.approx(math.atanh(0.5))
    assert v.threshold == pytest.approx(-2 * math.exp(0.2))


def test_corollary_constant_causal_route():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_CONSTANT, 4, "inf", 1.0,
                                            grad_f_future_causal=True))
    assert v.applicable and v.threshold == -2.0


def test_corollary_desitter_N_threshold():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_N, 4, 7.0, 1.0))
    assert v.threshold == pytest.approx(-4.0) and v.t_p_predicted == pytest.approx(math.atanh(0.5))


def test_corollary_rejects_initial_data_above_threshold():
    v = corollary_bounds(FocusingHypotheses(FocusingRegime.DESITTER_N, 4, 7.0, 1.0, x0=-3.9))
    assert not v.applicable and "exceeds threshold" in v.reason


# ---------------------------------------------------------------------------
# theorem checker
# ---------------------------------------------------------------------------

def test_linear_collapse_is_sharp_for_nonneg_theorem():
    # a = 1 - t/2: Ric_tt = 0, H(0) = -3/2, so delta = 1/2 and the slices crunch at t = 2 = 1/delta
    rep = theorem_checker(SpacetimeModel(4, "1 - t/2"), SingularityTheorem.NONNEG, 0.0, [0.0], "inf",
                          tcd_window=1.5)
    agg = rep.aggregate
    assert agg.applicable and agg.bound_respected
    assert agg.t_p_predicted == pytest.approx(2.0, abs=1e-9)
    assert rep.points[0].verdict.observed_blowup.t_blowup == pytest.approx(2.0, abs=1e-8)


def test_decreasing_weight_delays_predicted_focusing():
    m = SpacetimeModel(4, "1 - t/2", weight=WeightFunction.separable("-t/4"))
    rep = theorem_checker(m, "T1_4", 0.0, [0.0], 1.0, tcd_window=1.5)
    v = rep.points[0].verdict
    assert rep.aggregate.applicable and v.bound_respected
    assert v.observed_blowup.t_blowup <= v.t_p_predicted


def test_static_exponential_weight_is_not_a_false_positive():
    m = SpacetimeModel(4, "1", ConstantCurvatureFiber(1.0), WeightFunction.separable("exp(t)", convex_from=0.0))
    rep = theorem_checker(m, "T1_4", 0.0, [0.0], 1.0)
    assert not rep.aggregate.applicable
    assert "incomplete-certified" in rep.aggregate.reason


@pytest.mark.parametrize("T0", [0.7, 2.0])
def test_bounded_weight_theorem_is_sharp(T0):
    rep = theorem_checker(shrinking_sinh(T0), "T1_7", 0.0, [0.0], "inf", tcd_window=0.6 * T0)
    assert rep.aggregate.applicable and rep.aggregate.bound_respected
    assert rep.aggregate.t_p_predicted == pytest.approx(T0, rel=1e-12)
    assert rep.points[0].verdict.observed_blowup.t_blowup == pytest.approx(T0, abs=1e-8)


def test_finite_N_de_sitter_theorem_bound_respected():
    rep = theorem_checker(shrinking_sinh(0.5), "T1_6a", 0.0, [0.0], 4.5, tcd_window=0.4)
    v = rep.points[0].verdict
    delta = 1 / math.tanh(0.5) - 1
    assert v.t_p_predicted == pytest.approx(math.atanh(3.5 / (3 * (1 + delta))), rel=1e-12)
    assert v.bound_respected and v.observed_blowup.t_blowup == pytest.approx(0.5, abs=1e-8)


def test_conformal_theorem_uses_s_parameter():
    rep = theorem_checker(shrinking_sinh(1.0), "T1_6b", 0.0, [0.0], 1.0, tcd_window=0.8)
    assert rep.aggregate.parameterization is Parameterization.S_PARAMETER
    assert rep.aggregate.applicable and rep.aggregate.bound_respected


def test_strict_inequality_fails_on_the_boundary():
    # a = e^{-t}: H_f = -(n-1) exactly, so the strict hypothesis fails
    rep = theorem_checker(SpacetimeModel(4, "exp(-t)"), "T1_6a", 0.0, [0.0], 6.0)
    assert not rep.aggregate.applicable and "H_f < -(n-1)" in rep.aggregate.reason


def test_dimension_regime_mismatch_is_reported():
    rep = theorem_checker(shrinking_sinh(1.0), "T1_7", 0.0, [0.0], 6.0)
    assert not rep.aggregate.applicable and rep.points == ()
    rep = theorem_checker(shrinking_sinh(1.0), "T1_6a", 0.0, [0.0], -1.0)
    assert not rep.aggregate.applicable


def test_tcd_failure_blocks_the_verdict():
    # a = e^{-t/2} has Ric_tt = -3/4 < 0
    rep = theorem_checker(SpacetimeModel(4, "exp(-t/2)"), "T1_4", 0.0, [0.0, 1.0], 1.0, tcd_window=1.0)
    assert not rep.global_checks[0].passed
    assert not rep.aggregate.applicable and "TCD" in rep.aggregate.reason


def test_report_serializes():
    rep = theorem_checker(shrinking_sinh(1.0), "T1_7", 0.0, [0.0, 0.5], "inf", tcd_window=0.5)
    d = rep.to_dict()
    assert d["theorem"] == "T1_7" and len(d["points"]) == 2
    assert d["aggregate"]["parameterization"] in ("proper-time", "s-parameter")
    assert any("not verified" in a for a in d["assumptions"])
