import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bakrylab.geometry import (
    ConstantCurvatureFiber,
    DomainError,
    SpacetimeModel,
    SyntheticDimension,
    TabulatedFiber,
    TcdGrid,
    WeightFunction,
    bisect_fiber_curvature,
    cauchy_schwarz_gap,
    cauchy_schwarz_residual,
    check_tcd,
    ric_frame,
    ric_general,
    ric_mixed,
    ric_time_time,
    slice_mean_curvatures,
)

INF = SyntheticDimension.infinite()


def einstein_static(n=4):
    return SpacetimeModel(n, "1", ConstantCurvatureFiber(1.0), WeightFunction.separable("exp(t)", convex_from=0.0))


def oscillating_weight_model(curvature=1.0):
    return SpacetimeModel(3, "exp(sin(t)/4)", ConstantCurvatureFiber(curvature), WeightFunction.separable("sin(t)/2"))


# ---------------------------------------------------------------------------
# independent symbolic oracle
# ---------------------------------------------------------------------------

def sympy_bakry_emery(warp: str, weight: str, k: float, n: int, N, point):
    """Ric + Hess f - df df/(N-n) in the orthonormal frame, from sympy in a conformally flat chart."""
    t = sp.Symbol("t")
    ys = sp.symbols(f"y1:{n}")
    coords = (t,) + ys
    loc = {"t": t, "y": ys[0], "exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "tanh": sp.tanh, "pow": sp.Pow}
    a = sp.sympify(warp, locals=loc)
    f = sp.sympify(weight, locals=loc)
    conf = 1 / (1 + sp.Rational(k).limit_denominator() * sum(y * y for y in ys) / 4) ** 2
    g = sp.diag(-1, *([a * a * conf] * (n - 1)))
    ginv = g.inv()
    gam = [[[sum(ginv[i, l] * (sp.diff(g[l, j], coords[m]) + sp.diff(g[l, m], coords[j]) - sp.diff(g[j, m], coords[l]))
                 for l in range(n)) / 2 for m in range(n)] for j in range(n)] for i in range(n)]
    subs = dict(zip(coords, point))
    R = sp.zeros(n, n)
    for b in range(n):
        for d in range(b, n):
            expr = 0
            for a_ in range(n):
                expr += sp.diff(gam[a_][b][d], coords[a_]) - sp.diff(gam[a_][a_][b], coords[d])
                for e in range(n):
                    expr += gam[a_][a_][e] * gam[e][b][d] - gam[a_][d][e] * gam[e][a_][b]
            hess = sp.diff(f, coords[b], coords[d]) - sum(gam[c][b][d] * sp.diff(f, coords[c]) for c in range(n))
            expr += hess
            if N != "inf":
                expr -= sp.diff(f, coords[b]) * sp.diff(f, coords[d]) / (N - n)
            R[b, d] = R[d, b] = float(expr.subs(subs).evalf())
    gdiag = np.array([abs(float(g[i, i].subs(subs))) for i in range(n)])
    s = 1 / np.sqrt(gdiag)
    return np.array(R.tolist(), dtype=float) * np.outer(s, s)


def test_oracle_reproduces_de_sitter():
    # de Sitter: a = cosh t over the unit sphere, Ric = (n-1) g
    R = sympy_bakry_emery("(exp(t)+exp(-t))/2", "0", 1, 3, "inf", (0.3, 0.2, -0.1))
    np.testing.assert_allclose(R, np.diag([-2.0, 2.0, 2.0]), atol=1e-12)


ORACLE_CASES = [
    ("exp(0.3*t) + 0.1*sin(t)", "0.4*t*t", 1.0, 3, "inf", (0.4, 0.1, 0.2)),
    ("1 + 0.2*t", "exp(t)", 0.0, 3, -2.0, (0.2, 0.0, 0.0)),
    ("exp(sin(t)/4)", "sin(t)/2", 1.0, 3, 1.0, (1.1, 0.3, -0.2)),
    ("exp(-t)", "2*t", -1.0, 4, 6.0, (0.5, 0.1, 0.0, 0.2)),
    ("exp(0.2*t*y)", "t*y/2", 0.0, 3, 1.0, (0.3, 0.4, 0.1)),  # twisted, non-separable weight
]


@pytest.mark.parametrize("warp, weight, k, n, N, point", ORACLE_CASES)
def test_fd_matches_symbolic_oracle(warp, weight, k, n, N, point):
    model = SpacetimeModel(n, warp, ConstantCurvatureFiber(k), WeightFunction.joint(weight))
    oracle = sympy_bakry_emery(warp, weight, k, n, N, point)
    fd = ric_frame(model, SyntheticDimension.coerce(N), point[0], point[1:], h=2e-3)
    np.testing.assert_allclose(fd, oracle, atol=2e-5)


@pytest.mark.parametrize("warp, weight, k, n, N, point", [c for c in ORACLE_CASES if "y" not in c[0] + c[1]])
def test_closed_form_matches_symbolic_oracle(warp, weight, k, n, N, point):
    model = SpacetimeModel(n, warp, ConstantCurvatureFiber(k), WeightFunction.separable(weight))
    oracle = sympy_bakry_emery(warp, weight, k, n, N, point)
    chi = 0.7
    X = np.zeros(n)
    X[0], X[1] = math.cosh(chi), math.sinh(chi)
    expected = X @ oracle @ X
    assert ric_general(model, N, X, point[0], method="closed") == pytest.approx(expected, rel=1e-10, abs=1e-10)
    assert ric_time_time(model, N, point[0]) == pytest.approx(oracle[0, 0], rel=1e-10, abs=1e-10)


# ---------------------------------------------------------------------------
# synthetic dimension
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("value", [1.5, 2.0, 4.0])
def test_dimension_rejects_gap_interval(value):
    with pytest.raises(ValueError):
        SyntheticDimension.finite(value).validate(4)


@pytest.mark.parametrize("value", [-3.0, 0.0, 1.0, 4.0001, 100.0])
def test_dimension_accepts_admissible(value):
    assert SyntheticDimension.finite(value).validate(4).value == value


def test_infinite_regime_is_exact_zero():
    assert INF.inv_gap(4) == 0.0
    assert SyntheticDimension.coerce("inf") == INF
    assert SyntheticDimension.coerce(None) == INF
    assert SyntheticDimension.coerce(float("inf")) == INF


# ---------------------------------------------------------------------------
# closed-form values
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "N, expected",
    [(INF, 1.0), (SyntheticDimension.finite(-2.0), 1.0 + 1.0 / 6.0)],
)
def test_einstein_static_time_time(N, expected):
    assert ric_time_time(einstein_static(), N, 0.0) == pytest.approx(expected, rel=1e-15)


def test_einstein_static_time_time_along_t():
    t = np.linspace(0, 2, 5)
    np.testing.assert_allclose(ric_time_time(einstein_static(), -2.0, t), np.exp(t) + np.exp(2 * t) / 6, rtol=1e-14)


def test_flat_product_has_zero_curvature():
    model = SpacetimeModel(4, "1")
    assert ric_time_time(model, INF, 1.3, 0.2) == 0.0
    assert ric_general(model, 5.0, (math.cosh(2), math.sinh(2), 0, 0), 0.0) == 0.0


def test_slice_mean_curvatures_known_values():
    H, H_f = slice_mean_curvatures(einstein_static(), 0.0)
    assert (H, H_f) == (0.0, -1.0)
    t = np.linspace(0, 3, 7)
    H, H_f = slice_mean_curvatures(einstein_static(), t)
    np.testing.assert_array_equal(H_f, -np.exp(t))
    H, H_f = slice_mean_curvatures(oscillating_weight_model(), np.linspace(0, 7, 50))
    assert np.max(np.abs(H_f)) < 1e-14
    for n in (2, 3, 5):
        H, H_f = slice_mean_curvatures(SpacetimeModel(n, "exp(-t)", weight=WeightFunction.separable("3")), 0.8)
        assert H == pytest.approx(-(n - 1)) and H_f == pytest.approx(-(n - 1))


def test_domain_errors():
    with pytest.raises(DomainError):
        ric_time_time(SpacetimeModel(4, "t"), INF, -1.0)
    bounded = SpacetimeModel(4, "1", domain=((0.0, 1.0), (-1.0, 1.0)))
    with pytest.raises(DomainError):
        ric_frame(bounded, INF, 0.001, 0.0)
    with pytest.raises(DomainError):
        ric_frame(SpacetimeModel(4, "1", TabulatedFiber(0.0)), INF, 0.5)


def test_ric_general_rejects_non_timelike():
    with pytest.raises(ValueError):
        ric_general(einstein_static(), INF, (0.0, 1.0, 0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        ric_general(einstein_static(), INF, (1.0, 1.0, 0.0, 0.0), 0.0)


def test_time_direction_paths_agree():
    m = oscillating_weight_model()
    for t in (0.1, 1.7):
        assert ric_general(m, 1.0, (1, 0, 0), t) == pytest.approx(float(ric_time_time(m, 1.0, t)), abs=1e-15)


# ---------------------------------------------------------------------------
# finite-difference convergence
# ---------------------------------------------------------------------------

def _random_warped(rng):
    c1, c2, c3 = rng.uniform(-0.5, 0.5, 3)
    k = rng.choice([-1.0, 0.0, 1.0])
    return SpacetimeModel(4, f"exp({c1}*t) + {abs(c2)}*sin(t) + 1", ConstantCurvatureFiber(k),
                          WeightFunction.separable(f"{c3}*t*t + sin(t)/3"))


def test_fd_error_halving_ratio():
    rng = np.random.default_rng(20240611)
    ratios = []
    for _ in range(5):
        m = _random_warped(rng)
        t = float(rng.uniform(0.2, 1.0))
        chi = float(rng.uniform(0, 1.5))
        X = (math.cosh(chi), math.sinh(chi) / math.sqrt(2), math.sinh(chi) / math.sqrt(2), 0.0)
        exact = ric_general(m, -1.0, X, t, method="closed")
        e1 = abs(ric_general(m, -1.0, X, t, method="fd", h=0.04) - exact)
        e2 = abs(ric_general(m, -1.0, X, t, method="fd", h=0.02) - exact)
        ratios.append(e1 / e2)
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


@pytest.mark.parametrize("nu", [-1e3, -1e6])
def test_regime_continuity(nu):
    m = _random_warped(np.random.default_rng(3))
    X = (math.cosh(0.4), math.sinh(0.4), 0.0, 0.0)
    t = 0.6
    fp = float(m.weight.f_t(t))
    diff = abs(ric_general(m, nu, X, t) - ric_general(m, INF, X, t))
    assert diff <= 10 * fp * fp / abs(nu - 4)


def test_mixed_slot_vanishes_for_separable_twisted_weight():
    m = SpacetimeModel(3, "exp((sin(t) + cos(y))/2)", ConstantCurvatureFiber(0.0),
                       WeightFunction.separable("sin(t)", "cos(y)"))
    assert abs(ric_mixed(m, 1.0, 0.4, 0.3, h=1e-3)) < 1e-8


# ---------------------------------------------------------------------------
# TCD sampling
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [-2.0, 1.0, "inf"])
def test_einstein_static_satisfies_tcd0(N):
    rep = check_tcd(einstein_static(), N, 0.0, TcdGrid.linspace(0, 3, 16))
    assert rep.satisfied and rep.worst_margin >= 0


def test_einstein_static_fails_tcd0_above_n():
    # e^t - e^{2t}/(N-n) turns negative once e^t > N - n
    rep = check_tcd(einstein_static(), 7.0, 0.0, TcdGrid.linspace(0, 3, 16))
    assert not rep.satisfied
    assert ric_time_time(einstein_static(), 7.0, math.log(3.0)) == pytest.approx(0.0, abs=1e-12)


def test_flat_product_margin_is_zero():
    rep = check_tcd(SpacetimeModel(4, "1"), INF, 0.0, TcdGrid.linspace(0, 1, 5))
    assert rep.worst_margin == 0.0 and rep.satisfied
    assert "not a proof" in rep.certificate


def test_null_limit_is_reported():
    # expanding flat slices with f = 0: C < 0 for large boosts, so the margin is unbounded below
    m = SpacetimeModel(4, "exp(-2*t)", ConstantCurvatureFiber(-10.0))
    rep = check_tcd(m, INF, 0.0, TcdGrid.linspace(0, 1, 5))
    assert rep.worst_margin == -math.inf and not rep.satisfied and rep.null_coefficient < 0


def test_fd_and_closed_tcd_agree():
    m = oscillating_weight_model(0.6)
    grid = TcdGrid.linspace(0.2, 1.4, 4, chi_points=11, h=1e-3)
    a = check_tcd(m, 1.0, 0.0, grid, method="closed")
    b = check_tcd(m, 1.0, 0.0, grid, method="fd")
    assert a.worst_margin == pytest.approx(b.worst_margin, abs=1e-5)


def test_oscillating_weight_threshold_against_dense_oracle():
    # oracle: margin = sinh^2(chi) (f''/2 + lambda_h exp(-f)) with a = exp(f/2), n = 3, N = 1,
    # so the threshold is the dense maximum of -f'' exp(f)/2 over one period
    tt = np.linspace(0, 2 * np.pi, 200001)
    oracle = float(np.max(np.sin(tt) / 4 * np.exp(np.sin(tt) / 2)))
    assert oracle == pytest.approx(math.exp(0.5) / 4, rel=1e-9)
    grid = TcdGrid(tuple(np.linspace(0, 2 * np.pi, 401).tolist()), chi_points=11)
    thr = bisect_fiber_curvature(oscillating_weight_model(), 1.0, 0.0, grid, 0.0, 2.0, tol=1e-3)
    assert thr.lower <= oracle <= thr.upper
    assert thr.upper - thr.lower <= 1e-3


# ---------------------------------------------------------------------------
# Cauchy-Schwarz step
# ---------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(
    st.floats(-50, 50), st.floats(-50, 50), st.integers(2, 10), st.floats(1e-3, 100),
)
def test_cauchy_schwarz_gap_nonnegative(H, fp, n, excess):
    N = n + excess
    gap = cauchy_schwarz_gap(H, fp, n, N)
    k, m = n - 1, N - n
    closed = (H * m + fp * k) ** 2 / (k * m * (m + k))
    assert gap >= -1e-9 * (1 + H * H + fp * fp)
    assert gap == pytest.approx(closed, rel=1e-6, abs=1e-8 * (1 + H * H + fp * fp))


def test_cauchy_schwarz_equality_case():
    n, N, fp = 4, 6.0, 2.0
    H = -(n - 1) * fp / (N - n)
    assert cauchy_schwarz_residual(H, fp, n, N) == 0.0
    assert abs(cauchy_schwarz_gap(H, fp, n, N)) < 1e-15
    with pytest.raises(ValueError):
        cauchy_schwarz_gap(1.0, 1.0, 4, 3.0)
